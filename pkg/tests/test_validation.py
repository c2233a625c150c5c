import numpy as np
import pytest

from sbmix import validation


def test_as_adjacency_accepts_binary_square():
    a = validation.as_adjacency([[0, 1], [0, 0]])
    assert a.shape == (2, 2)
    assert a.dtype == np.uint8
    assert a[0, 1] == 1 and a[1, 0] == 0


def test_as_adjacency_zeroes_diagonal_rejections():
    with pytest.raises(ValueError):
        validation.as_adjacency([[1, 0], [0, 0]])
    with pytest.raises(ValueError):
        validation.as_adjacency([[0, 2], [0, 0]])
    with pytest.raises(ValueError):
        validation.as_adjacency(np.zeros((2, 3)))


def test_as_edge_array_bounds():
    # bounds-checking only; duplicates are collapsed by Network itself
    e = validation.as_edge_array([(0, 1), (1, 0), (0, 1)], n=2)
    assert e.shape == (3, 2)
    with pytest.raises(ValueError):
        validation.as_edge_array([(0, 2)], n=2)
    with pytest.raises(ValueError):
        validation.as_edge_array([(1, 1)], n=3)


def test_check_labels():
    z = validation.check_labels([0, 1, 0], n=3, k=2)
    assert z.dtype == np.int64
    with pytest.raises(ValueError):
        validation.check_labels([0, 2], n=2, k=2)
    with pytest.raises(ValueError):
        validation.check_labels([0], n=2, k=2)
    with pytest.raises(ValueError):
        validation.check_labels([-1, 0], n=2, k=2)


def test_check_probability_vector_tolerance():
    p = validation.check_probability_vector([0.25, 0.75])
    assert p.sum() == 1.0
    # tol 1e-12 is the contract boundary
    validation.check_probability_vector([0.5, 0.5 + 5e-13])
    with pytest.raises(ValueError):
        validation.check_probability_vector([0.5, 0.6])
    with pytest.raises(ValueError):
        validation.check_probability_vector([1.2, -0.2])


def test_check_probability_matrix():
    g = validation.check_probability_matrix([[0.0, 1.0], [0.5, 0.25]])
    assert g.shape == (2, 2)
    with pytest.raises(ValueError):
        validation.check_probability_matrix([[0.5, 1.5], [0.0, 0.0]])
    with pytest.raises(ValueError):
        validation.check_probability_matrix([[0.5, 0.5]])


def test_permutation_helpers():
    assert validation.is_permutation([2, 0, 1])
    assert validation.is_permutation([0])
    assert not validation.is_permutation([0, 0])
    assert not validation.is_permutation([1, 2])
    assert not validation.is_permutation([0, 1], k=3)
    p = validation.as_permutation([1, 0], k=2)
    assert p.dtype == np.int64
    with pytest.raises(ValueError):
        validation.as_permutation([1, 1])
