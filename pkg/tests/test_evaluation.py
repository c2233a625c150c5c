"""Metrics, synthetic scenarios, the spectral baseline, and experiment
reports."""

import json
import math

import numpy as np
import pytest

from sbmix.evaluation import (REPORT_COLUMNS, Scenario, SizeLaw,
                              adjusted_rand_index, gsc_baseline,
                              matched_distance_matrix, run_experiment,
                              simulate, write_report)
from sbmix.sbm import SbmParams

import oracles


def scenario_two_groups(m=8, seed=3):
    dense = SbmParams([1.0], [[0.85]])
    sparse = SbmParams([1.0], [[0.05]])
    return Scenario(name="two-groups", components=(dense, sparse),
                    m_count=m, size_law=SizeLaw("fixed", n=25),
                    counts=(m // 2, m - m // 2), seed=seed)


class TestAdjustedRandIndex:
    def test_identical(self):
        u = [0, 0, 1, 1, 2, 2, 0, 1, 2, 0]
        assert adjusted_rand_index(u, u) == 1.0

    def test_relabeled_identical(self):
        u = [0, 0, 1, 1, 2, 2]
        v = [2, 2, 0, 0, 1, 1]
        assert adjusted_rand_index(u, v) == 1.0

    def test_one_cluster_vs_singletons(self):
        u = [0] * 6
        v = list(range(6))
        assert adjusted_rand_index(u, v) == 0.0

    def test_matches_pair_counting_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            u = rng.integers(0, 3, 8)
            v = rng.integers(0, 4, 8)
            assert adjusted_rand_index(u, v) == pytest.approx(
                oracles.brute_ari(u, v), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        u = rng.integers(0, 3, 12)
        v = rng.integers(0, 3, 12)
        assert adjusted_rand_index(u, v) == adjusted_rand_index(v, u)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            adjusted_rand_index([0, 1], [0, 1, 2])


class TestSizeLaw:
    def test_fixed(self):
        law = SizeLaw("fixed", n=12)
        sizes = law.draw(5, np.random.default_rng(0))
        assert np.all(sizes == 12) and sizes.shape == (5,)

    def test_uniform_range(self):
        law = SizeLaw("uniform", low=10, high=20)
        sizes = law.draw(200, np.random.default_rng(1))
        assert sizes.min() >= 10 and sizes.max() <= 20
        assert len(np.unique(sizes)) > 5

    def test_list(self):
        law = SizeLaw("list", sizes=(4, 7, 9))
        assert list(law.draw(3, np.random.default_rng(2))) == [4, 7, 9]
        with pytest.raises(ValueError):
            law.draw(2, np.random.default_rng(2))

    def test_validation(self):
        with pytest.raises(ValueError):
            SizeLaw("fixed")
        with pytest.raises(ValueError):
            SizeLaw("uniform", low=5, high=3)
        with pytest.raises(ValueError):
            SizeLaw("list", sizes=(3, 0))
        with pytest.raises(ValueError):
            SizeLaw("poisson", n=5)

    def test_json_round_trip(self):
        for law in (SizeLaw("fixed", n=9),
                    SizeLaw("uniform", low=2, high=11),
                    SizeLaw("list", sizes=(5, 6))):
            assert SizeLaw.from_json_obj(law.to_json_obj()) == law


class TestScenario:
    def test_validation(self):
        comp = SbmParams([1.0], [[0.5]])
        law = SizeLaw("fixed", n=10)
        with pytest.raises(ValueError):
            Scenario("x", (), 5, law, weights=(1.0,))
        with pytest.raises(ValueError):
            Scenario("x", (comp,), 5, law)  # neither weights nor counts
        with pytest.raises(ValueError):
            Scenario("x", (comp,), 5, law, weights=(1.0,), counts=(5,))
        with pytest.raises(ValueError):
            Scenario("x", (comp,), 5, law, weights=(0.7,))
        with pytest.raises(ValueError):
            Scenario("x", (comp,), 5, law, counts=(4,))
        with pytest.raises(ValueError):
            Scenario("x", (comp,), 5, law, weights=(1.0,),
                     outlier_fraction=1.0)

    def test_outlier_count_and_counts_budget(self):
        comp = SbmParams([1.0], [[0.5]])
        law = SizeLaw("fixed", n=10)
        scen = Scenario("x", (comp,), 10, law, counts=(8,),
                        outlier_fraction=0.19)
        assert scen.n_outliers == 2
        with pytest.raises(ValueError):
            Scenario("x", (comp,), 10, law, counts=(10,),
                     outlier_fraction=0.19)

    def test_with_m_rescales_counts(self):
        scen = scenario_two_groups(m=8)
        grown = scen.with_m(20)
        assert grown.m_count == 20
        assert grown.counts == (10, 10)
        comp = SbmParams([1.0], [[0.5]])
        outl = Scenario("o", (comp,), 10, SizeLaw("fixed", n=5),
                        counts=(8,), outlier_fraction=0.19)
        shrunk = outl.with_m(5)
        assert shrunk.counts == (4,)
        assert shrunk.n_outliers == 1
        weighted = Scenario("w", (comp,), 4, SizeLaw("fixed", n=5),
                            weights=(1.0,))
        assert weighted.with_m(9).m_count == 9

    def test_json_round_trip(self):
        scen = scenario_two_groups()
        back = Scenario.from_json(scen.to_json())
        assert back == scen
        weighted = Scenario("w", scen.components, 6,
                            SizeLaw("uniform", low=5, high=9),
                            weights=(0.25, 0.75), outlier_fraction=0.2,
                            outlier_k_range=(2, 4), seed=11)
        assert Scenario.from_json(weighted.to_json()) == weighted


class TestSimulate:
    def test_shapes_and_purity(self):
        scen = scenario_two_groups(m=9)
        sim = simulate(scen, seed=5)
        assert sim.collection.m_count == 9
        assert sim.u.shape == (9,)
        assert len(sim.labels) == 9 and len(sim.params) == 9
        assert sim.components == scen.components
        for net, z, u in zip(sim.collection.networks, sim.labels, sim.u):
            assert net.n == 25
            assert len(z) == net.n
            assert int(np.max(z)) < scen.components[int(u)].k

    def test_exact_counts(self):
        scen = scenario_two_groups(m=9)
        sim = simulate(scen, seed=6)
        assert int(np.sum(sim.u == 0)) == 4
        assert int(np.sum(sim.u == 1)) == 5

    def test_weighted_membership(self):
        comp = (SbmParams([1.0], [[0.8]]), SbmParams([1.0], [[0.1]]))
        scen = Scenario("w", comp, 200, SizeLaw("fixed", n=5),
                        weights=(0.2, 0.8), seed=1)
        sim = simulate(scen)
        frac = float(np.mean(sim.u == 1))
        assert 0.7 < frac < 0.9

    def test_outliers_are_singletons_with_own_params(self):
        comp = (SbmParams([1.0], [[0.8]]),)
        scen = Scenario("o", comp, 10, SizeLaw("fixed", n=8),
                        counts=(8,), outlier_fraction=0.19,
                        outlier_k_range=(2, 3), seed=2)
        sim = simulate(scen)
        outlier_ids = sim.u[sim.u >= 1]
        assert len(outlier_ids) == 2
        assert len(set(int(x) for x in outlier_ids)) == 2  # one id each
        for mm in np.flatnonzero(sim.u >= 1):
            assert sim.params[mm] is not comp[0]
            assert 2 <= sim.params[mm].k <= 3

    def test_determinism(self):
        scen = scenario_two_groups()
        s1 = simulate(scen, seed=9)
        s2 = simulate(scen, seed=9)
        d1 = [g.content_digest() for g in s1.collection.networks]
        d2 = [g.content_digest() for g in s2.collection.networks]
        assert d1 == d2
        assert np.array_equal(s1.u, s2.u)
        s3 = simulate(scen, seed=10)
        assert [g.content_digest() for g in s3.collection.networks] != d1

    def test_default_seed_is_scenario_seed(self):
        scen = scenario_two_groups(seed=33)
        a = simulate(scen)
        b = simulate(scen, seed=33)
        assert [g.content_digest() for g in a.collection.networks] == \
            [g.content_digest() for g in b.collection.networks]


class TestMatchedDistanceMatrix:
    def test_symmetric_zero_diagonal(self):
        rng = np.random.default_rng(3)
        ps = [oracles.random_params(rng, int(rng.integers(1, 4)))
              for _ in range(5)]
        d = matched_distance_matrix(ps)
        assert np.allclose(d, d.T)
        assert np.all(np.diag(d) == 0.0)
        assert np.all(d >= 0.0)

    def test_permuted_params_at_zero(self):
        rng = np.random.default_rng(4)
        p = oracles.random_params(rng, 3)
        d = matched_distance_matrix([p, p.permuted([2, 0, 1])])
        assert d[0, 1] == 0.0


class TestGscBaseline:
    def test_two_groups_recovered(self):
        scen = scenario_two_groups(m=10)
        sim = simulate(scen, seed=7)
        u_hat = gsc_baseline(sim.collection, sim.params, 2, random_state=0)
        assert adjusted_rand_index(u_hat, sim.u) == 1.0
        assert len(np.unique(u_hat)) == 2

    def test_degenerate_distances_warn(self):
        scen = scenario_two_groups(m=6)
        sim = simulate(scen, seed=8)
        same = [sim.params[0]] * 6
        with pytest.warns(UserWarning):
            u_hat = gsc_baseline(sim.collection, same, 3)
        assert np.all(u_hat == 0)

    def test_c_target_one(self):
        scen = scenario_two_groups(m=6)
        sim = simulate(scen, seed=8)
        assert np.all(gsc_baseline(sim.collection, sim.params, 1) == 0)

    def test_input_validation(self):
        scen = scenario_two_groups(m=6)
        sim = simulate(scen, seed=8)
        with pytest.raises(ValueError):
            gsc_baseline(sim.collection, sim.params[:-1], 2)
        with pytest.raises(ValueError):
            gsc_baseline(sim.collection, sim.params, 0)


class TestRunExperiment:
    def test_zero_replicates(self):
        assert run_experiment(scenario_two_groups(), "hier", 0) == []

    def test_unknown_method_and_missing_c_target(self):
        with pytest.raises(ValueError):
            run_experiment(scenario_two_groups(), "vem", 1)
        with pytest.raises(ValueError):
            run_experiment(scenario_two_groups(), "gsc", 1)

    def test_hier_rows_on_separated_data(self):
        rows = run_experiment(scenario_two_groups(m=8), "hier", 2,
                              base_seed=12)
        assert len(rows) == 2
        for rep, row in enumerate(rows):
            assert set(REPORT_COLUMNS) <= set(row)
            assert row["replicate"] == rep
            assert row["method"] == "hier"
            assert row["C_true"] == 2
            assert row["C_hat"] == 2
            assert row["ari_clusters"] == 1.0
            assert 0.0 <= row["mean_graphon_dist"] < 0.2
            assert row["seconds"] > 0

    def test_methods_see_identical_data(self):
        scen = scenario_two_groups(m=8)
        h = run_experiment(scen, "hier", 2, base_seed=21)
        g = run_experiment(scen, "gsc", 2, c_target=2, base_seed=21)
        for hr, gr in zip(h, g):
            assert hr["C_true"] == gr["C_true"]
            assert gr["C_hat"] == 2
            assert math.isnan(gr["mean_graphon_dist"])
            assert math.isnan(gr["k_hat"])


def test_write_report_round_trips(tmp_path):
    scen = scenario_two_groups(m=6)
    rows = run_experiment(scen, "hier", 1, base_seed=4)
    rows += run_experiment(scen, "gsc", 1, c_target=2, base_seed=4)
    out = tmp_path / "report.tsv"
    write_report(rows, out)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "\t".join(REPORT_COLUMNS)
    assert len(lines) == 3
    first = dict(zip(REPORT_COLUMNS, lines[1].split("\t")))
    assert float(first["ari_clusters"]) == rows[0]["ari_clusters"]
    assert first["M"] == "6"
    second = dict(zip(REPORT_COLUMNS, lines[2].split("\t")))
    assert second["mean_graphon_dist"] == "nan"
