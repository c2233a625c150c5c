"""Step-function graphons of SBM parameters.

An SBM with proportions pi and connectivities gamma defines a piecewise
constant function on the unit square: split [0,1] at the prefix sums of pi
and let the function equal gamma[k,l] on the rectangle (k,l). Two SBMs with
different block counts become comparable through the L2 distance of these
functions, which is what this module computes, along with the block
orderings minimizing that distance (used when merging clusters) and a
canonical ordering by decreasing expected out-degree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .sbm import SbmParams
from .validation import as_permutation

__all__ = [
    "StepGraphon", "graphon_of", "graphon_distance", "step_graphon_distance",
    "canonical_permutation", "match_blocks", "block_degrees",
    "MARGINAL_TIE_TOL", "DEFAULT_MATCH_BUDGET",
]

# two marginals closer than this are treated as tied when ordering blocks
MARGINAL_TIE_TOL = 1e-10

# exhaustive block matching runs when K1! * K2! is at most this
DEFAULT_MATCH_BUDGET = 50_000


@dataclass(frozen=True)
class StepGraphon:
    """Piecewise-constant function on [0,1]^2: breaks are the K+1 cell
    boundaries 0 = q_0 < ... < q_K = 1 and values[k, l] is the function
    value on [q_k, q_{k+1}) x [q_l, q_{l+1})."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=np.float64).copy()
        values = np.asarray(self.values, dtype=np.float64).copy()
        if breaks.ndim != 1 or breaks.size < 2:
            raise ValueError("breaks must be a 1-D array of at least 2 boundaries")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("breaks must be strictly increasing")
        if abs(breaks[0]) > 1e-12 or abs(breaks[-1] - 1.0) > 1e-12:
            raise ValueError("breaks must run from 0 to 1 (tolerance 1e-12)")
        breaks[0] = 0.0
        breaks[-1] = 1.0
        k = breaks.size - 1
        if values.shape != (k, k):
            raise ValueError(f"values must be {k}x{k} for {k + 1} breaks, "
                             f"got {values.shape}")
        breaks.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return self.breaks.size - 1

    def _cell_of(self, u) -> np.ndarray:
        idx = np.searchsorted(self.breaks, np.asarray(u, dtype=float),
                              side="right") - 1
        return np.clip(idx, 0, self.k - 1)

    def evaluate(self, u, v) -> np.ndarray:
        """Pointwise values at coordinate arrays u, v (broadcast together)."""
        return self.values[self._cell_of(u), self._cell_of(v)]


def graphon_of(params: SbmParams) -> StepGraphon:
    """The step graphon of one SBM: breaks at prefix sums of pi, cell
    values copied from gamma."""
    breaks = np.empty(params.k + 1, dtype=np.float64)
    breaks[0] = 0.0
    np.cumsum(params.pi, out=breaks[1:])
    breaks[-1] = 1.0
    return StepGraphon(breaks, params.gamma)


def step_graphon_distance(g1: StepGraphon, g2: StepGraphon) -> float:
    """Exact L2 distance between two step graphons via the common
    refinement of their break sequences."""
    breaks = np.union1d(g1.breaks, g2.breaks)
    w = np.diff(breaks)
    mids = (breaks[:-1] + breaks[1:]) / 2.0
    i1 = g1._cell_of(mids)
    i2 = g2._cell_of(mids)
    diff = g1.values[np.ix_(i1, i1)] - g2.values[np.ix_(i2, i2)]
    d2 = float(np.einsum("kl,k,l->", diff * diff, w, w))
    return math.sqrt(max(d2, 0.0))


def graphon_distance(p1: SbmParams, p2: SbmParams) -> float:
    """L2 distance between the step graphons of two SBMs. The block counts
    may differ. Zero exactly when the two step functions coincide as
    functions, label order included; this is a pseudometric on parameters.
    """
    return step_graphon_distance(graphon_of(p1), graphon_of(p2))


def block_degrees(params: SbmParams):
    """Expected in- and out-edge probabilities per block:
    d_in[k] = sum_l pi_l gamma[l, k], d_out[k] = sum_l pi_l gamma[k, l].
    Returns (d_in, d_out)."""
    d_in = params.gamma.T @ params.pi
    d_out = params.gamma @ params.pi
    return d_in, d_out


def _tiered_order(keys, tol: float) -> np.ndarray:
    """Order indices by the first key decreasing; groups tied within tol
    (chained along the sorted sequence) fall through to the next key, and
    exhausted keys fall back to increasing original index."""
    n = keys[0].size
    out = []

    def rec(indices, level):
        if indices.size == 1:
            out.append(int(indices[0]))
            return
        if level == len(keys):
            out.extend(int(i) for i in np.sort(indices))
            return
        vals = keys[level][indices]
        order = np.argsort(-vals, kind="stable")
        idx_sorted = indices[order]
        vals_sorted = vals[order]
        start = 0
        for i in range(1, idx_sorted.size + 1):
            if i == idx_sorted.size or vals_sorted[i - 1] - vals_sorted[i] > tol:
                rec(idx_sorted[start:i], level + 1)
                start = i

    rec(np.arange(n, dtype=np.int64), 0)
    return np.array(out, dtype=np.int64)


def canonical_permutation(params: SbmParams,
                          tie_tol: float = MARGINAL_TIE_TOL) -> np.ndarray:
    """Block ordering by decreasing expected out-degree; ties within
    tie_tol broken by decreasing expected in-degree, then by decreasing
    block proportion, then by original block index. Applying the returned
    permutation yields a normal form: re-canonicalizing it gives the
    identity."""
    d_in, d_out = block_degrees(params)
    return _tiered_order([d_out, d_in, params.pi], tie_tol)


_PERM_LIST_CACHE: dict[int, np.ndarray] = {}


def _all_perms(k: int) -> np.ndarray:
    """All permutations of range(k) in lexicographic order, shape (k!, k)."""
    perms = _PERM_LIST_CACHE.get(k)
    if perms is None:
        perms = np.array(list(itertools.permutations(range(k))), dtype=np.int64)
        perms.setflags(write=False)
        _PERM_LIST_CACHE[k] = perms
    return perms


def _interval_arrays(params: SbmParams):
    """Per-ordering block intervals of one SBM: lo[x, a] and hi[x, a] bound
    original block a's interval under ordering x (lexicographic order over
    all K! orderings), and c is the ordering-invariant integral of the
    squared graphon. Cached on the params object."""
    cached = getattr(params, "_interval_cache", None)
    if cached is not None:
        return cached
    pi, gamma, k = params.pi, params.gamma, params.k
    perms = _all_perms(k)
    widths = pi[perms]
    starts = np.zeros_like(widths)
    np.cumsum(widths[:, :-1], axis=1, out=starts[:, 1:])
    inv = np.argsort(perms, axis=1)
    lo = np.take_along_axis(starts, inv, axis=1)
    hi = lo + pi[None, :]
    c = float(np.einsum("ab,a,b->", gamma * gamma, pi, pi))
    cached = (np.ascontiguousarray(lo), np.ascontiguousarray(hi), c)
    object.__setattr__(params, "_interval_cache", cached)
    return cached


def match_blocks(p1: SbmParams, p2: SbmParams,
                 budget: int = DEFAULT_MATCH_BUDGET):
    """Block orderings of two SBMs minimizing their graphon distance.

    When K1! * K2! <= budget the search is exhaustive over all ordering
    pairs (ties in the squared distance broken by the lexicographically
    smallest pair); otherwise both SBMs are put in canonical order as a
    heuristic. Returns (perm1, perm2, distance) where the distance is the
    one achieved by the returned pair, recomputed exactly.
    """
    k1, k2 = p1.k, p2.k
    if k1 == 1 and k2 == 1:
        d = float(p1.gamma[0, 0]) - float(p2.gamma[0, 0])
        one = np.zeros(1, dtype=np.int64)
        return one, one.copy(), math.sqrt(d * d)
    if math.factorial(k1) * math.factorial(k2) <= budget:
        lo1, hi1, c1 = _interval_arrays(p1)
        lo2, hi2, c2 = _interval_arrays(p2)
        cross = np.empty((lo1.shape[0], lo2.shape[0]), dtype=np.float64)
        _kernels.match_cross(lo1, hi1, lo2, hi2, p1.gamma, p2.gamma, cross)
        d2 = (c1 + c2) - 2.0 * cross
        x, y = np.unravel_index(int(np.argmin(d2)), d2.shape)
        perm1 = _all_perms(k1)[x].copy()
        perm2 = _all_perms(k2)[y].copy()
    else:
        perm1 = canonical_permutation(p1)
        perm2 = canonical_permutation(p2)
    dist = graphon_distance(p1.permuted(perm1), p2.permuted(perm2))
    return perm1, perm2, dist


def apply_to_labels(labels: np.ndarray, perm) -> np.ndarray:
    """Relabel node labels consistently with SbmParams.permuted: if new
    block k is old block perm[k], old label z becomes inv(perm)[z]."""
    perm = as_permutation(perm, None)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size, dtype=perm.dtype)
    return inv[np.asarray(labels, dtype=np.int64)]
