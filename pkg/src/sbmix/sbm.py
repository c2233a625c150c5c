"""Stochastic block models for one cluster of networks sharing parameters.

Covers parameters and priors, sampling, the sufficient count statistics, the
closed-form integrated classification likelihood (ICL) of a labeled cluster,
MAP parameter estimates, and a greedy node-swap ICL maximizer operating on
incremental statistics.

Node labels are plain 0-based int64 arrays, one per network. All Gamma
function work happens in log space through shared lookup tables, so the
incremental updates are bit-consistent with from-scratch evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._tables import lgamma_table
from .graphs import Network
from .validation import (as_permutation, check_labels, check_probability_matrix,
                         check_probability_vector)

__all__ = [
    "SbmParams", "Hyperparams", "CountStats", "SbmState",
    "sample_network", "count_stats", "icl_sbm", "icl_penalty",
    "map_estimate", "swap_delta", "maximize_icl_labels",
]


@dataclass(frozen=True)
class SbmParams:
    """Block proportions pi (length K) and connectivity matrix gamma (K x K)."""

    pi: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        pi = check_probability_vector(self.pi)
        gamma = check_probability_matrix(self.gamma)
        if gamma.shape[0] != pi.size:
            raise ValueError(f"pi has {pi.size} blocks but gamma is {gamma.shape}")
        pi = pi.copy()
        gamma = gamma.copy()
        pi.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "gamma", gamma)

    @property
    def k(self) -> int:
        return self.pi.size

    def permuted(self, perm) -> "SbmParams":
        """Reorder blocks: new block k is old block perm[k]."""
        perm = as_permutation(perm, self.k)
        return SbmParams(self.pi[perm], self.gamma[np.ix_(perm, perm)])

    def to_json_obj(self) -> dict:
        return {"pi": [float(x) for x in self.pi],
                "gamma": [[float(x) for x in row] for row in self.gamma]}

    @classmethod
    def from_json_obj(cls, obj) -> "SbmParams":
        if not isinstance(obj, dict) or "pi" not in obj or "gamma" not in obj:
            raise ValueError("SBM params JSON must be an object with 'pi' and 'gamma'")
        return cls(np.asarray(obj["pi"], dtype=float),
                   np.asarray(obj["gamma"], dtype=float))

    def __eq__(self, other):
        if not isinstance(other, SbmParams):
            return NotImplemented
        return np.array_equal(self.pi, other.pi) and np.array_equal(self.gamma, other.gamma)


@dataclass(frozen=True)
class Hyperparams:
    """Prior hyperparameters: alpha (Dirichlet over block proportions),
    eta/zeta (Beta over connectivities), lam (Dirichlet over cluster
    proportions). All strictly positive; defaults give uniform priors."""

    alpha: float = 1.0
    eta: float = 1.0
    zeta: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "eta", "zeta", "lam"):
            v = float(getattr(self, name))
            if not v > 0:
                raise ValueError(f"hyperparameter {name} must be > 0, got {v!r}")
            object.__setattr__(self, name, v)


class CountStats:
    """Sufficient statistics of a labeled cluster of networks.

    s[k] counts vertices in block k, a[k,l] edges from block k to block l,
    r[k,l] ordered dyads (per-network, then summed; the diagonal uses the
    per-network s_k(s_k - 1), which is not a function of the aggregate s).
    b = r - a counts non-edges. All aggregated over m_count networks with
    n_total vertices in total.
    """

    __slots__ = ("k", "s", "a", "r", "n_total", "m_count")

    def __init__(self, k, s, a, r, n_total, m_count):
        self.k = int(k)
        self.s = np.asarray(s, dtype=np.int64)
        self.a = np.asarray(a, dtype=np.int64)
        self.r = np.asarray(r, dtype=np.int64)
        self.n_total = int(n_total)
        self.m_count = int(m_count)

    @property
    def b(self) -> np.ndarray:
        return self.r - self.a

    def validate(self) -> "CountStats":
        if self.s.shape != (self.k,) or self.a.shape != (self.k, self.k) \
                or self.r.shape != (self.k, self.k):
            raise ValueError("count stats shapes inconsistent with K")
        if int(self.s.sum()) != self.n_total:
            raise ValueError("sum of block sizes must equal n_total")
        if self.s.min(initial=0) < 0 or self.a.min(initial=0) < 0:
            raise ValueError("negative counts")
        if np.any(self.a > self.r):
            raise ValueError("more edges than dyads in some block pair")
        return self

    def copy(self) -> "CountStats":
        return CountStats(self.k, self.s.copy(), self.a.copy(), self.r.copy(),
                          self.n_total, self.m_count)

    def permuted(self, perm) -> "CountStats":
        """Relabel blocks consistently with SbmParams.permuted."""
        perm = as_permutation(perm, self.k)
        ix = np.ix_(perm, perm)
        return CountStats(self.k, self.s[perm], self.a[ix], self.r[ix],
                          self.n_total, self.m_count)

    def __add__(self, other: "CountStats") -> "CountStats":
        if not isinstance(other, CountStats):
            return NotImplemented
        if other.k != self.k:
            raise ValueError(f"cannot add stats with K={self.k} and K={other.k}")
        return CountStats(self.k, self.s + other.s, self.a + other.a,
                          self.r + other.r, self.n_total + other.n_total,
                          self.m_count + other.m_count)

    def __eq__(self, other):
        if not isinstance(other, CountStats):
            return NotImplemented
        return (self.k == other.k and self.n_total == other.n_total
                and self.m_count == other.m_count
                and np.array_equal(self.s, other.s)
                and np.array_equal(self.a, other.a)
                and np.array_equal(self.r, other.r))

    def __repr__(self):
        return (f"CountStats(K={self.k}, m_count={self.m_count}, "
                f"n_total={self.n_total})")


def sample_network(params: SbmParams, n: int, rng: np.random.Generator):
    """Draw one network: labels i.i.d. from pi, then each ordered pair
    (i, j), i != j, is an edge with probability gamma[Z_i, Z_j].

    Returns (Network, labels). Dense O(n^2) sampling; fine for the moderate
    network sizes this package targets.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"vertex count must be >= 1, got {n}")
    labels = rng.choice(params.k, size=n, p=params.pi).astype(np.int64)
    probs = params.gamma[np.ix_(labels, labels)]
    adj = (rng.random((n, n)) < probs).astype(np.uint8)
    np.fill_diagonal(adj, 0)
    return Network.from_dense(adj), labels


def count_stats(networks, labels, k: int) -> CountStats:
    """Exact count statistics of the given labeling, one pass per network."""
    networks = list(networks)
    labels = list(labels)
    if len(networks) != len(labels):
        raise ValueError("need one label vector per network")
    k = int(k)
    s = np.zeros(k, dtype=np.int64)
    a = np.zeros((k, k), dtype=np.int64)
    r = np.zeros((k, k), dtype=np.int64)
    n_total = 0
    for net, z in zip(networks, labels):
        z = check_labels(z, net.n, k)
        sm = np.bincount(z, minlength=k)
        e = net.edges
        if e.size:
            np.add.at(a, (z[e[:, 0]], z[e[:, 1]]), 1)
        r += np.outer(sm, sm) - np.diag(sm)
        s += sm
        n_total += net.n
    return CountStats(k, s, a, r, n_total, len(networks))


def _tables(hyper: Hyperparams, max_pair: int, max_s: int):
    t_eta = lgamma_table(hyper.eta, max_pair).values
    t_zeta = lgamma_table(hyper.zeta, max_pair).values
    t_ez = lgamma_table(hyper.eta + hyper.zeta, max_pair).values
    t_alpha = lgamma_table(hyper.alpha, max_s + 2).values
    return t_eta, t_zeta, t_ez, t_alpha


def _icl_tail(k: int, n_total: int, hyper: Hyperparams,
              t_eta, t_zeta, t_ez, t_alpha) -> float:
    """K-dependent constants of the ICL: the Beta normalizations, the
    Dirichlet normalization over block proportions, and its data term."""
    t_ka = lgamma_table(k * hyper.alpha, n_total).values
    beta_ez = t_eta[0] + t_zeta[0] - t_ez[0]
    return -k * k * beta_ez + t_ka[0] - t_ka[n_total] - k * t_alpha[0]


def icl_sbm(stats: CountStats, hyper: Hyperparams) -> float:
    """Closed-form log marginal of (networks, labels) for one cluster under
    the conjugate Dirichlet/Beta priors, parameters integrated out."""
    stats.validate()
    mx = int(stats.r.max(initial=0))
    t_eta, t_zeta, t_ez, t_alpha = _tables(hyper, mx, stats.n_total)
    core = _kernels.icl_sums(stats.s, stats.a, stats.r, stats.k,
                             t_eta, t_zeta, t_ez, t_alpha)
    return core + _icl_tail(stats.k, stats.n_total, hyper,
                            t_eta, t_zeta, t_ez, t_alpha)


def icl_penalty(k: int, n_total: int, hyper: Hyperparams) -> float:
    """ICL difference between representing a configuration with k blocks
    (one of them empty) and with k-1 blocks: negative, the price of the
    larger model. icl_sbm(stats padded with an empty block) - icl_sbm(stats).
    """
    if k < 2:
        raise ValueError("penalty needs k >= 2")
    t_ka = lgamma_table(k * hyper.alpha, n_total).values
    t_k1a = lgamma_table((k - 1) * hyper.alpha, n_total).values
    return float(t_ka[0] - t_k1a[0] + t_k1a[n_total] - t_ka[n_total])


def map_estimate(stats: CountStats, hyper: Hyperparams,
                 clamp: float = 1e-12) -> SbmParams:
    """Posterior-mode parameters given the labeling.

    pi_k = (s_k + alpha - 1) / (n_total + K(alpha - 1)),
    gamma_kl = (a_kl + eta - 1) / (a_kl + b_kl + eta + zeta - 2),
    entries clamped to [clamp, 1 - clamp] (keeps downstream graphon work
    finite when a posterior mode sits on the boundary) and pi renormalized
    after clamping.

    A cell whose posterior is exactly flat (0/0 in the formula, e.g. a
    one-vertex block with uniform priors) has every value in [0,1] as a
    mode; the posterior mean eta/(eta+zeta) is returned for it. Any other
    nonpositive denominator is an error naming the block pair.
    """
    k = stats.k
    pi_den = stats.n_total + k * (hyper.alpha - 1.0)
    if pi_den <= 0:
        raise ValueError(f"degenerate block-proportion denominator {pi_den!r}")
    a_num = stats.a + (hyper.eta - 1.0)
    b_num = stats.b + (hyper.zeta - 1.0)
    gam_den = a_num + b_num
    flat = (gam_den == 0) & (a_num == 0) & (b_num == 0)
    bad = (gam_den <= 0) & ~flat
    if np.any(bad):
        kk, ll = np.argwhere(bad)[0]
        raise ValueError(f"degenerate connectivity denominator at block pair "
                         f"({int(kk)}, {int(ll)})")
    pi = (stats.s + (hyper.alpha - 1.0)) / pi_den
    gamma = np.where(flat, hyper.eta / (hyper.eta + hyper.zeta),
                     a_num / np.where(flat, 1.0, gam_den))
    pi = np.clip(pi, clamp, 1.0 - clamp)
    pi = pi / pi.sum()
    gamma = np.clip(gamma, clamp, 1.0 - clamp)
    return SbmParams(pi, gamma)


class SbmState:
    """Mutable optimizer state for one cluster: flat labels over the
    concatenated vertices of its networks plus incrementally maintained
    count statistics.

    Stat buffers are allocated at the construction-time K and the live
    region shrinks as empty blocks are excised; s/a/r expose the live views.
    """

    def __init__(self, networks, labels, k: int):
        networks = list(networks)
        labels = list(labels)
        if len(networks) != len(labels) or not networks:
            raise ValueError("need one label vector per network, at least one network")
        k = int(k)
        if k < 1:
            raise ValueError("K must be >= 1")
        ns = np.array([g.n for g in networks], dtype=np.int64)
        offs = np.zeros(len(networks) + 1, dtype=np.int64)
        np.cumsum(ns, out=offs[1:])
        n_total = int(offs[-1])
        flat = np.empty(n_total, dtype=np.int64)
        for m, z in enumerate(labels):
            flat[offs[m]:offs[m + 1]] = check_labels(z, networks[m].n, k)

        out_ptr = np.zeros(n_total + 1, dtype=np.int64)
        in_ptr = np.zeros(n_total + 1, dtype=np.int64)
        out_chunks, in_chunks = [], []
        epos = 0
        for m, net in enumerate(networks):
            optr, oidx = net._out_csr()
            iptr, iidx = net._in_csr()
            out_ptr[offs[m] + 1: offs[m + 1] + 1] = optr[1:] + epos
            in_ptr[offs[m] + 1: offs[m + 1] + 1] = iptr[1:] + epos
            out_chunks.append(oidx + offs[m])
            in_chunks.append(iidx + offs[m])
            epos += net.n_edges
        empty = np.empty(0, dtype=np.int64)
        self.out_idx = np.concatenate(out_chunks) if epos else empty
        self.in_idx = np.concatenate(in_chunks) if epos else empty
        self.out_ptr = out_ptr
        self.in_ptr = in_ptr
        self.net_of = np.repeat(np.arange(len(networks), dtype=np.int64), ns)

        self.networks = networks
        self.offsets = offs
        self.n_total = n_total
        self.dyads = int((ns * (ns - 1)).sum())
        self.k = k
        self._cap = k
        self.labels = flat

        self._s = np.zeros(k, dtype=np.int64)
        self._a = np.zeros((k, k), dtype=np.int64)
        self._r = np.zeros((k, k), dtype=np.int64)
        self.s_net = np.zeros((len(networks), k), dtype=np.int64)
        for m in range(len(networks)):
            z = flat[offs[m]:offs[m + 1]]
            sm = np.bincount(z, minlength=k)
            self.s_net[m] = sm
            self._r += np.outer(sm, sm) - np.diag(sm)
            e = networks[m].edges
            if e.size:
                np.add.at(self._a, (z[e[:, 0]], z[e[:, 1]]), 1)
        self._s[:] = self.s_net.sum(axis=0)
        # scratch buffers for the swap kernels
        self._din = np.zeros(k, dtype=np.int64)
        self._dout = np.zeros(k, dtype=np.int64)
        self._deltas = np.zeros(k, dtype=np.float64)

    @property
    def m_count(self) -> int:
        return len(self.networks)

    @property
    def s(self) -> np.ndarray:
        return self._s[:self.k]

    @property
    def a(self) -> np.ndarray:
        return self._a[:self.k, :self.k]

    @property
    def r(self) -> np.ndarray:
        return self._r[:self.k, :self.k]

    def labels_list(self) -> list[np.ndarray]:
        return [self.labels[self.offsets[m]:self.offsets[m + 1]].copy()
                for m in range(self.m_count)]

    def stats(self) -> CountStats:
        return CountStats(self.k, self.s.copy(), self.a.copy(), self.r.copy(),
                          self.n_total, self.m_count)

    def icl(self, hyper: Hyperparams) -> float:
        t_eta, t_zeta, t_ez, t_alpha = _tables(hyper, self.dyads, self.n_total)
        core = _kernels.icl_sums(self._s, self._a, self._r, self.k,
                                 t_eta, t_zeta, t_ez, t_alpha)
        return core + _icl_tail(self.k, self.n_total, hyper,
                                t_eta, t_zeta, t_ez, t_alpha)

    def compact_empty_blocks(self) -> int:
        """Excise blocks with zero aggregate size; returns how many."""
        removed = 0
        k = self.k
        while True:
            empties = np.flatnonzero(self._s[:k] == 0)
            if empties.size == 0:
                break
            _kernels._excise(int(empties[0]), k, self.labels, self._s,
                             self.s_net, self._a, self._r)
            k -= 1
            removed += 1
        self.k = k
        return removed

    def _pen_array(self, hyper: Hyperparams) -> np.ndarray:
        """pen[k] = icl_penalty(k, n_total) for 2 <= k <= current K."""
        pen = np.zeros(self.k + 1, dtype=np.float64)
        for k in range(2, self.k + 1):
            pen[k] = icl_penalty(k, self.n_total, hyper)
        return pen

    def _kernel_args(self, hyper: Hyperparams):
        t_eta, t_zeta, t_ez, t_alpha = _tables(hyper, self.dyads + 2,
                                               self.n_total)
        return (self.labels, self.net_of, self.out_ptr, self.out_idx,
                self.in_ptr, self.in_idx, self.s_net, self._s, self._a,
                self._r, t_eta, t_zeta, t_ez, t_alpha)


def swap_delta(state: SbmState, hyper: Hyperparams, m: int, i: int, h: int) -> float:
    """Exact ICL change from moving vertex i of network m to block h,
    computed incrementally from the affected rows/columns only. Includes
    the block-count reduction term when i is the last member of its block.
    h equal to the current label returns exactly 0.
    """
    h = int(h)
    if not 0 <= h < state.k:
        raise ValueError(f"target block {h} out of range [0, {state.k})")
    v = int(state.offsets[m]) + int(i)
    if not state.offsets[m] <= v < state.offsets[m + 1]:
        raise ValueError(f"vertex {i} out of range for network {m}")
    if state.labels[v] == h:
        return 0.0
    (labels, net_of, out_ptr, out_idx, in_ptr, in_idx, s_net, s, a, r,
     t_eta, t_zeta, t_ez, t_alpha) = state._kernel_args(hyper)
    pen = state._pen_array(hyper)
    _kernels.vertex_deltas(v, state.k, labels, net_of, out_ptr, out_idx,
                           in_ptr, in_idx, s_net, s, a, r,
                           t_eta, t_zeta, t_ez, t_alpha, pen,
                           state._din, state._dout, state._deltas)
    return float(state._deltas[h])


def maximize_icl_labels(state: SbmState, hyper: Hyperparams,
                        rng: np.random.Generator, max_sweeps: int = 100):
    """Greedy ICL maximization over node labels of one cluster.

    Each sweep visits all vertices of all networks in a freshly shuffled
    order and applies the best strictly improving block move per vertex;
    stops when a full sweep accepts no move or after max_sweeps. Blocks
    that empty out are excised on the spot (labels compacted, K reduced).

    Returns (labels_list, final_icl, accepted_moves). The final ICL is the
    starting ICL plus the sum of accepted gains, hence never below the
    starting value; state is updated in place.
    """
    state.compact_empty_blocks()
    icl = state.icl(hyper)
    (labels, net_of, out_ptr, out_idx, in_ptr, in_idx, s_net, s, a, r,
     t_eta, t_zeta, t_ez, t_alpha) = state._kernel_args(hyper)
    pen = state._pen_array(hyper)
    total_moves = 0
    for _ in range(int(max_sweeps)):
        if state.k == 1:
            break
        order = rng.permutation(state.n_total)
        moves, gain, k_new = _kernels.sweep(
            order, state.k, labels, net_of, out_ptr, out_idx, in_ptr, in_idx,
            s_net, s, a, r, t_eta, t_zeta, t_ez, t_alpha, pen,
            state._din, state._dout, state._deltas)
        state.k = int(k_new)
        icl += gain
        total_moves += int(moves)
        if moves == 0:
            break
    return state.labels_list(), float(icl), total_moves
