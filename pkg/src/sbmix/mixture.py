"""Agglomerative clustering of a network collection under the SBM mixture.

Starts from one cluster per network (with externally supplied node labels),
keeps the exact pairwise merge-gain table of the mixture ICL, and greedily
merges the best pair while the gain is positive. After each merge only the
pairs touching the merged cluster are recomputed; every other entry shifts
by a closed-form constant that depends only on the cluster count.

Merging two clusters aligns their block labels first (graphon matching on
the MAP parameters), then re-optimizes node labels on the pooled networks,
so the realized ICL gain of a merge can exceed its table entry.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .graphon import apply_to_labels, match_blocks
from .graphs import NetworkCollection
from .sbm import (CountStats, Hyperparams, SbmState, _icl_tail, _tables,
                  count_stats, icl_sbm, map_estimate, maximize_icl_labels)

__all__ = [
    "Cluster", "ClusteringState", "FitOptions", "MergeEvent", "Dendrogram",
    "icl_mix", "merge_gain", "refresh_delta_table", "merge_clusters", "fit",
]


@dataclass
class FitOptions:
    """Knobs of the agglomerative driver."""

    force_merge_all: bool = False   # keep merging to one cluster even at a loss
    match_budget: int = 50_000      # exhaustive block matching up to K1!*K2!
    max_sweeps: int = 100           # label-optimization sweep cap per merge
    verify: bool = False            # recompute state from scratch at each step
    seed: int = 0                   # mixed into content-derived merge seeds


class Cluster:
    """One cluster: member networks, their node labels, cached aggregated
    count statistics, the cluster's ICL, and MAP parameters."""

    __slots__ = ("id", "members", "labels", "k", "s", "a", "r",
                 "n_total", "dyads", "icl", "params")

    def __init__(self, cid, members, labels, k, s, a, r, n_total, dyads,
                 icl, params):
        self.id = int(cid)
        self.members = list(members)
        self.labels = list(labels)
        self.k = int(k)
        self.s = s
        self.a = a
        self.r = r
        self.n_total = int(n_total)
        self.dyads = int(dyads)
        self.icl = float(icl)
        self.params = params

    @property
    def m_count(self) -> int:
        return len(self.members)

    def stats(self) -> CountStats:
        return CountStats(self.k, self.s.copy(), self.a.copy(), self.r.copy(),
                          self.n_total, self.m_count)

    def __repr__(self):
        return (f"Cluster(id={self.id}, members={len(self.members)}, "
                f"K={self.k})")


def _singleton_cluster(cid, net, z, k, hyper) -> Cluster:
    st = count_stats([net], [z], k)
    return Cluster(cid, [cid], [np.asarray(z, dtype=np.int64).copy()], k,
                   st.s, st.a, st.r, st.n_total, net.n * (net.n - 1),
                   icl_sbm(st, hyper), map_estimate(st, hyper))


class ClusteringState:
    """Mutable clustering of a collection: live clusters keyed by id, the
    network-to-cluster assignment, the tracked mixture ICL, and the pairwise
    merge-gain table (dead rows/columns held at -inf)."""

    def __init__(self, collection: NetworkCollection, hyper: Hyperparams,
                 init_labels, options: FitOptions | None = None):
        if options is None:
            options = FitOptions()
        m = collection.m_count
        init_labels = list(init_labels)
        if len(init_labels) != m:
            raise ValueError(f"need {m} label vectors, got {len(init_labels)}")
        self.collection = collection
        self.hyper = hyper
        self.options = options
        self.clusters: dict[int, Cluster] = {}
        for i, (net, z) in enumerate(zip(collection.networks, init_labels)):
            z = np.asarray(z, dtype=np.int64)
            k = int(z.max(initial=0)) + 1
            self.clusters[i] = _singleton_cluster(i, net, z, k, hyper)
        self.U = np.arange(m, dtype=np.int64)

        xs = np.arange(m + 1, dtype=np.float64)
        lam = hyper.lam
        with np.errstate(divide="ignore"):
            self._G = gammaln(xs * lam) - gammaln(xs * lam + m) - xs * gammaln(lam)
        self._G[0] = np.nan  # C=0 never occurs
        self._lgsize = gammaln(lam + xs)

        self.icl = self._icl_mix_scratch()
        self.delta = np.full((m, m), -np.inf, dtype=np.float64)
        self.perms: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        self._scratch_k = 0
        self._s_tmp = self._a_tmp = self._r_tmp = None
        # pre-grow the shared log-Gamma tables to the collection's extremes
        total_dyads = sum(g.n * (g.n - 1) for g in collection.networks)
        total_n = sum(g.n for g in collection.networks)
        _tables(hyper, total_dyads, total_n)

    @property
    def C(self) -> int:
        return len(self.clusters)

    @property
    def m_count(self) -> int:
        return self.collection.m_count

    def _cluster_term(self, c: int, sizes) -> float:
        return float(self._G[c] + sum(self._lgsize[t] for t in sizes))

    def _icl_mix_scratch(self) -> float:
        sizes = [cl.m_count for cl in self.clusters.values()]
        return (sum(cl.icl for cl in self.clusters.values())
                + self._cluster_term(self.C, sizes))

    def _scratch(self, k: int):
        if k > self._scratch_k:
            cap = max(k, 8)
            self._s_tmp = np.zeros(cap, dtype=np.int64)
            self._a_tmp = np.zeros((cap, cap), dtype=np.int64)
            self._r_tmp = np.zeros((cap, cap), dtype=np.int64)
            self._scratch_k = cap
        return self._s_tmp, self._a_tmp, self._r_tmp

    def check_consistency(self, tol: float = 1e-8):
        """Recompute everything from scratch and compare with the caches.
        Used by verification mode and tests."""
        nets = self.collection.networks
        seen = np.full(self.m_count, -1, dtype=np.int64)
        for cid, cl in self.clusters.items():
            if not cl.members:
                raise AssertionError(f"cluster {cid} is empty")
            st = count_stats([nets[mm] for mm in cl.members], cl.labels, cl.k)
            if not (np.array_equal(st.s, cl.s) and np.array_equal(st.a, cl.a)
                    and np.array_equal(st.r, cl.r)):
                raise AssertionError(f"cluster {cid} cached stats are stale")
            if abs(icl_sbm(st, self.hyper) - cl.icl) > tol:
                raise AssertionError(f"cluster {cid} cached ICL is stale")
            seen[np.asarray(cl.members)] = cid
        if not np.array_equal(seen, self.U):
            raise AssertionError("U inconsistent with cluster membership")
        if abs(self.icl - self._icl_mix_scratch()) > tol:
            raise AssertionError("tracked mixture ICL is stale")


def icl_mix(state: ClusteringState) -> float:
    """Mixture ICL: per-cluster SBM ICLs plus the closed-form Dirichlet
    term over cluster sizes, log(Gamma(C lam) / (Gamma(lam)^C
    Gamma(C lam + M))) + sum_c log Gamma(lam + |I_c|)."""
    return state._icl_mix_scratch()


def merge_gain(state: ClusteringState, c1: int, c2: int):
    """Exact mixture-ICL change of merging clusters c1 and c2, before any
    node-label re-optimization. Block labels of the two sides are aligned
    by graphon matching of their MAP parameters; the smaller block model is
    padded with empty blocks up to K = max(K_1, K_2).

    Returns (delta, perm1, perm2) with the permutations ordered for the
    smaller/larger cluster id respectively. Symmetric in (c1, c2).
    """
    i, j = (c1, c2) if c1 <= c2 else (c2, c1)
    if i == j:
        raise ValueError("cannot merge a cluster with itself")
    ci, cj = state.clusters[i], state.clusters[j]
    hyper = state.hyper
    p1, p2, _dist = match_blocks(ci.params, cj.params,
                                 budget=state.options.match_budget)
    k = max(ci.k, cj.k)
    s_o, a_o, r_o = state._scratch(k)
    _kernels.merge_stats(ci.s, ci.a, ci.r, ci.k, p1,
                         cj.s, cj.a, cj.r, cj.k, p2, k, s_o, a_o, r_o)
    n_tot = ci.n_total + cj.n_total
    dyads = ci.dyads + cj.dyads
    t_eta, t_zeta, t_ez, t_alpha = _tables(hyper, dyads, n_tot)
    icl_merged = (_kernels.icl_sums(s_o, a_o, r_o, k,
                                    t_eta, t_zeta, t_ez, t_alpha)
                  + _icl_tail(k, n_tot, hyper, t_eta, t_zeta, t_ez, t_alpha))
    c = state.C
    lgs = state._lgsize
    d_cluster = (state._G[c - 1] - state._G[c]
                 + lgs[ci.m_count + cj.m_count]
                 - lgs[ci.m_count] - lgs[cj.m_count])
    return float(icl_merged - ci.icl - cj.icl + d_cluster), p1, p2


def refresh_delta_table(state: ClusteringState, last_merged: int | None):
    """Bring the merge-gain table up to date.

    With last_merged=None the whole table is rebuilt. After a merge, rows
    and columns of the merged pair are cleared, every untouched entry is
    shifted by the closed-form constant of the new cluster count, and only
    the pairs involving the surviving cluster are recomputed.
    """
    if last_merged is None:
        state.delta[:] = -np.inf
        state.perms.clear()
        ids = sorted(state.clusters)
        for ii, i in enumerate(ids):
            for j in ids[ii + 1:]:
                d, p1, p2 = merge_gain(state, i, j)
                state.delta[i, j] = d
                state.perms[(i, j)] = (p1, p2)
        return
    u = int(last_merged)
    if u not in state.clusters:
        raise ValueError(f"cluster {u} is not live")
    dead = np.ones(state.m_count, dtype=bool)
    dead[list(state.clusters)] = False
    dead[u] = True  # u's own entries are stale too until recomputed below
    state.delta[dead, :] = -np.inf
    state.delta[:, dead] = -np.inf
    c_new = state.C
    if c_new < 2:
        return
    # every untouched pair's gain changes only through the cluster-count
    # term; dead entries stay at -inf
    kappa = state._G[c_new - 1] - 2.0 * state._G[c_new] + state._G[c_new + 1]
    state.delta += kappa
    for v in state.clusters:
        if v == u:
            continue
        i, j = (u, v) if u < v else (v, u)
        d, p1, p2 = merge_gain(state, i, j)
        state.delta[i, j] = d
        state.perms[(i, j)] = (p1, p2)


def _merge_seed(state: ClusteringState, members) -> np.random.Generator:
    """Content-derived generator for the post-merge label optimization:
    depends on the member networks' edge content and the base seed, not on
    network positions, so input order cannot change the fit."""
    digests = sorted(state.collection.networks[m].content_digest()
                     for m in members)
    h = hashlib.sha256()
    for d in digests:
        h.update(d)
    words = np.frombuffer(h.digest(), dtype=np.uint32)
    ss = np.random.SeedSequence([int(state.options.seed) & 0xFFFFFFFF, 2,
                                 *map(int, words)])
    return np.random.default_rng(ss)


def merge_clusters(state: ClusteringState, c1: int, c2: int) -> float:
    """Merge two clusters in place and return the realized ICL gain.

    Aligns block labels of both sides by the matched permutations, pools
    the member networks, re-optimizes node labels on the pooled cluster,
    and refreshes cached statistics and MAP parameters. The surviving
    cluster keeps id min(c1, c2); the realized gain includes the label
    re-optimization so it can exceed the table entry that selected the pair.
    """
    i, j = (c1, c2) if c1 <= c2 else (c2, c1)
    if i == j:
        raise ValueError("cannot merge a cluster with itself")
    ci, cj = state.clusters[i], state.clusters[j]
    cached = state.perms.get((i, j))
    if cached is None:
        _, p1, p2 = merge_gain(state, i, j)
    else:
        p1, p2 = cached
    k = max(ci.k, cj.k)

    pairs = list(zip(ci.members, (apply_to_labels(z, p1) for z in ci.labels)))
    pairs += zip(cj.members, (apply_to_labels(z, p2) for z in cj.labels))
    pairs.sort(key=lambda t: t[0])
    members = [mm for mm, _ in pairs]
    labels = [z for _, z in pairs]

    nets = [state.collection.networks[mm] for mm in members]
    sstate = SbmState(nets, labels, k)
    rng = _merge_seed(state, members)
    new_labels, new_icl, _moves = maximize_icl_labels(
        sstate, state.hyper, rng, max_sweeps=state.options.max_sweeps)

    c = state.C
    lgs = state._lgsize
    d_cluster = (state._G[c - 1] - state._G[c]
                 + lgs[ci.m_count + cj.m_count]
                 - lgs[ci.m_count] - lgs[cj.m_count])
    realized = (new_icl - ci.icl - cj.icl) + float(d_cluster)

    st = sstate.stats()
    merged = Cluster(i, members, new_labels, sstate.k, st.s, st.a, st.r,
                     st.n_total, sstate.dyads, new_icl,
                     map_estimate(st, state.hyper))
    del state.clusters[j]
    state.clusters[i] = merged
    state.U[np.asarray(members)] = i
    state.icl += realized
    for v in list(state.clusters):
        for t in (i, j):
            state.perms.pop((t, v) if t < v else (v, t), None)
    state.perms.pop((i, j), None)
    if state.options.verify:
        state.check_consistency()
    return realized


@dataclass(frozen=True)
class MergeEvent:
    step: int
    first: int
    second: int
    delta: float
    icl_after: float
    result: int
    n_clusters: int

    def to_json_obj(self) -> dict:
        return {"step": self.step, "first": self.first, "second": self.second,
                "delta": self.delta, "icl_after": self.icl_after,
                "result": self.result, "n_clusters": self.n_clusters}


_NEWICK_UNSAFE = re.compile(r"[\s(),:;\[\]']")


@dataclass(frozen=True)
class Dendrogram:
    """Merge history: one leaf per network, events in merge order. The
    ICL-after sequence equals initial_icl plus the running sum of deltas."""

    leaves: list[str]
    initial_icl: float
    events: list[MergeEvent] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {"leaves": list(self.leaves), "initial_icl": self.initial_icl,
                "events": [e.to_json_obj() for e in self.events]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)

    def to_newick(self) -> str:
        """Newick tree (forest joined under a zero-length root if the merge
        path stopped early). Each merge's branch lengths carry its ICL gain."""
        rep = {m: _NEWICK_UNSAFE.sub("_", self.leaves[m])
               for m in range(len(self.leaves))}
        for e in self.events:
            a, b = rep[e.first], rep[e.second]
            rep[e.result] = f"({a}:{e.delta:.6g},{b}:{e.delta:.6g})m{e.step}"
            del rep[e.second]
        roots = [rep[i] for i in sorted(rep)]
        if len(roots) == 1:
            return roots[0] + ";"
        return "(" + ",".join(f"{r}:0" for r in roots) + ")root;"

    def trace_tsv(self) -> str:
        lines = ["step\tc1\tc2\tdelta\ticl_after\tC"]
        for e in self.events:
            lines.append(f"{e.step}\t{e.first}\t{e.second}\t{e.delta!r}\t"
                         f"{e.icl_after!r}\t{e.n_clusters}")
        return "\n".join(lines) + "\n"


def fit(collection: NetworkCollection, hyper: Hyperparams, init_labels,
        options: FitOptions | None = None):
    """Agglomerative mixture fit.

    Starts from one cluster per network with the given node labels, then
    repeatedly merges the pair with the largest table gain (ties resolved
    toward the lexicographically smallest id pair) while that gain is
    positive. With force_merge_all the loop continues to a single cluster
    regardless of sign, recording the full hierarchy.

    Returns (state, dendrogram).
    """
    state = ClusteringState(collection, hyper, init_labels, options)
    options = state.options
    dendro = Dendrogram(
        leaves=[collection.id_of(m) for m in range(collection.m_count)],
        initial_icl=state.icl)
    refresh_delta_table(state, None)
    step = 0
    while state.C > 1:
        flat = int(np.argmax(state.delta))
        i, j = np.unravel_index(flat, state.delta.shape)
        best = state.delta[i, j]
        if not options.force_merge_all and not best > 0.0:
            break
        realized = merge_clusters(state, int(i), int(j))
        step += 1
        dendro.events.append(MergeEvent(step, int(i), int(j), realized,
                                        state.icl, int(i), state.C))
        refresh_delta_table(state, int(i))
        if options.verify and collection.m_count <= 30:
            _check_table(state)
    return state, dendro


def _check_table(state: ClusteringState, tol: float = 1e-9):
    ids = sorted(state.clusters)
    for ii, i in enumerate(ids):
        for j in ids[ii + 1:]:
            d, _, _ = merge_gain(state, i, j)
            if abs(d - state.delta[i, j]) > tol:
                raise AssertionError(
                    f"delta table stale at ({i}, {j}): {state.delta[i, j]} "
                    f"vs {d}")
