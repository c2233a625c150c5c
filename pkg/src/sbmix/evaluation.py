"""Synthetic scenarios, metrics, the spectral-clustering baseline, and
experiment reports.

A Scenario describes a mixture of SBM components plus optional outlier
networks with individually drawn parameters; simulate() realizes it into a
collection with ground truth. run_experiment() fits replicated draws with
the agglomerative method or the spectral baseline and emits rows for a
plot-ready TSV report.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .graphs import NetworkCollection
from .graphon import match_blocks
from .initializer import InitConfig, init_collection
from .mixture import FitOptions, fit
from .sbm import Hyperparams, SbmParams, sample_network

__all__ = [
    "adjusted_rand_index", "SizeLaw", "Scenario", "SimulationResult",
    "simulate", "gsc_baseline", "run_experiment", "write_report",
    "REPORT_COLUMNS",
]


def adjusted_rand_index(u, v) -> float:
    """Adjusted Rand index between two partitions given as label sequences.
    1 for identical partitions up to relabeling, ~0 for independent ones."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.ndim != 1 or u.shape != v.shape:
        raise ValueError(f"partition length mismatch: {u.shape} vs {v.shape}")
    from sklearn.metrics import adjusted_rand_score
    return float(adjusted_rand_score(u, v))


@dataclass(frozen=True)
class SizeLaw:
    """Network-size distribution: fixed n, uniform integer range
    [low, high], or an explicit per-network list."""

    kind: str
    n: int | None = None
    low: int | None = None
    high: int | None = None
    sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind == "fixed":
            if not (self.n and self.n >= 1):
                raise ValueError("fixed size law needs n >= 1")
        elif self.kind == "uniform":
            if not (self.low and self.high and 1 <= self.low <= self.high):
                raise ValueError("uniform size law needs 1 <= low <= high")
        elif self.kind == "list":
            if not self.sizes or any(n < 1 for n in self.sizes):
                raise ValueError("list size law needs positive sizes")
            object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        else:
            raise ValueError(f"unknown size law kind {self.kind!r}")

    def draw(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(m, self.n, dtype=np.int64)
        if self.kind == "uniform":
            return rng.integers(self.low, self.high + 1, size=m).astype(np.int64)
        if len(self.sizes) != m:
            raise ValueError(f"size list has {len(self.sizes)} entries for "
                             f"{m} networks")
        return np.asarray(self.sizes, dtype=np.int64)

    def to_json_obj(self) -> dict:
        obj = {"kind": self.kind}
        if self.kind == "fixed":
            obj["n"] = self.n
        elif self.kind == "uniform":
            obj["low"], obj["high"] = self.low, self.high
        else:
            obj["sizes"] = list(self.sizes)
        return obj

    @classmethod
    def from_json_obj(cls, obj) -> "SizeLaw":
        kind = obj.get("kind")
        if kind == "fixed":
            return cls("fixed", n=int(obj["n"]))
        if kind == "uniform":
            return cls("uniform", low=int(obj["low"]), high=int(obj["high"]))
        if kind == "list":
            return cls("list", sizes=tuple(int(x) for x in obj["sizes"]))
        raise ValueError(f"unknown size law kind {kind!r}")


@dataclass(frozen=True)
class Scenario:
    """Mixture description for synthetic experiments.

    Component membership uses either sampling weights (networks drawn
    i.i.d.) or exact counts per component; exactly one must be given.
    An outlier fraction reserves round(M * fraction) networks that each
    receive freshly drawn individual SBM parameters and count as their own
    singleton cluster in the ground truth.
    """

    name: str
    components: tuple[SbmParams, ...]
    m_count: int
    size_law: SizeLaw
    weights: tuple[float, ...] | None = None
    counts: tuple[int, ...] | None = None
    outlier_fraction: float = 0.0
    outlier_k_range: tuple[int, int] = (1, 3)
    seed: int = 0

    def __post_init__(self):
        if not self.components:
            raise ValueError("scenario needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))
        if self.m_count < 1:
            raise ValueError("m_count must be >= 1")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise ValueError("outlier_fraction must be in [0, 1)")
        if (self.weights is None) == (self.counts is None):
            raise ValueError("give exactly one of weights or counts")
        c = len(self.components)
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != c or any(x < 0 for x in w) or abs(sum(w) - 1) > 1e-12:
                raise ValueError("weights must be a length-C nonnegative "
                                 "vector summing to 1")
            object.__setattr__(self, "weights", w)
        else:
            cnt = tuple(int(x) for x in self.counts)
            if len(cnt) != c or any(x < 0 for x in cnt):
                raise ValueError("counts must be length-C nonnegative")
            if sum(cnt) != self.m_count - self.n_outliers:
                raise ValueError(f"counts sum to {sum(cnt)} but the scenario "
                                 f"has {self.m_count - self.n_outliers} "
                                 f"non-outlier networks")
            object.__setattr__(self, "counts", cnt)
        lo, hi = self.outlier_k_range
        if not 1 <= lo <= hi:
            raise ValueError("outlier_k_range must satisfy 1 <= lo <= hi")
        object.__setattr__(self, "outlier_k_range", (int(lo), int(hi)))

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def n_outliers(self) -> int:
        return round(self.m_count * self.outlier_fraction)

    def with_m(self, m: int) -> "Scenario":
        """Same scenario at a different collection size. Exact counts are
        rescaled proportionally (largest remainder, so they stay exact)."""
        m = int(m)
        if m < 1:
            raise ValueError("m_count must be >= 1")
        if self.counts is None:
            return replace(self, m_count=m)
        budget = m - round(m * self.outlier_fraction)
        total = sum(self.counts)
        if total == 0:
            raise ValueError("cannot rescale all-zero counts")
        quota = [c * budget / total for c in self.counts]
        scaled = [int(q) for q in quota]
        short = budget - sum(scaled)
        order = sorted(range(len(quota)),
                       key=lambda i: quota[i] - scaled[i], reverse=True)
        for i in order[:short]:
            scaled[i] += 1
        return replace(self, m_count=m, counts=tuple(scaled))

    def to_json_obj(self) -> dict:
        obj = {
            "name": self.name,
            "components": [p.to_json_obj() for p in self.components],
            "m_count": self.m_count,
            "size_law": self.size_law.to_json_obj(),
            "outlier_fraction": self.outlier_fraction,
            "outlier_k_range": list(self.outlier_k_range),
            "seed": self.seed,
        }
        if self.weights is not None:
            obj["weights"] = list(self.weights)
        else:
            obj["counts"] = list(self.counts)
        return obj

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)

    @classmethod
    def from_json_obj(cls, obj) -> "Scenario":
        return cls(
            name=str(obj["name"]),
            components=tuple(SbmParams.from_json_obj(p)
                             for p in obj["components"]),
            m_count=int(obj["m_count"]),
            size_law=SizeLaw.from_json_obj(obj["size_law"]),
            weights=tuple(obj["weights"]) if "weights" in obj else None,
            counts=tuple(obj["counts"]) if "counts" in obj else None,
            outlier_fraction=float(obj.get("outlier_fraction", 0.0)),
            outlier_k_range=tuple(obj.get("outlier_k_range", (1, 3))),
            seed=int(obj.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class SimulationResult:
    """One realized scenario: the collection, ground-truth cluster ids
    (outliers hold ids past the component range, one each), planted node
    labels per network, the per-network generating params, and the
    component list."""

    collection: NetworkCollection
    u: np.ndarray
    labels: list
    params: list
    components: tuple


def _outlier_params(scenario: Scenario, rng: np.random.Generator) -> SbmParams:
    lo, hi = scenario.outlier_k_range
    k = int(rng.integers(lo, hi + 1))
    pi = rng.dirichlet(np.ones(k))
    gamma = rng.random((k, k))
    return SbmParams(pi, gamma)


def simulate(scenario: Scenario, seed: int | None = None) -> SimulationResult:
    """Realize one collection from the scenario.

    Draw order (fixed, so a seed pins the whole collection): component
    assignment including outlier slots, one shuffle of that composition,
    per-network sizes, then per network in order its outlier params (if
    any) and the network sample itself.
    """
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    m = scenario.m_count
    c = scenario.n_components
    n_out = scenario.n_outliers
    n_reg = m - n_out
    if scenario.counts is not None:
        comp = np.repeat(np.arange(c, dtype=np.int64),
                         np.asarray(scenario.counts, dtype=np.int64))
    else:
        comp = rng.choice(c, size=n_reg, p=np.asarray(scenario.weights))
    comp = np.concatenate([comp.astype(np.int64),
                           c + np.arange(n_out, dtype=np.int64)])
    rng.shuffle(comp)
    sizes = scenario.size_law.draw(m, rng)
    networks, labels, params = [], [], []
    for mm in range(m):
        p = (scenario.components[comp[mm]] if comp[mm] < c
             else _outlier_params(scenario, rng))
        net, z = sample_network(p, int(sizes[mm]), rng)
        networks.append(net)
        labels.append(z)
        params.append(p)
    ids = [f"net-{mm:05d}" for mm in range(m)]
    return SimulationResult(NetworkCollection(networks, ids), comp, labels,
                            params, scenario.components)


def matched_distance_matrix(params_list, budget: int = 50_000) -> np.ndarray:
    """Symmetric matrix of matched graphon distances between fitted
    per-network params."""
    m = len(params_list)
    d = np.zeros((m, m), dtype=np.float64)
    for i in range(m):
        for j in range(i + 1, m):
            _, _, dist = match_blocks(params_list[i], params_list[j],
                                      budget=budget)
            d[i, j] = d[j, i] = dist
    return d


def gsc_baseline(collection: NetworkCollection, params_list, c_target: int,
                 random_state: int = 0, budget: int = 50_000) -> np.ndarray:
    """Spectral-clustering baseline on matched graphon distances.

    Builds the pairwise matched-distance matrix of the per-network fitted
    params, converts to similarity with a Gaussian kernel (bandwidth =
    median nonzero distance), and runs normalized spectral clustering
    (symmetric Laplacian, bottom c_target eigenvectors, row normalization,
    k-means++ with 20 restarts). Needs the target group count up front.
    """
    m = collection.m_count
    if len(params_list) != m:
        raise ValueError(f"need {m} fitted params, got {len(params_list)}")
    c_target = int(c_target)
    if c_target < 1:
        raise ValueError("c_target must be >= 1")
    if c_target == 1:
        return np.zeros(m, dtype=np.int64)
    d = matched_distance_matrix(params_list, budget=budget)
    nonzero = d[d > 0]
    if nonzero.size == 0:
        warnings.warn("all pairwise distances are zero; returning a single "
                      "cluster", stacklevel=2)
        return np.zeros(m, dtype=np.int64)
    sigma = float(np.median(nonzero))
    w = np.exp(-0.5 * (d / sigma) ** 2)
    np.fill_diagonal(w, 0.0)
    deg = w.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0))
    lap = np.eye(m) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    from scipy.linalg import eigh
    _, vecs = eigh(lap, subset_by_index=[0, c_target - 1])
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    vecs = vecs / np.where(norms > 0, norms, 1.0)
    from sklearn.cluster import KMeans
    km = KMeans(n_clusters=c_target, n_init=20, random_state=random_state)
    return km.fit_predict(vecs).astype(np.int64)


REPORT_COLUMNS = ("scenario", "method", "replicate", "M", "C_true", "C_hat",
                  "ari_clusters", "ari_labels", "mean_graphon_dist", "seconds")

_METHODS = ("hier", "hier-force-merge-all", "gsc")


def _weighted_label_ari(collection, labels_true, labels_hat) -> float:
    """Per-network node-label ARI averaged with weights n^(m)."""
    total = 0.0
    wsum = 0.0
    for net, zt, zh in zip(collection.networks, labels_true, labels_hat):
        if net.n < 2:
            continue  # a single vertex carries no pair information
        total += net.n * adjusted_rand_index(zt, zh)
        wsum += net.n
    return total / wsum if wsum else float("nan")


def _cluster_param_distance(state, components, budget: int) -> float:
    """Mean over estimated clusters (weighted by member count) of the
    matched graphon distance to the closest true component."""
    total = 0.0
    for cl in state.clusters.values():
        best = min(match_blocks(cl.params, comp, budget=budget)[2]
                   for comp in components)
        total += cl.m_count * best
    return total / state.m_count


def run_experiment(scenario: Scenario, method: str, replicates: int,
                   hyper: Hyperparams | None = None,
                   init_config: InitConfig | None = None,
                   options: FitOptions | None = None,
                   c_target: int | None = None,
                   base_seed: int | None = None,
                   threads: int = 1) -> list[dict]:
    """Replicated fits of one scenario with one method.

    Every replicate draws a fresh collection from a replicate-specific seed
    and shares that seed across methods, so different methods see identical
    data when run with the same base seed. Returns one row dict per
    replicate (see REPORT_COLUMNS; rows carry an extra k_hat field with the
    largest fitted cluster's block count).
    """
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of "
                         f"{_METHODS}")
    if method == "gsc" and c_target is None:
        raise ValueError("gsc needs c_target")
    hyper = hyper or Hyperparams()
    init_config = init_config or InitConfig()
    base = scenario.seed if base_seed is None else int(base_seed)
    rows = []
    for rep in range(int(replicates)):
        sim_seed, aux_seed = (int(x) for x in np.random.SeedSequence(
            [base & 0xFFFFFFFF, rep]).generate_state(2))
        sim = simulate(scenario, seed=sim_seed)
        c_true = int(np.unique(sim.u).size)
        t0 = time.perf_counter()
        results = init_collection(sim.collection, hyper,
                                  replace(init_config, seed=aux_seed),
                                  threads=threads)
        if method == "gsc":
            u_hat = gsc_baseline(sim.collection, [r.params for r in results],
                                 c_target, random_state=aux_seed & 0x7FFFFFFF)
            seconds = time.perf_counter() - t0
            labels_hat = [r.labels for r in results]
            c_hat = int(np.unique(u_hat).size)
            k_hat = float("nan")
            mean_dist = float("nan")
        else:
            opts = options or FitOptions()
            opts = replace(opts,
                           force_merge_all=(method == "hier-force-merge-all"),
                           seed=aux_seed)
            state, _dendro = fit(sim.collection, hyper,
                                 [r.labels for r in results], opts)
            seconds = time.perf_counter() - t0
            u_hat = state.U
            c_hat = state.C
            labels_hat = [None] * sim.collection.m_count
            for cl in state.clusters.values():
                for mm, z in zip(cl.members, cl.labels):
                    labels_hat[mm] = z
            largest = max(state.clusters.values(),
                          key=lambda cl: (cl.m_count, -cl.id))
            k_hat = largest.k
            mean_dist = _cluster_param_distance(state, sim.components,
                                                opts.match_budget)
        rows.append({
            "scenario": scenario.name, "method": method, "replicate": rep,
            "M": scenario.m_count, "C_true": c_true, "C_hat": c_hat,
            "ari_clusters": adjusted_rand_index(sim.u, u_hat),
            "ari_labels": _weighted_label_ari(sim.collection, sim.labels,
                                              labels_hat),
            "mean_graphon_dist": mean_dist, "seconds": seconds,
            "k_hat": k_hat,
        })
    return rows


def write_report(rows, path) -> None:
    """TSV report with the fixed REPORT_COLUMNS header, one row per
    replicate. Floats use repr for lossless round trips."""

    def cell(v):
        if isinstance(v, float):
            return repr(v) if math.isfinite(v) else "nan"
        return str(v)

    lines = ["\t".join(REPORT_COLUMNS)]
    for row in rows:
        lines.append("\t".join(cell(row[c]) for c in REPORT_COLUMNS))
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
