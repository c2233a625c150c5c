"""Per-network SBM fits used to start the agglomerative clustering.

Each network gets its own single-network SBM: for every block count in a
small range, the greedy ICL label optimizer runs from several random
labelings, and the best ICL wins. The ICL's built-in model penalty handles
the choice of block count, and runs whose blocks empty out collapse to a
smaller count on their own.

Seeds are derived from network content, not position, so identical inputs
give identical fits and reordering a collection cannot change results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graphs import Network, NetworkCollection
from .sbm import (Hyperparams, SbmParams, SbmState, count_stats, map_estimate,
                  maximize_icl_labels)

__all__ = ["InitConfig", "InitResult", "init_network", "init_collection"]


@dataclass(frozen=True)
class InitConfig:
    """Search range and restart policy for per-network fits. k_max=None
    means min(6, n // 3) per network (at least 1)."""

    k_min: int = 1
    k_max: int | None = None
    restarts: int = 10
    seed: int = 0
    max_sweeps: int = 100

    def __post_init__(self):
        if self.k_min < 1:
            raise ValueError(f"k_min must be >= 1, got {self.k_min}")
        if self.k_max is not None and self.k_max < self.k_min:
            raise ValueError(f"k_max {self.k_max} < k_min {self.k_min}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")

    def k_range(self, n: int) -> range:
        hi = self.k_max if self.k_max is not None else min(6, max(1, n // 3))
        hi = min(hi, n)  # more nonempty blocks than vertices is impossible
        lo = min(self.k_min, hi)
        return range(lo, hi + 1)


class InitResult(NamedTuple):
    labels: np.ndarray
    params: SbmParams
    k: int
    icl: float


def _random_labels(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform labels over k blocks conditioned on every block nonempty."""
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    for _ in range(10_000):
        z = rng.integers(0, k, size=n, dtype=np.int64)
        if np.bincount(z, minlength=k).min() > 0:
            return z
    # conditioned draw is astronomically unlikely to get here unless k ~ n;
    # pin one random representative per block and fill the rest uniformly
    z = rng.integers(0, k, size=n, dtype=np.int64)
    z[rng.choice(n, size=k, replace=False)] = rng.permutation(k)
    return z


def init_network(network: Network, hyper: Hyperparams, config: InitConfig,
                 rng: np.random.Generator) -> InitResult:
    """Best single-network SBM over the configured block-count range.

    Ties in ICL keep the earliest run, hence the smallest block count; the
    returned labeling never has empty blocks.
    """
    n = network.n
    best_labels = None
    best_k = 0
    best_icl = -np.inf
    for k in config.k_range(n):
        runs = 1 if k == 1 else config.restarts
        for _ in range(runs):
            z = _random_labels(n, k, rng)
            state = SbmState([network], [z], k)
            labels, icl, _ = maximize_icl_labels(state, hyper, rng,
                                                 max_sweeps=config.max_sweeps)
            if icl > best_icl:
                best_labels, best_k, best_icl = labels[0], state.k, icl
    stats = count_stats([network], [best_labels], best_k)
    return InitResult(best_labels, map_estimate(stats, hyper), best_k,
                      best_icl)


def network_rng(seed: int, network: Network) -> np.random.Generator:
    """Generator keyed by (seed, network content)."""
    words = np.frombuffer(network.content_digest(), dtype=np.uint32)
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 1, *map(int, words)])
    return np.random.default_rng(ss)


def init_collection(collection: NetworkCollection, hyper: Hyperparams,
                    config: InitConfig, threads: int = 1) -> list[InitResult]:
    """Independent init_network for every network in the collection, in
    collection order. Reproducible bit-for-bit for a fixed config seed
    regardless of thread count."""

    def run(net: Network) -> InitResult:
        return init_network(net, hyper, config, network_rng(config.seed, net))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(run, collection.networks))
    return [run(net) for net in collection.networks]
