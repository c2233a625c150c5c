"""Cached log-gamma lookup tables.

Every ICL formula in the package needs gammaln(offset + t) for nonnegative
integer counts t and a handful of fixed float offsets (the prior
hyperparameters and small multiples of them). Precomputing each offset's
values as one vectorized scipy call makes the incremental update kernels
pure table lookups, which keeps them fast and makes incremental results
bit-identical to from-scratch evaluation.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

__all__ = ["lgamma_table", "LgammaTable"]


class LgammaTable:
    """values[t] == gammaln(offset + t) for t = 0..len-1, grown on demand."""

    __slots__ = ("offset", "values")

    def __init__(self, offset: float):
        if not offset > 0:
            raise ValueError(f"table offset must be positive, got {offset!r}")
        self.offset = float(offset)
        self.values = gammaln(self.offset + np.arange(64, dtype=np.float64))

    def ensure(self, max_index: int) -> np.ndarray:
        """Grow so that values[max_index] is valid; returns the array."""
        if max_index >= self.values.size:
            size = 1 << int(max_index).bit_length()
            # rebuilt wholesale: gammaln is cheap vectorized and growth is rare
            self.values = gammaln(self.offset + np.arange(size + 1, dtype=np.float64))
        return self.values

    def __getitem__(self, t: int) -> float:
        if t >= self.values.size:
            self.ensure(t)
        return float(self.values[t])


_cache: dict[float, LgammaTable] = {}


def lgamma_table(offset: float, max_index: int = 0) -> LgammaTable:
    """Shared table for one offset. Safe under CPython threads: worst case
    a concurrent grow rebuilds the same values twice."""
    key = float(offset)
    tab = _cache.get(key)
    if tab is None:
        tab = _cache[key] = LgammaTable(key)
    if max_index:
        tab.ensure(max_index)
    return tab
