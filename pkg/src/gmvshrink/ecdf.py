"""Empirical cumulative distribution functions."""

from __future__ import annotations

import numpy as np

from .errors import DataError


class ECDF:
    """Right-continuous step function ``F(x) = #{s_i <= x} / N``.

    >>> F = ECDF([1, 1, 2])
    >>> float(F(1))
    0.6666666666666666
    """

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise DataError("ECDF needs at least one sample")
        if np.isnan(x).any():
            raise DataError("ECDF samples contain NaN")
        self.x = x

    def __len__(self):
        return self.x.size

    def __call__(self, t):
        return np.searchsorted(self.x, t, side="right") / self.x.size

    def points(self) -> list[tuple[float, float]]:
        """Jump locations and the CDF value reached at each (ties collapsed)."""
        values, counts = np.unique(self.x, return_counts=True)
        cdf = np.cumsum(counts) / self.x.size
        return list(zip(values.tolist(), cdf.tolist()))

    def quantile(self, q: float) -> float:
        """Smallest sample ``s`` with ``F(s) >= q``."""
        k = int(np.ceil(q * self.x.size)) - 1
        return float(self.x[min(max(k, 0), self.x.size - 1)])


def ecdf(samples) -> ECDF:
    return ECDF(samples)
