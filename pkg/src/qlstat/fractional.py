"""Fractional order statistics: index decomposition and the interpolated L-statistic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExtremeQuantileError

_SNAP = 1e-12


@dataclass(frozen=True)
class FractionalIndex:
    """Position ``u`` in a sample of size ``n`` split as u(n+1) = k + epsilon."""

    u: float
    n: int
    k: int
    epsilon: float

    @property
    def evaluable(self) -> bool:
        return 1 <= self.k <= self.n and not (self.k == self.n and self.epsilon > 0.0)


@dataclass(frozen=True)
class SortedSample:
    values: np.ndarray

    @classmethod
    def from_unsorted(cls, data) -> "SortedSample":
        arr = np.sort(np.asarray(data, dtype=float).ravel(), kind="stable")
        return cls._checked(arr)

    @classmethod
    def from_sorted(cls, data) -> "SortedSample":
        arr = np.asarray(data, dtype=float).ravel()
        if arr.size > 1 and np.any(arr[1:] < arr[:-1]):
            raise DomainError("sample values are not in ascending order")
        return cls._checked(arr)

    @classmethod
    def _checked(cls, arr: np.ndarray) -> "SortedSample":
        if arr.size < 1:
            raise DomainError("sample must contain at least one value")
        if not np.all(np.isfinite(arr)):
            raise DomainError("sample contains non-finite values")
        arr.setflags(write=False)
        return cls(arr)

    @property
    def n(self) -> int:
        return int(self.values.size)


def min_evaluable_n(u: float) -> int:
    """Smallest n with 1 <= u(n+1) <= n."""
    # 1 <= u(n+1)  <=>  n >= 1/u - 1 ;  u(n+1) <= n  <=>  n >= u/(1-u)
    lo = math.ceil(1.0 / u - 1.0 - _SNAP)
    hi = math.ceil(u / (1.0 - u) - _SNAP)
    return max(1, lo, hi)


def decompose(u: float, n: int, *, check: bool = True) -> FractionalIndex:
    """Split ``u(n+1)`` into its integer part ``k`` and weight ``epsilon``.

    Values within 1e-12 of an integer are snapped to it, so u=0.5, n=9 gives
    k=5, epsilon=0 even when 0.5*10 is computed inexactly upstream.
    """
    if not (0.0 < u < 1.0):
        raise DomainError(f"u must lie in (0, 1), got {u!r}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")
    pos = u * (n + 1)
    near = round(pos)
    if abs(pos - near) <= _SNAP * max(1.0, pos):
        k, eps = int(near), 0.0
    else:
        k = math.floor(pos)
        eps = pos - k
    idx = FractionalIndex(u=u, n=n, k=k, epsilon=eps)
    if check and not idx.evaluable:
        raise ExtremeQuantileError(
            f"u={u} needs order statistic index {pos:.6g} outside 1..{n}",
            min_n=min_evaluable_n(u))
    return idx


def l_statistic(sample: SortedSample, idx: FractionalIndex) -> float:
    """(1 - eps) X_{n:k} + eps X_{n:k+1}."""
    if idx.n != sample.n:
        raise DomainError(f"index built for n={idx.n} but sample has n={sample.n}")
    if not idx.evaluable:
        raise ExtremeQuantileError(
            f"order statistic index {idx.k + idx.epsilon:.6g} outside 1..{idx.n}",
            min_n=min_evaluable_n(idx.u))
    x = sample.values
    lo = x[idx.k - 1]
    if idx.epsilon == 0.0:
        return float(lo)
    hi = x[idx.k]
    # written as lo + eps*(hi - lo) so the result is monotone in eps under rounding
    val = lo + idx.epsilon * (hi - lo)
    return float(min(val, hi))


def l_statistic_rows(sorted_rows: np.ndarray, idx: FractionalIndex) -> np.ndarray:
    """Row-wise L-statistic for a (replications, n) array of sorted samples."""
    lo = sorted_rows[:, idx.k - 1]
    if idx.epsilon == 0.0:
        return lo.copy()
    hi = sorted_rows[:, idx.k]
    return np.minimum(lo + idx.epsilon * (hi - lo), hi)


def quantile(data, u: float) -> float:
    """Convenience: L-statistic of unsorted data at position u."""
    s = SortedSample.from_unsorted(data)
    return l_statistic(s, decompose(u, s.n))
