"""Conditional quantile CIs from a local sample in an L-infinity window around x0.

The responses whose covariates fall in {x : |x - x0|_inf <= h} (and whose
discrete covariates equal the requested cell) form an iid sample from the
window-conditional distribution. The unconditional CI is run on that sample
unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from .bandwidth import BandwidthReport, plugin
from .errors import DomainError, EmptyWindowError, ExtremeQuantileError, ModeViolationError
from .fractional import SortedSample
from .nuisance import estimate_nuisances
from .unconditional import ConfidenceInterval, QuantileRequest, confidence_interval


@dataclass(frozen=True)
class Dataset:
    """Immutable (Y, X[, discrete]) arrays. X is (n, d); discrete is (n, m) or None."""

    y: np.ndarray
    x: np.ndarray
    discrete: np.ndarray | None = None

    @classmethod
    def from_arrays(cls, y, x, discrete=None) -> "Dataset":
        y = np.asarray(y, dtype=float).ravel()
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] != y.size:
            raise DomainError("x must have one row per response")
        if discrete is not None:
            discrete = np.asarray(discrete)
            if discrete.ndim == 1:
                discrete = discrete[:, None]
            if discrete.shape[0] != y.size:
                raise DomainError("discrete covariates must have one row per response")
            discrete = discrete.copy()
            discrete.setflags(write=False)
        y = y.copy()
        x = x.copy()
        y.setflags(write=False)
        x.setflags(write=False)
        return cls(y=y, x=x, discrete=discrete)

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def d(self) -> int:
        return int(self.x.shape[1])

    def cell_mask(self, cell) -> np.ndarray:
        if cell is None:
            return np.ones(self.n, dtype=bool)
        if self.discrete is None:
            raise DomainError("a discrete cell was given but the data have no discrete columns")
        key = np.atleast_1d(np.asarray(cell, dtype=self.discrete.dtype))
        if key.size != self.discrete.shape[1]:
            raise DomainError("cell key length does not match the discrete columns")
        return np.all(self.discrete == key, axis=1)

    def subset(self, mask: np.ndarray) -> "Dataset":
        disc = None if self.discrete is None else self.discrete[mask]
        return Dataset.from_arrays(self.y[mask], self.x[mask], disc)


@dataclass(frozen=True)
class LocalWindow:
    x0: tuple[float, ...]
    h: float
    cell: tuple | None = None

    def __post_init__(self):
        if not (self.h > 0.0) or math.isinf(self.h):
            raise DomainError(f"window half-width must be positive and finite, got {self.h!r}")

    @classmethod
    def make(cls, x0, h: float, cell=None) -> "LocalWindow":
        x0 = tuple(float(v) for v in np.atleast_1d(x0))
        if cell is not None:
            cell = tuple(np.atleast_1d(cell).tolist())
        return cls(x0=x0, h=float(h), cell=cell)


@dataclass(frozen=True)
class LocalSample:
    y_values: SortedSample
    window: LocalWindow
    indices: np.ndarray  # original row numbers, in sorted-response order

    @property
    def N_n(self) -> int:
        return self.y_values.n


@dataclass(frozen=True)
class ConditionalResult:
    ci: ConfidenceInterval
    local: LocalSample
    h: float
    bandwidth: BandwidthReport | None


def window_mask(data: Dataset, window: LocalWindow) -> np.ndarray:
    x0 = np.asarray(window.x0, dtype=float)
    if x0.size != data.d:
        raise DomainError(f"x0 has {x0.size} components but X has {data.d}")
    inside = np.max(np.abs(data.x - x0), axis=1) <= window.h
    return inside & data.cell_mask(window.cell)


def extract_local_sample(data: Dataset, window: LocalWindow) -> LocalSample:
    """Sorted responses with covariates in the (closed) window and matching cell.

    Ties in Y are ordered by original row index, so the output is a
    deterministic function of the data.
    """
    rows = np.flatnonzero(window_mask(data, window))
    if rows.size == 0:
        raise EmptyWindowError(f"no observations within h={window.h:g} of x0={window.x0}")
    order = np.argsort(data.y[rows], kind="stable")
    rows = rows[order]
    return LocalSample(y_values=SortedSample.from_sorted(data.y[rows]), window=window,
                       indices=rows)


def plugin_bandwidth(data: Dataset, x0, request: QuantileRequest, cell=None, *,
                     large_n: bool = True) -> BandwidthReport:
    """Plug-in h from the cell's full continuous subsample (d = 1 only)."""
    if data.d != 1:
        raise DomainError(
            f"plug-in bandwidth is only available for one continuous covariate (d={data.d}); "
            "pass h explicitly")
    sub = data.subset(data.cell_mask(cell)) if cell is not None else data
    x0f = float(np.atleast_1d(x0)[0])
    nuis = estimate_nuisances(sub.x[:, 0], sub.y, x0f, request.p)
    return plugin(sub.n, request.p, request.alpha, nuis, request.side, large_n=large_n)


def conditional_interval(data: Dataset, x0, request: QuantileRequest, h: float | None = None,
                         *, cell=None, large_n: bool = True, bound_lower: float | None = None,
                         bound_upper: float | None = None) -> ConditionalResult:
    report = None
    if h is None:
        report = plugin_bandwidth(data, x0, request, cell, large_n=large_n)
        h = report.h
    window = LocalWindow.make(x0, h, cell)
    local = extract_local_sample(data, window)
    try:
        ci = confidence_interval(local.y_values, request, bound_lower=bound_lower,
                                 bound_upper=bound_upper)
    except ExtremeQuantileError as exc:
        raise ExtremeQuantileError(f"{exc} (local sample size N_n={local.N_n})",
                                   min_n=exc.min_n, tail=exc.tail, local_n=local.N_n) from None
    return ConditionalResult(ci=ci, local=local, h=h, bandwidth=report)


def joint_level(alpha: float, m: int, mode: str) -> float:
    """Per-point alpha giving joint level 1 - alpha over m points."""
    if m < 1:
        raise DomainError("need at least one evaluation point")
    if mode == "bonferroni":
        return alpha / m
    if mode == "independent_windows":
        return 1.0 - (1.0 - alpha) ** (1.0 / m)
    raise DomainError(f"unknown joint mode {mode!r}")


def windows_disjoint(windows: Sequence[LocalWindow]) -> bool:
    for i, a in enumerate(windows):
        for b in windows[i + 1:]:
            if a.cell != b.cell:
                continue
            gap = max(abs(u - v) for u, v in zip(a.x0, b.x0))
            if gap <= a.h + b.h:
                return False
    return True


def joint_intervals(data: Dataset, x0_list, request: QuantileRequest,
                    mode: Literal["bonferroni", "independent_windows"] = "bonferroni",
                    h: float | Sequence[float] | None = None, *, cells=None,
                    large_n: bool = True) -> list[ConditionalResult]:
    """Pointwise CIs at a per-point level chosen for joint 1 - alpha coverage."""
    points = list(x0_list)
    m = len(points)
    level = joint_level(request.alpha, m, mode)
    req = request.with_alpha(level)
    if cells is None:
        cells = [None] * m
    if h is None or np.isscalar(h):
        hs = [h] * m
    else:
        hs = list(h)
    resolved, reports = [], []
    for x0, hh, cell in zip(points, hs, cells):
        rep = None
        if hh is None:
            rep = plugin_bandwidth(data, x0, req, cell, large_n=large_n)
            hh = rep.h
        resolved.append(hh)
        reports.append(rep)
    windows = [LocalWindow.make(x0, hh, c) for x0, hh, c in zip(points, resolved, cells)]
    if mode == "independent_windows" and not windows_disjoint(windows):
        raise ModeViolationError("independent_windows requires pairwise-disjoint windows")
    out = []
    for x0, hh, cell, rep in zip(points, resolved, cells, reports):
        res = conditional_interval(data, x0, req, hh, cell=cell, large_n=large_n)
        out.append(replace(res, bandwidth=rep))
    return out
