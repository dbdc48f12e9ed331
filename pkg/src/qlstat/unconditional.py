"""Confidence intervals for a population quantile from fractional order statistics.

The endpoint index ``u_high`` solves P(Beta((n+1)u, (n+1)(1-u)) < p) = alpha
and ``u_low`` solves P(Beta(...) > p) = alpha. The interval endpoints are the
interpolated L-statistics at those indices. The calibrated variants raise
each tail's alpha by the analytic n^-1 coverage error term before solving
again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ._backend import kernels as _k
from .errors import CalibrationOverflowError, DomainError, ExtremeQuantileError
from .fractional import FractionalIndex, SortedSample, decompose, l_statistic

Side = Literal["lower", "upper", "two_sided"]
SIDES = ("lower", "upper", "two_sided")


@dataclass(frozen=True)
class QuantileRequest:
    """One inference task.

    ``side="lower"`` is the one-sided interval (-inf, Q(u_high)); ``"upper"``
    is (Q(u_low), inf). For two-sided intervals the low tail gets level
    ``tail_split * alpha`` and the high tail ``(1 - tail_split) * alpha``.
    """

    p: float
    alpha: float = 0.05
    side: Side = "two_sided"
    calibrated: bool = False
    tail_split: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {self.p!r}")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.side not in SIDES:
            raise DomainError(f"side must be one of {SIDES}, got {self.side!r}")
        if not (0.0 < self.tail_split < 1.0):
            raise DomainError(f"tail_split must lie in (0, 1), got {self.tail_split!r}")

    @property
    def alpha_low(self) -> float | None:
        if self.side == "lower":
            return None
        return self.alpha if self.side == "upper" else self.tail_split * self.alpha

    @property
    def alpha_high(self) -> float | None:
        if self.side == "upper":
            return None
        return self.alpha if self.side == "lower" else (1.0 - self.tail_split) * self.alpha

    def with_alpha(self, alpha: float) -> "QuantileRequest":
        return QuantileRequest(self.p, alpha, self.side, self.calibrated, self.tail_split)


@dataclass(frozen=True)
class EndpointIndices:
    u_low: float | None = None
    u_high: float | None = None
    eps_low: float | None = None
    eps_high: float | None = None
    alpha_effective_low: float | None = None
    alpha_effective_high: float | None = None


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    indices: EndpointIndices
    request: QuantileRequest
    n: int
    conservative: bool = False
    notes: tuple[str, ...] = field(default=())

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def solve_u_high(n: int, p: float, alpha: float) -> float:
    """Index u with I_p((n+1)u, (n+1)(1-u)) = alpha (residual <= 1e-10)."""
    return _k.solve_endpoint(n, p, alpha, True)[0]


def solve_u_low(n: int, p: float, alpha: float) -> float:
    """Index u with 1 - I_p((n+1)u, (n+1)(1-u)) = alpha (residual <= 1e-10)."""
    return _k.solve_endpoint(n, p, alpha, False)[0]


def endpoint_residual(n: int, p: float, alpha: float, u: float, tail: str) -> float:
    a, b = (n + 1) * u, (n + 1) * (1.0 - u)
    if tail == "high":
        return _k.reg_inc_beta(p, a, b) - alpha
    return _k.reg_inc_beta_upper(p, a, b) - alpha


def endpoint_approx(n: int, p: float, alpha: float, side: str) -> float:
    """Two-term normal approximation to u_low / u_high; the solver's warm start."""
    if side not in ("low", "high"):
        raise DomainError(f"side must be 'low' or 'high', got {side!r}")
    return _k.endpoint_approx(n, p, alpha, side == "high")


def calibration_term(alpha: float, p: float, n: int, epsilon: float) -> float:
    z = _k.normal_quantile(1.0 - alpha)
    return epsilon * (1.0 - epsilon) * z * _k.normal_pdf(z) / (p * (1.0 - p) * n)


def calibrate_alpha(alpha: float, p: float, n: int, epsilon: float) -> float:
    """Per-tail level with the n^-1 over-coverage term added back."""
    if not (0.0 < alpha < 0.5):
        raise DomainError(f"calibration needs a per-tail alpha in (0, 0.5), got {alpha!r}")
    out = alpha + calibration_term(alpha, p, n, epsilon)
    if out >= 1.0:
        raise CalibrationOverflowError(f"calibrated alpha {out:.4g} >= 1 (n={n})")
    return out


def _solve(n: int, p: float, alpha: float, tail: str) -> float:
    try:
        return _k.solve_endpoint(n, p, alpha, tail == "high")[0]
    except ExtremeQuantileError as exc:
        raise ExtremeQuantileError(str(exc), min_n=min_n_for_tail(p, alpha, tail, n),
                                   tail=tail) from None


def _tail_index(n: int, p: float, alpha: float, tail: str, calibrated: bool):
    u = _solve(n, p, alpha, tail)
    idx = decompose(u, n, check=False)
    used = alpha
    if calibrated:
        used = calibrate_alpha(alpha, p, n, idx.epsilon)
        if used != alpha:
            u = _solve(n, p, used, tail)
            idx = decompose(u, n, check=False)
    return idx, used


def _tail_evaluable(n: int, p: float, alpha: float, tail: str) -> bool:
    try:
        u = _k.solve_endpoint(n, p, alpha, tail == "high")[0]
    except ExtremeQuantileError:
        return False
    return decompose(u, n, check=False).evaluable


def min_n_for_tail(p: float, alpha: float, tail: str, n_from: int = 1,
                   n_cap: int = 10**8) -> int | None:
    """Smallest sample size above ``n_from`` whose ``tail`` endpoint is evaluable."""
    lo = n_from
    hi = max(2 * n_from, 2)
    while not _tail_evaluable(hi, p, alpha, tail):
        lo = hi
        hi *= 2
        if hi > n_cap:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _tail_evaluable(mid, p, alpha, tail):
            hi = mid
        else:
            lo = mid
    return hi


def _endpoint(sample: SortedSample, idx: FractionalIndex, tail: str,
              bound: float | None, p: float, alpha: float) -> tuple[float, bool]:
    if idx.evaluable:
        return l_statistic(sample, idx), False
    if bound is None:
        raise ExtremeQuantileError(
            f"{tail} endpoint needs order statistic {idx.k + idx.epsilon:.6g} "
            f"outside 1..{sample.n}",
            min_n=min_n_for_tail(p, alpha, tail, sample.n), tail=tail)
    x = sample.values
    n = sample.n
    # a known support bound stands in for the missing X_{n:0} or X_{n:n+1}
    if tail == "high" and idx.k >= n:
        if bound < x[-1]:
            raise DomainError("upper support bound lies below the sample maximum")
        if idx.k == n:
            return float(x[-1] + idx.epsilon * (bound - x[-1])), True
        return float(bound), True
    if tail == "low" and idx.k < 1:
        if bound > x[0]:
            raise DomainError("lower support bound lies above the sample minimum")
        if idx.k == 0:
            return float(bound + idx.epsilon * (x[0] - bound)), True
        return float(bound), True
    raise ExtremeQuantileError(
        f"{tail} endpoint index {idx.k + idx.epsilon:.6g} cannot use a support bound",
        tail=tail)


def confidence_interval(sample, request: QuantileRequest, *,
                        bound_lower: float | None = None,
                        bound_upper: float | None = None) -> ConfidenceInterval:
    """Quantile CI from the interpolated L-statistics at the solved indices.

    ``sample`` may be a :class:`SortedSample` or any array-like (sorted
    here). Calibration takes epsilon from the uncalibrated index and solves
    once more at the adjusted level; it is not iterated.
    """
    if not isinstance(sample, SortedSample):
        sample = SortedSample.from_unsorted(sample)
    n = sample.n
    p = request.p
    lower, upper = -math.inf, math.inf
    conservative = False
    kw = {}
    if request.alpha_low is not None:
        idx, used = _tail_index(n, p, request.alpha_low, "low", request.calibrated)
        lower, cons = _endpoint(sample, idx, "low", bound_lower, p, request.alpha_low)
        conservative |= cons
        kw.update(u_low=idx.u, eps_low=idx.epsilon, alpha_effective_low=used)
    if request.alpha_high is not None:
        idx, used = _tail_index(n, p, request.alpha_high, "high", request.calibrated)
        upper, cons = _endpoint(sample, idx, "high", bound_upper, p, request.alpha_high)
        conservative |= cons
        kw.update(u_high=idx.u, eps_high=idx.epsilon, alpha_effective_high=used)
    return ConfidenceInterval(lower=lower, upper=upper, indices=EndpointIndices(**kw),
                              request=request, n=n, conservative=conservative)


def interval_indices(n: int, request: QuantileRequest) -> dict[str, FractionalIndex]:
    """Endpoint indices for sample size ``n`` without touching any data.

    Used by the simulation harness, which evaluates the same indices on many
    samples. Keys are ``"low"``/``"high"``; non-evaluable indices raise.
    """
    out = {}
    for tail, alpha in (("low", request.alpha_low), ("high", request.alpha_high)):
        if alpha is None:
            continue
        idx, _ = _tail_index(n, request.p, alpha, tail, request.calibrated)
        if not idx.evaluable:
            raise ExtremeQuantileError(
                f"{tail} endpoint needs order statistic {idx.k + idx.epsilon:.6g} "
                f"outside 1..{n}", min_n=min_n_for_tail(request.p, alpha, tail, n), tail=tail)
        out[tail] = idx
    return out


def asymptotic_power(kappa: float, p: float, alpha: float, f_at_q: float, side: Side) -> float:
    """Limit probability of excluding Q(p) + kappa/sqrt(n) from the CI.

    S = kappa f(Q(p)) / sqrt(p(1-p)); lower: Phi(z_alpha + S), upper:
    Phi(z_alpha - S), two-sided: Phi(z_{alpha/2} + S) + Phi(z_{alpha/2} - S).
    """
    if not (f_at_q > 0.0):
        raise DomainError("density at the quantile must be positive")
    s = kappa * f_at_q / math.sqrt(p * (1.0 - p))
    cdf = _k.normal_cdf
    if side == "lower":
        return cdf(_k.normal_quantile(alpha) + s)
    if side == "upper":
        return cdf(_k.normal_quantile(alpha) - s)
    if side == "two_sided":
        z = _k.normal_quantile(alpha / 2.0)
        return cdf(z + s) + cdf(z - s)
    raise DomainError(f"unknown side {side!r}")


def as_sorted(data) -> SortedSample:
    if isinstance(data, SortedSample):
        return data
    return SortedSample.from_unsorted(np.asarray(data, dtype=float))
