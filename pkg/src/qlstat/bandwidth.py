"""Coverage-error-optimal plug-in bandwidths for the windowed conditional CI (d = 1).

One-sided:  h_{+-} = n^(-3/7) (z_{1-alpha} / (3 sqrt(p(1-p) f_X) |B|))^(2/7),
            h_{++} = 0.770 h_{+-}
Two-sided:  h = n^(-1/3) ((sgn(bias)(1-2p) + sqrt((1-2p)^2 + 4)) / (2|B|))^(1/3)
with B = f_X F^(0,2) + 2 f_X' F^(0,1). Every bandwidth is then scaled by
max(1, n/1000)^(5/60).

The interpolation weight in the underlying coverage expansion is fixed at
0.2; the constants above already have it folded in.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

from ._backend import kernels as _k
from .errors import DegenerateNuisanceError, DomainError
from .nuisance import Nuisances

# |(-2d/(2b+d))^2|^(1/(2b+3d)) with d=1, b=2; printed as 0.770 in the source
PLUS_PLUS_RATIO = (4.0 / 25.0) ** (1.0 / 7.0)
EPSILON_RULE_OF_THUMB = 0.2
_FLAT = 1e-12


class FlatBiasWarning(UserWarning):
    """The estimated bias bracket is zero; a rate-only fallback bandwidth was used."""


@dataclass(frozen=True)
class BandwidthReport:
    h: float
    side: Literal["lower", "upper", "two_sided"]
    bias_sign: int
    nuisances: Nuisances | None
    large_n_coefficient: float
    n: int
    base_h: float
    rule: str  # which formula produced base_h
    notes: tuple[str, ...] = field(default=())


def large_n_coefficient(n: int) -> float:
    return max(1.0, n / 1000.0) ** (5.0 / 60.0)


def bias_leading_term(h: float, nuisances: Nuisances) -> float:
    """-h^2 [f_X F^(0,2) + 2 f_X' F^(0,1)] / (6 f_X f_{Y|X})."""
    if not (nuisances.f_x > 0.0 and nuisances.cond_density > 0.0):
        raise DegenerateNuisanceError("density estimates must be positive")
    return -h * h * nuisances.bracket / (6.0 * nuisances.f_x * nuisances.cond_density)


def bias_sign(nuisances: Nuisances) -> int:
    """Sign of the leading bias term: the opposite sign of the bracket."""
    b = nuisances.bracket
    if abs(b) <= _FLAT:
        return 0
    return -1 if b > 0.0 else 1


def one_sided_pm(n: int, p: float, alpha: float, f_x: float, bracket: float) -> float:
    """h_{+-} from the closed form; ``bracket`` enters in absolute value."""
    z = _k.normal_quantile(1.0 - alpha)
    return n ** (-3.0 / 7.0) * (z / (3.0 * math.sqrt(p * (1.0 - p) * f_x) * abs(bracket))) ** (2.0 / 7.0)


def two_sided_h(n: int, p: float, bracket: float, sign: int) -> float:
    s = 1.0 if sign >= 0 else -1.0  # sgn(0) taken as +1
    num = s * (1.0 - 2.0 * p) + math.sqrt((1.0 - 2.0 * p) ** 2 + 4.0)
    return n ** (-1.0 / 3.0) * (num / (2.0 * abs(bracket))) ** (1.0 / 3.0)


def _check(n: int, p: float, nuisances: Nuisances) -> None:
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if not nuisances.f_x > 0.0:
        raise DegenerateNuisanceError("estimated f_X(x0) must be positive")


def plugin_one_sided(n: int, p: float, alpha: float, nuisances: Nuisances,
                     ci_side: Literal["lower", "upper"], *, large_n: bool = True) -> BandwidthReport:
    """Plug-in bandwidth for a one-sided CI.

    Lower CI: h_{+-} when the bias estimate is negative, else h_{++}.
    Upper CI: the mirror image.
    """
    _check(n, p, nuisances)
    if ci_side not in ("lower", "upper"):
        raise DomainError(f"ci_side must be 'lower' or 'upper', got {ci_side!r}")
    if not (0.0 < alpha < 0.5):
        raise DomainError(f"one-sided plug-in needs alpha in (0, 0.5), got {alpha!r}")
    sign = bias_sign(nuisances)
    coef = large_n_coefficient(n) if large_n else 1.0
    if sign == 0:
        warnings.warn("bias bracket is zero; using sd(X) n^(-3/7)", FlatBiasWarning, stacklevel=2)
        base = nuisances.density.scale * n ** (-3.0 / 7.0)
        return BandwidthReport(h=base * coef, side=ci_side, bias_sign=0, nuisances=nuisances,
                               large_n_coefficient=coef, n=n, base_h=base, rule="flat_bias")
    h_pm = one_sided_pm(n, p, alpha, nuisances.f_x, nuisances.bracket)
    negative_bias = sign < 0
    use_pm = negative_bias if ci_side == "lower" else not negative_bias
    base = h_pm if use_pm else PLUS_PLUS_RATIO * h_pm
    return BandwidthReport(h=base * coef, side=ci_side, bias_sign=sign, nuisances=nuisances,
                           large_n_coefficient=coef, n=n, base_h=base,
                           rule="h_pm" if use_pm else "h_pp")


def plugin_two_sided(n: int, p: float, nuisances: Nuisances, *,
                     large_n: bool = True) -> BandwidthReport:
    _check(n, p, nuisances)
    sign = bias_sign(nuisances)
    coef = large_n_coefficient(n) if large_n else 1.0
    if sign == 0:
        warnings.warn("bias bracket is zero; using sd(X) n^(-1/3)", FlatBiasWarning, stacklevel=2)
        base = nuisances.density.scale * n ** (-1.0 / 3.0)
        return BandwidthReport(h=base * coef, side="two_sided", bias_sign=0, nuisances=nuisances,
                               large_n_coefficient=coef, n=n, base_h=base, rule="flat_bias")
    base = two_sided_h(n, p, nuisances.bracket, sign)
    return BandwidthReport(h=base * coef, side="two_sided", bias_sign=sign, nuisances=nuisances,
                           large_n_coefficient=coef, n=n, base_h=base, rule="two_sided")


def plugin(n: int, p: float, alpha: float, nuisances: Nuisances, side: str, *,
           large_n: bool = True) -> BandwidthReport:
    if side == "two_sided":
        return plugin_two_sided(n, p, nuisances, large_n=large_n)
    return plugin_one_sided(n, p, alpha, nuisances, side, large_n=large_n)
