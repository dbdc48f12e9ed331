"""Data-generating processes for the coverage simulations, with their true quantiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._backend import kernels as _k
from .errors import DomainError

UNCONDITIONAL_KINDS = ("normal", "cauchy", "uniform", "exponential", "lognormal", "t3",
                       "chi2_3_centered")
CONDITIONAL_KINDS = ("fan_liu_model1", "rqss_curve")
ERROR_KINDS = ("normal", "t3", "cauchy", "chi2_3_centered")

_RQSS_SHIFT = 2.0 ** (-7.0 / 5.0)


def _draw(kind: str, gen: np.random.Generator, shape) -> np.ndarray:
    if kind == "normal":
        return gen.standard_normal(shape)
    if kind == "cauchy":
        return gen.standard_cauchy(shape)
    if kind == "uniform":
        return gen.random(shape)
    if kind == "exponential":
        return gen.standard_exponential(shape)
    if kind == "lognormal":
        return np.exp(gen.standard_normal(shape))
    if kind == "t3":
        return gen.standard_t(3, shape)
    if kind == "chi2_3_centered":
        return gen.chisquare(3, shape)
    raise DomainError(f"unknown distribution {kind!r}")


def _raw_quantile(kind: str, p: float) -> float:
    if kind == "normal":
        return _k.normal_quantile(p)
    if kind == "cauchy":
        return math.tan(math.pi * (p - 0.5))
    if kind == "uniform":
        return p
    if kind == "exponential":
        return -math.log1p(-p)
    if kind == "lognormal":
        return math.exp(_k.normal_quantile(p))
    if kind == "t3":
        return float(stats.t.ppf(p, 3))
    if kind == "chi2_3_centered":
        return float(stats.chi2.ppf(p, 3))
    raise DomainError(f"unknown distribution {kind!r}")


def raw_cdf(kind: str, x):
    """CDF of the uncentered draw; used by the generator self-tests."""
    table = {
        "normal": stats.norm.cdf,
        "cauchy": stats.cauchy.cdf,
        "uniform": stats.uniform.cdf,
        "exponential": stats.expon.cdf,
        "lognormal": stats.lognorm(1.0).cdf,
        "t3": stats.t(3).cdf,
        "chi2_3_centered": stats.chi2(3).cdf,
    }
    return table[kind](x)


def model1_mean(x):
    return 2.5 + np.sin(2.0 * x) + 2.0 * np.exp(-16.0 * x * x)


def rqss_curve(x):
    return np.sqrt(x * (1.0 - x)) * np.sin(2.0 * np.pi * (1.0 + _RQSS_SHIFT) / (x + _RQSS_SHIFT))


@dataclass(frozen=True)
class Dgp:
    """A simulation design.

    Unconditional kinds draw iid X directly. ``chi2_3_centered`` subtracts
    the ``center_p`` quantile of chi^2_3, so its ``center_p`` quantile is 0.

    Conditional kinds:
      ``fan_liu_model1``: X ~ N(0,1), Y = 2.5 + sin 2X + 2 exp(-16 X^2) + 0.5 e,
      with e drawn from ``error`` (uncentered).
      ``rqss_curve``: X ~ U(0,1), Y = g(X) + s(X) U, with U from ``error``
      shifted so that P(U < 0) = center_p, and s(x) = sigma or sigma (1 + x)
      when ``hetero``. With center_p = p the conditional p-quantile is g(x).
    """

    kind: str
    error: str = "normal"
    sigma: float = 0.2
    hetero: bool = False
    center_p: float = 0.5

    def __post_init__(self):
        if self.kind not in UNCONDITIONAL_KINDS + CONDITIONAL_KINDS:
            raise DomainError(f"unknown DGP kind {self.kind!r}")
        if self.error not in ERROR_KINDS:
            raise DomainError(f"unknown error kind {self.error!r}")
        if self.sigma < 0.0:
            raise DomainError("sigma must be non-negative")

    @property
    def conditional(self) -> bool:
        return self.kind in CONDITIONAL_KINDS

    def _centered(self, kind: str, gen, shape) -> np.ndarray:
        draws = _draw(kind, gen, shape)
        shift = self._shift(kind)
        return draws - shift if shift else draws

    def _shift(self, kind: str) -> float:
        if self.kind == "rqss_curve" or kind == "chi2_3_centered":
            return _raw_quantile(kind, self.center_p)
        return 0.0

    def sample(self, gen: np.random.Generator, shape) -> np.ndarray:
        if self.conditional:
            raise DomainError(f"{self.kind} is conditional; use sample_xy")
        return self._centered(self.kind, gen, shape)

    def quantile(self, p: float) -> float:
        if self.conditional:
            raise DomainError(f"{self.kind} is conditional; use conditional_quantile")
        return _raw_quantile(self.kind, p) - self._shift(self.kind)

    def sample_xy(self, gen: np.random.Generator, shape) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "fan_liu_model1":
            x = gen.standard_normal(shape)
            e = _draw(self.error, gen, shape)
            return x, model1_mean(x) + 0.5 * e
        if self.kind == "rqss_curve":
            x = gen.random(shape)
            u = self._centered(self.error, gen, shape)
            scale = self.sigma * (1.0 + x) if self.hetero else self.sigma
            return x, rqss_curve(x) + scale * u
        raise DomainError(f"{self.kind} is unconditional; use sample")

    def conditional_quantile(self, x0: float, p: float) -> float:
        if self.kind == "fan_liu_model1":
            return float(model1_mean(x0) + 0.5 * _raw_quantile(self.error, p))
        if self.kind == "rqss_curve":
            scale = self.sigma * (1.0 + x0) if self.hetero else self.sigma
            err_q = _raw_quantile(self.error, p) - self._shift(self.error)
            return float(rqss_curve(x0) + scale * err_q)
        raise DomainError(f"{self.kind} is unconditional; use quantile")
