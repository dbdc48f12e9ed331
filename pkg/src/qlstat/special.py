"""Beta and normal special functions.

Thin public layer over the scalar kernels selected in :mod:`qlstat._backend`.
All beta quantities are evaluated in log space, so shapes in the millions
are fine.
"""

from __future__ import annotations

import math

from ._backend import kernels as _k

__all__ = [
    "log_gamma",
    "log_beta",
    "reg_inc_beta",
    "reg_inc_beta_upper",
    "inv_reg_inc_beta",
    "beta_pdf",
    "beta_logpdf",
    "beta_mean",
    "normal_cdf",
    "normal_pdf",
    "normal_quantile",
]

log_gamma = _k.log_gamma
log_beta = _k.log_beta
normal_cdf = _k.normal_cdf
normal_pdf = _k.normal_pdf
normal_quantile = _k.normal_quantile


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    return _k.reg_inc_beta(x, a, b)


def reg_inc_beta_upper(x: float, a: float, b: float) -> float:
    """Complement 1 - I_x(a, b), accurate when I_x is close to 1."""
    return _k.reg_inc_beta_upper(x, a, b)


def inv_reg_inc_beta(q: float, a: float, b: float) -> float:
    """Beta(a, b) quantile: the x with I_x(a, b) = q.

    Raises :class:`~qlstat.errors.NumericalError` (with ``residual``) if the
    safeguarded Newton iteration cannot reach a residual of 1e-10.
    """
    return _k.inv_reg_inc_beta(q, a, b)


def beta_logpdf(x: float, a: float, b: float) -> float:
    return _k.beta_log_pdf(x, a, b)


def beta_pdf(x: float, a: float, b: float) -> float:
    return math.exp(_k.beta_log_pdf(x, a, b))


def beta_mean(a: float, b: float) -> float:
    return a / (a + b)
