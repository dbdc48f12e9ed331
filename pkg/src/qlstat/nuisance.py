"""Pilot estimates of the quantities entering the plug-in bandwidth.

``kde_with_derivative`` gives f_X(x0) and f_X'(x0) from Gaussian kernels.
``local_cubic_cdf_derivs`` regresses 1{Y <= xi_p} on a cubic in (X - x0)
with uniform weights to get the first two x-derivatives of the conditional
CDF at the pilot quantile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (CollinearDesignError, DegenerateDataError, DomainError,
                     InsufficientDataError)
from .fractional import SortedSample, decompose, l_statistic

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
MIN_KDE_POINTS = 10
MIN_CUBIC_POINTS = 8
PILOT_WINDOW_CONSTANT = 0.75


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    derivative: float
    pilot_bandwidths: tuple[float, float]
    scale: float  # sample standard deviation of X
    n: int


@dataclass(frozen=True)
class CdfDerivativeEstimate:
    d1: float
    d2: float
    pilot_xi_p: float
    pilot_bandwidth: float
    local_n: int


@dataclass(frozen=True)
class Nuisances:
    """Everything the bandwidth formulas consume, in one place."""

    density: DensityEstimate
    cdf: CdfDerivativeEstimate
    cond_density: float  # f_{Y|X}(xi_p; x0), used only for the bias value

    @property
    def f_x(self) -> float:
        return self.density.value

    @property
    def f_x_prime(self) -> float:
        return self.density.derivative

    @property
    def bracket(self) -> float:
        """f_X F^(0,2) + 2 f_X' F^(0,1)."""
        return self.f_x * self.cdf.d2 + 2.0 * self.f_x_prime * self.cdf.d1


def _as_1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DomainError("nuisance estimation supports a scalar covariate only")
    return arr


def _scale(x: np.ndarray) -> float:
    sd = float(np.std(x, ddof=1))
    if not sd > 0.0:
        raise DegenerateDataError("covariate has zero variance")
    return sd


def gaussian_kde(x, x0: float, h: float) -> float:
    """(1/(n h)) sum phi((x0 - X_i)/h)."""
    x = np.asarray(x, dtype=float)
    t = (x0 - x) / h
    return float(np.sum(np.exp(-0.5 * t * t)) * _INV_SQRT_2PI / (x.size * h))


def gaussian_kde_derivative(x, x0: float, h: float) -> float:
    """d/dx0 of :func:`gaussian_kde` at bandwidth h."""
    x = np.asarray(x, dtype=float)
    t = (x0 - x) / h
    return float(np.sum(-t * np.exp(-0.5 * t * t)) * _INV_SQRT_2PI / (x.size * h * h))


def kde_with_derivative(x_data, x0: float) -> DensityEstimate:
    """Normal-reference Gaussian KDE of f_X(x0) and f_X'(x0).

    Bandwidths: 1.06 sd n^(-1/5) for the value and 1.06 sd n^(-1/7) for the
    derivative.
    """
    x = _as_1d(x_data)
    n = x.size
    if n < MIN_KDE_POINTS:
        raise InsufficientDataError(f"need at least {MIN_KDE_POINTS} observations, got {n}")
    sd = _scale(x)
    h_val = 1.06 * sd * n ** (-1.0 / 5.0)
    h_der = 1.06 * sd * n ** (-1.0 / 7.0)
    return DensityEstimate(value=gaussian_kde(x, x0, h_val),
                           derivative=gaussian_kde_derivative(x, x0, h_der),
                           pilot_bandwidths=(h_val, h_der), scale=sd, n=n)


def local_polynomial_fit(x, response, x0: float, h: float, degree: int = 3) -> np.ndarray:
    """Uniform-kernel least squares of ``response`` on powers of (X - x0).

    Uses observations with |X - x0| <= h. Returns the coefficients
    [c_0, ..., c_degree] in the original X units. The design is built from
    (X - x0)/h and the normal equations are solved on that scaled basis.
    """
    x = _as_1d(x)
    r = np.asarray(response, dtype=float)
    mask = np.abs(x - x0) <= h
    m = int(mask.sum())
    if m < max(MIN_CUBIC_POINTS, degree + 1):
        raise InsufficientDataError(
            f"only {m} observations within the pilot window (need {MIN_CUBIC_POINTS})")
    t = (x[mask] - x0) / h
    design = np.vander(t, degree + 1, increasing=True)
    gram = design.T @ design
    if np.linalg.matrix_rank(gram) < degree + 1 or np.linalg.cond(gram) > 1e12:
        raise CollinearDesignError("local polynomial design is rank deficient")
    coef = np.linalg.solve(gram, design.T @ r[mask])
    return coef / h ** np.arange(degree + 1)


def pilot_window(x: np.ndarray, constant: float = PILOT_WINDOW_CONSTANT) -> float:
    return constant * _scale(x) * x.size ** (-1.0 / 7.0)


def local_cubic_cdf_derivs(x_data, y_data, x0: float, p: float,
                           h_pilot: float | None = None) -> CdfDerivativeEstimate:
    """Estimate dF(xi_p|x)/dx and d2F(xi_p|x)/dx2 at x0.

    The pilot quantile is the L-statistic at u=p of the Y values inside the
    pilot window (index clamped into the sample when p is extreme for the
    window). The window defaults to 0.75 sd(X) n^(-1/7).
    """
    x = _as_1d(x_data)
    y = np.asarray(y_data, dtype=float).ravel()
    if x.size != y.size:
        raise DomainError("x and y lengths differ")
    if h_pilot is None:
        h_pilot = pilot_window(x)
    mask = np.abs(x - x0) <= h_pilot
    m = int(mask.sum())
    if m < MIN_CUBIC_POINTS:
        raise InsufficientDataError(
            f"only {m} observations within the pilot window (need {MIN_CUBIC_POINTS})")
    local = SortedSample.from_unsorted(y[mask])
    xi = pilot_quantile(local, p)
    indicator = (y <= xi).astype(float)
    coef = local_polynomial_fit(x, indicator, x0, h_pilot, degree=3)
    return CdfDerivativeEstimate(d1=float(coef[1]), d2=float(2.0 * coef[2]),
                                 pilot_xi_p=xi, pilot_bandwidth=float(h_pilot), local_n=m)


def pilot_quantile(sample: SortedSample, p: float) -> float:
    idx = decompose(p, sample.n, check=False)
    if not idx.evaluable:
        k = min(max(idx.k, 1), sample.n)
        return float(sample.values[k - 1])
    return l_statistic(sample, idx)


def conditional_density_at_quantile(x_data, y_data, x0: float, xi: float,
                                    h_pilot: float) -> float:
    """Gaussian KDE of the window's Y values at ``xi`` (normal-reference bandwidth)."""
    x = _as_1d(x_data)
    y = np.asarray(y_data, dtype=float).ravel()
    local = y[np.abs(x - x0) <= h_pilot]
    if local.size < 2:
        raise InsufficientDataError("too few local observations for a response density")
    sd = float(np.std(local, ddof=1))
    if not sd > 0.0:
        raise DegenerateDataError("local responses have zero variance")
    h = 1.06 * sd * local.size ** (-1.0 / 5.0)
    return gaussian_kde(local, xi, h)


def estimate_nuisances(x_data, y_data, x0: float, p: float) -> Nuisances:
    x = _as_1d(x_data)
    density = kde_with_derivative(x, x0)
    cdf = local_cubic_cdf_derivs(x, y_data, x0, p)
    fy = conditional_density_at_quantile(x, y_data, x0, cdf.pilot_xi_p, cdf.pilot_bandwidth)
    return Nuisances(density=density, cdf=cdf, cond_density=fy)
