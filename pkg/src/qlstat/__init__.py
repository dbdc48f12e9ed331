"""Nonparametric quantile inference from fractional order statistics."""

from ._backend import BACKEND
from .conditional import (ConditionalResult, Dataset, LocalSample, LocalWindow,
                          conditional_interval, extract_local_sample, joint_intervals,
                          joint_level, plugin_bandwidth)
from .errors import (CalibrationOverflowError, DataError, DomainError, EmptyWindowError,
                     ExtremeQuantileError, ModeViolationError, NumericalError, QlstatError)
from .fractional import FractionalIndex, SortedSample, decompose, l_statistic, quantile
from .unconditional import (ConfidenceInterval, QuantileRequest, asymptotic_power,
                            calibrate_alpha, confidence_interval, solve_u_high, solve_u_low)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "CalibrationOverflowError", "ConditionalResult", "ConfidenceInterval", "DataError",
    "Dataset", "DomainError", "EmptyWindowError", "ExtremeQuantileError", "FractionalIndex",
    "LocalSample", "LocalWindow", "ModeViolationError", "NumericalError", "QlstatError",
    "QuantileRequest", "SortedSample", "asymptotic_power", "calibrate_alpha",
    "conditional_interval", "confidence_interval", "decompose", "extract_local_sample",
    "joint_intervals", "joint_level", "l_statistic", "plugin_bandwidth", "quantile",
    "solve_u_high", "solve_u_low",
]
