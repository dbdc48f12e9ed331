"""Monte Carlo coverage harness.

Replications are grouped into fixed blocks of ``BLOCK`` draws. Block ``b``
of a run seeded with ``seed`` gets its own Philox stream keyed by
``(b, seed)``, so every replication sees the same random numbers whatever
the number of workers, and blocks can be evaluated in any order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conditional import Dataset, LocalWindow, extract_local_sample, joint_level, plugin_bandwidth
from .dgp import Dgp
from .errors import DataError, DomainError, ExtremeQuantileError
from .fractional import FractionalIndex, l_statistic, l_statistic_rows
from .unconditional import QuantileRequest, interval_indices

BLOCK = 1000


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent stream for one block of replications."""
    if seed < 0 or block < 0:
        raise DomainError("seed and block index must be non-negative")
    key = np.array([block, seed], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _blocks(replications: int) -> list[tuple[int, int]]:
    return [(b, min(BLOCK, replications - b * BLOCK))
            for b in range(math.ceil(replications / BLOCK))]


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("QLSTAT_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise DomainError(f"QLSTAT_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def _map_blocks(fn, replications: int, workers: int | None) -> list:
    blocks = _blocks(replications)
    w = min(worker_count(workers), len(blocks))
    if w <= 1:
        return [fn(b, size) for b, size in blocks]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(lambda bs: fn(*bs), blocks))


@dataclass(frozen=True)
class SimulationReport:
    """Coverage counts over the defined replications.

    ``too_high``: the lower endpoint lies above the true quantile.
    ``too_low``: the upper endpoint lies below it. ``undefined`` counts
    replications where no interval could be formed (conditional runs only);
    they are excluded from the rates.
    """

    cp: float
    too_low: float
    too_high: float
    median_length: float
    replications: int
    seed: int
    mc_se: float
    counts: tuple[int, int, int]  # (covered, too_low, too_high)
    undefined: int = 0
    label: str = ""

    @classmethod
    def from_counts(cls, covered: int, low: int, high: int, lengths: np.ndarray,
                    replications: int, seed: int, undefined: int = 0,
                    label: str = "") -> "SimulationReport":
        m = covered + low + high
        if m == 0:
            nan = float("nan")
            return cls(nan, nan, nan, nan, replications, seed, nan, (0, 0, 0), undefined, label)
        cp = covered / m
        med = float(np.median(lengths)) if lengths.size else float("nan")
        return cls(cp=cp, too_low=low / m, too_high=high / m, median_length=med,
                   replications=replications, seed=seed, mc_se=math.sqrt(cp * (1.0 - cp) / m),
                   counts=(covered, low, high), undefined=undefined, label=label)


def _score(lower: np.ndarray, upper: np.ndarray, truth: float) -> tuple[int, int, int]:
    high = int(np.count_nonzero(lower > truth))
    low = int(np.count_nonzero(upper < truth))
    return lower.size - high - low, low, high


def _check_reps(replications: int, minimum: int = 100) -> None:
    if replications < minimum:
        raise DomainError(f"need at least {minimum} replications, got {replications}")


def _endpoints(rows: np.ndarray, idx: dict[str, FractionalIndex]):
    r = rows.shape[0]
    lower = l_statistic_rows(rows, idx["low"]) if "low" in idx else np.full(r, -np.inf)
    upper = l_statistic_rows(rows, idx["high"]) if "high" in idx else np.full(r, np.inf)
    return lower, upper


def run_unconditional(dgp: Dgp, n: int, request: QuantileRequest, replications: int,
                      seed: int, workers: int | None = None) -> SimulationReport:
    """Coverage of the fractional L-statistic CI under iid draws from ``dgp``."""
    if dgp.conditional:
        raise DomainError(f"{dgp.kind} is a conditional design; use run_conditional")
    _check_reps(replications)
    idx = interval_indices(n, request)
    truth = dgp.quantile(request.p)

    def block(b, size):
        rows = np.sort(dgp.sample(block_generator(seed, b), (size, n)), axis=1)
        lower, upper = _endpoints(rows, idx)
        return _score(lower, upper, truth), upper - lower

    parts = _map_blocks(block, replications, workers)
    counts = np.sum([c for c, _ in parts], axis=0)
    lengths = np.concatenate([ln for _, ln in parts])
    return SimulationReport.from_counts(*map(int, counts), lengths, replications, seed,
                                        label=dgp.kind)


@dataclass(frozen=True)
class CalibrationComparison:
    uncalibrated: SimulationReport
    calibrated: SimulationReport
    calibrated_longer: int  # replications where the calibrated CI is strictly longer


def run_calibration_comparison(n: int, p: float, dgp: Dgp, replications: int, seed: int,
                               alpha: float = 0.05,
                               workers: int | None = None) -> CalibrationComparison:
    """Two-sided uncalibrated and calibrated CIs evaluated on the same draws."""
    if dgp.conditional:
        raise DomainError("calibration comparison needs an unconditional design")
    _check_reps(replications)
    req = QuantileRequest(p, alpha, "two_sided", calibrated=False)
    idx_u = interval_indices(n, req)
    idx_c = interval_indices(n, QuantileRequest(p, alpha, "two_sided", calibrated=True))
    truth = dgp.quantile(p)

    def block(b, size):
        rows = np.sort(dgp.sample(block_generator(seed, b), (size, n)), axis=1)
        lo_u, up_u = _endpoints(rows, idx_u)
        lo_c, up_c = _endpoints(rows, idx_c)
        len_u, len_c = up_u - lo_u, up_c - lo_c
        return (_score(lo_u, up_u, truth), _score(lo_c, up_c, truth), len_u, len_c,
                int(np.count_nonzero(len_c > len_u)))

    parts = _map_blocks(block, replications, workers)
    reports = []
    for j in (0, 1):
        counts = np.sum([pt[j] for pt in parts], axis=0)
        lengths = np.concatenate([pt[2 + j] for pt in parts])
        reports.append(SimulationReport.from_counts(
            *map(int, counts), lengths, replications, seed,
            label=("uncalibrated", "calibrated")[j]))
    return CalibrationComparison(reports[0], reports[1], sum(pt[4] for pt in parts))


@dataclass(frozen=True)
class ConditionalSimulation:
    pointwise: tuple[SimulationReport, ...]
    x0: tuple[float, ...]
    truth: tuple[float, ...]
    deviations: tuple[float, ...]
    joint_rejection: tuple[float, ...]  # per deviation, over replications with all CIs defined
    joint_defined: int
    median_h: tuple[float, ...]
    notes: tuple[str, ...] = field(default=())


class _IndexCache:
    """Endpoint indices keyed by local sample size; thread-safe by construction (idempotent)."""

    def __init__(self, request: QuantileRequest):
        self.request = request
        self.store: dict[int, dict | None] = {}

    def get(self, n: int):
        if n not in self.store:
            try:
                self.store[n] = interval_indices(n, self.request)
            except ExtremeQuantileError:
                self.store[n] = None
        return self.store[n]


def _local_ci(values, idx):
    lower = l_statistic(values, idx["low"]) if "low" in idx else -math.inf
    upper = l_statistic(values, idx["high"]) if "high" in idx else math.inf
    return lower, upper


def run_conditional(dgp: Dgp, n: int, x0_list, request: QuantileRequest, replications: int,
                    seed: int, *, deviations=(0.0,), h: float | None = None,
                    large_n: bool = True, workers: int | None = None) -> ConditionalSimulation:
    """Pointwise coverage at each x0, and Bonferroni joint rejection rates.

    For each deviation d the joint test rejects H0: Q(p|x_j) = truth_j + d
    (all j) when any of the joint-level CIs excludes its hypothesized value.
    The bandwidth is the plug-in value per replication and point unless
    ``h`` is given. Replications where the local sample is empty, too small
    for the requested quantile, or too sparse for the nuisance estimates are
    counted as undefined at that point.
    """
    if not dgp.conditional:
        raise DomainError(f"{dgp.kind} is unconditional; use run_unconditional")
    _check_reps(replications)
    points = [float(v) for v in x0_list]
    m = len(points)
    truth = [dgp.conditional_quantile(x0, request.p) for x0 in points]
    devs = tuple(float(d) for d in deviations)
    joint_req = request.with_alpha(joint_level(request.alpha, m, "bonferroni"))
    point_cache, joint_cache = _IndexCache(request), _IndexCache(joint_req)

    def block(b, size):
        xs, ys = dgp.sample_xy(block_generator(seed, b), (size, n))
        cov = np.zeros((m, 3), dtype=np.int64)
        undefined = np.zeros(m, dtype=np.int64)
        lengths = [[] for _ in range(m)]
        hs = [[] for _ in range(m)]
        rejections = np.zeros(len(devs), dtype=np.int64)
        joint_ok = 0
        for r in range(size):
            data = Dataset.from_arrays(ys[r], xs[r])
            joint = []
            for j, x0 in enumerate(points):
                try:
                    hh = h if h is not None else plugin_bandwidth(
                        data, x0, request, large_n=large_n).h
                    local = extract_local_sample(data, LocalWindow.make(x0, hh))
                except (DataError, DomainError):
                    undefined[j] += 1
                    joint.append(None)
                    continue
                hs[j].append(hh)
                idx = point_cache.get(local.N_n)
                if idx is None:
                    undefined[j] += 1
                else:
                    lo, up = _local_ci(local.y_values, idx)
                    if lo > truth[j]:
                        cov[j, 2] += 1
                    elif up < truth[j]:
                        cov[j, 1] += 1
                    else:
                        cov[j, 0] += 1
                    lengths[j].append(up - lo)
                jidx = joint_cache.get(local.N_n)
                joint.append(None if jidx is None else _local_ci(local.y_values, jidx))
            if all(ci is not None for ci in joint):
                joint_ok += 1
                for k, d in enumerate(devs):
                    if any(not (lo <= t + d <= up) for (lo, up), t in zip(joint, truth)):
                        rejections[k] += 1
        return cov, undefined, lengths, hs, rejections, joint_ok

    parts = _map_blocks(block, replications, workers)
    cov = sum(pt[0] for pt in parts)
    undefined = sum(pt[1] for pt in parts)
    rejections = sum(pt[4] for pt in parts)
    joint_ok = sum(pt[5] for pt in parts)
    reports, med_h = [], []
    for j in range(m):
        lengths = np.array([v for pt in parts for v in pt[2][j]], dtype=float)
        hvals = [v for pt in parts for v in pt[3][j]]
        med_h.append(float(np.median(hvals)) if hvals else float("nan"))
        reports.append(SimulationReport.from_counts(
            int(cov[j, 0]), int(cov[j, 1]), int(cov[j, 2]), lengths, replications, seed,
            undefined=int(undefined[j]), label=f"x0={points[j]:g}"))
    rates = tuple(float(r) / joint_ok if joint_ok else float("nan") for r in rejections)
    return ConditionalSimulation(pointwise=tuple(reports), x0=tuple(points), truth=tuple(truth),
                                 deviations=devs, joint_rejection=rates, joint_defined=joint_ok,
                                 median_h=tuple(med_h))


__all__ = ["BLOCK", "SimulationReport", "CalibrationComparison", "ConditionalSimulation",
           "block_generator", "run_unconditional", "run_calibration_comparison",
           "run_conditional", "worker_count"]
