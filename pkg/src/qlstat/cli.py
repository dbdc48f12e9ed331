"""Command-line interface: ``qlstat {ci,cond-ci,bandwidth,simulate,oracle}``.

Exit codes: 0 ok, 2 usage, 3 data error, 4 extreme quantile, 5 numerical
failure. Every failure writes one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from importlib import resources

import numpy as np

from . import __version__
from .bandwidth import BandwidthReport, FlatBiasWarning
from .conditional import Dataset, conditional_interval, joint_intervals
from .dgp import Dgp
from .errors import (CalibrationOverflowError, DataError, DomainError, ExtremeQuantileError,
                     ModeViolationError, NumericalError)
from .oracle import exact_cp_integer, exact_cp_interpolated, exact_cp_two_sided, first_order_cp
from .fractional import decompose
from .simulation import run_calibration_comparison, run_conditional, run_unconditional
from .unconditional import QuantileRequest, confidence_interval, interval_indices

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_EXTREME, EXIT_NUMERICAL = 0, 2, 3, 4, 5
TABLES = ("1", "2", "3", "calib", "model1", "rqss")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- formatting

def _num(x):
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.10g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, str) or obj is None:
        return obj
    return _num(obj)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.10g}"


def _emit(payload: dict, rows: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(_clean({"schema": SCHEMA, **payload})) + "\n")
        return
    if not rows:
        return
    fields = list(rows[0])
    for r in rows[1:]:
        fields += [k for k in r if k not in fields]
    w = csv.writer(out, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(r.get(k)) for k in fields])


# ---------------------------------------------------------------- input

def _split(text: str | None) -> list[str]:
    if not text:
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


def read_csv(source, y_col: str, x_cols=(), discrete_cols=()) -> Dataset:
    """Parse a UTF-8 CSV with a header row into an immutable :class:`Dataset`.

    ``source`` is a path, ``"-"`` for stdin, or a text stream.
    """
    if isinstance(source, str):
        handle = sys.stdin if source == "-" else open(source, newline="", encoding="utf-8")
    else:
        handle = source
    try:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("input is empty (no header row)") from None
        wanted = [y_col, *x_cols, *discrete_cols]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise DataError(f"missing column(s) {missing}; available: {header}")
        pos = {c: header.index(c) for c in wanted}
        numeric = [y_col, *x_cols]
        cols = {c: [] for c in wanted}
        bad = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not v.strip() for v in row):
                continue
            try:
                vals = {c: float(row[pos[c]]) for c in numeric}
            except (ValueError, IndexError):
                bad.append(line)
                continue
            if not all(math.isfinite(v) for v in vals.values()):
                bad.append(line)
                continue
            try:
                for c in discrete_cols:
                    cols[c].append(row[pos[c]].strip())
            except IndexError:
                bad.append(line)
                continue
            for c, v in vals.items():
                cols[c].append(v)
    finally:
        if isinstance(source, str) and source != "-":
            handle.close()
    if bad:
        shown = ", ".join(map(str, bad[:10])) + (" ..." if len(bad) > 10 else "")
        raise DataError(f"{len(bad)} row(s) with non-numeric required fields at line(s) {shown}")
    if not cols[y_col]:
        raise DataError("no data rows")
    y = np.array(cols[y_col])
    x = np.column_stack([cols[c] for c in x_cols]) if x_cols else np.zeros((y.size, 0))
    disc = np.column_stack([cols[c] for c in discrete_cols]) if discrete_cols else None
    return Dataset.from_arrays(y, x, disc)


# ---------------------------------------------------------------- commands

def _request(a) -> QuantileRequest:
    return QuantileRequest(p=a.p, alpha=a.alpha, side=a.side.replace("-", "_"),
                           calibrated=a.calibrated, tail_split=a.t)


def _ci_fields(ci) -> dict:
    ix = ci.indices
    return {"lower": ci.lower, "upper": ci.upper, "u_low": ix.u_low, "u_high": ix.u_high,
            "eps_low": ix.eps_low, "eps_high": ix.eps_high,
            "alpha_low": ix.alpha_effective_low, "alpha_high": ix.alpha_effective_high,
            "n": ci.n, "conservative": ci.conservative}


def cmd_ci(a, out) -> int:
    data = read_csv(a.input, a.col)
    req = _request(a)
    ci = confidence_interval(data.y, req, bound_lower=a.bound_lower, bound_upper=a.bound_upper)
    fields = _ci_fields(ci)
    meta = {"p": req.p, "alpha": req.alpha, "side": req.side, "calibrated": req.calibrated}
    _emit({"command": "ci", **meta, **fields}, [{**meta, **fields}], a.format, out)
    return EXIT_OK


def _bandwidth_fields(rep: BandwidthReport | None) -> dict:
    if rep is None:
        return {"h_source": "user"}
    nu = rep.nuisances
    out = {"h_source": "plugin", "h": rep.h, "base_h": rep.base_h, "rule": rep.rule,
           "bias_sign": rep.bias_sign, "large_n_coefficient": rep.large_n_coefficient,
           "n_total": rep.n}
    if nu is not None:
        out.update(f_x=nu.f_x, f_x_prime=nu.f_x_prime, F01=nu.cdf.d1, F02=nu.cdf.d2,
                   cond_density=nu.cond_density, pilot_xi_p=nu.cdf.pilot_xi_p,
                   pilot_bandwidth=nu.cdf.pilot_bandwidth,
                   kde_bandwidths=list(nu.density.pilot_bandwidths))
    return out


def _points(a, d: int) -> list[tuple[float, ...]]:
    if not a.x0:
        raise UsageError("--x0 is required")
    pts = []
    for item in a.x0:
        try:
            vals = [float(v) for v in _split(item)]
        except ValueError:
            raise UsageError(f"--x0 must be numeric, got {item!r}") from None
        if d == 1:
            pts.extend((v,) for v in vals)
        else:
            if len(vals) != d:
                raise UsageError(f"each --x0 needs {d} comma-separated components")
            pts.append(tuple(vals))
    return pts


def _cond_data(a) -> Dataset:
    x_cols = _split(a.x)
    if not x_cols:
        raise UsageError("--x is required")
    return read_csv(a.input, a.y, x_cols, _split(a.discrete))


def _cell_key(a, data):
    cell = _split(a.cell)
    if not cell:
        if data.discrete is not None:
            raise UsageError("--cell is required when --discrete columns are given")
        return None
    return tuple(cell)


def cmd_cond_ci(a, out) -> int:
    data = _cond_data(a)
    req = _request(a)
    pts = _points(a, data.d)
    cell = _cell_key(a, data)
    large_n = not a.no_large_n
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FlatBiasWarning)
        if a.joint:
            results = joint_intervals(data, pts, req, a.joint, a.h, cells=[cell] * len(pts),
                                      large_n=large_n)
        else:
            results = [conditional_interval(data, x0, req, a.h, cell=cell, large_n=large_n,
                                            bound_lower=a.bound_lower,
                                            bound_upper=a.bound_upper) for x0 in pts]
    rows = []
    for x0, res in zip(pts, results):
        row = {"x0": list(x0) if len(x0) > 1 else x0[0], "h": res.h, "N_n": res.local.N_n,
               **_ci_fields(res.ci)}
        row.pop("n")
        row["bandwidth"] = _bandwidth_fields(res.bandwidth)
        rows.append(row)
    level = results[0].ci.request.alpha
    payload = {"command": "cond-ci", "p": req.p, "alpha": req.alpha, "side": req.side,
               "calibrated": req.calibrated, "joint": a.joint, "alpha_per_point": level,
               "cell": list(cell) if cell else None, "n": data.n,
               "warnings": sorted({str(w.message) for w in caught}), "points": rows}
    flat = []
    for r in rows:
        f = {k: v for k, v in r.items() if k != "bandwidth"}
        if isinstance(f["x0"], list):
            f["x0"] = ";".join(_cell(v) for v in f["x0"])
        f["h_source"] = r["bandwidth"]["h_source"]
        flat.append(f)
    _emit(payload, flat, a.format, out)
    return EXIT_OK


def cmd_bandwidth(a, out) -> int:
    from .conditional import plugin_bandwidth
    data = _cond_data(a)
    req = _request(a)
    pts = _points(a, data.d)
    cell = _cell_key(a, data)
    rows = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FlatBiasWarning)
        for x0 in pts:
            rep = plugin_bandwidth(data, x0, req, cell, large_n=not a.no_large_n)
            rows.append({"x0": x0[0], "side": rep.side, **_bandwidth_fields(rep)})
    payload = {"command": "bandwidth", "p": req.p, "alpha": req.alpha, "side": req.side,
               "warnings": sorted({str(w.message) for w in caught}), "points": rows}
    flat = [{k: v for k, v in r.items() if k != "kde_bandwidths"} for r in rows]
    _emit(payload, flat, a.format, out)
    return EXIT_OK


def load_config(table: str | None, path: str | None) -> dict:
    if path:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    else:
        name = f"table{table}" if table in ("1", "2", "3") else table
        cfg = json.loads(resources.files("qlstat").joinpath("configs", f"{name}.json")
                         .read_text(encoding="utf-8"))
    if cfg.get("version") != 1:
        raise DataError(f"unsupported config version {cfg.get('version')!r}")
    return cfg


def _report_row(base: dict, rep, ref: dict | None, method: str, suffix: str = "") -> dict:
    ref = ref or {}
    return {**base, "method": method, "cp": rep.cp, "too_low": rep.too_low,
            "too_high": rep.too_high, "median_length": rep.median_length, "mc_se": rep.mc_se,
            "replications": rep.replications, "undefined": rep.undefined, "seed": rep.seed,
            "ref_cp": ref.get("cp" + suffix), "ref_length": ref.get("length" + suffix)}


def cmd_simulate(a, out) -> int:
    if not a.table and not a.config:
        raise UsageError("give --table or --config")
    cfg = load_config(a.table, a.config)
    dflt = cfg.get("defaults", {})
    rows = []
    for row_cfg in cfg["rows"]:
        alpha = row_cfg.get("alpha", dflt.get("alpha", 0.05))
        side = row_cfg.get("side", dflt.get("side", "two_sided"))
        reps = a.reps or row_cfg.get("reps", dflt.get("reps", 1000))
        base = {"table": cfg["name"], "dgp": row_cfg["dgp"], "n": row_cfg["n"], "p": row_cfg["p"],
                "alpha": alpha}
        ref = row_cfg.get("reference")
        kind = cfg["kind"]
        if kind == "unconditional":
            rep = run_unconditional(Dgp(row_cfg["dgp"]), row_cfg["n"],
                                    QuantileRequest(row_cfg["p"], alpha, side), reps, a.seed,
                                    workers=a.workers)
            rows.append(_report_row(base, rep, ref, "lstat"))
        elif kind == "calibration":
            cmp = run_calibration_comparison(row_cfg["n"], row_cfg["p"], Dgp(row_cfg["dgp"]), reps,
                                             a.seed, alpha=alpha, workers=a.workers)
            rows.append(_report_row(base, cmp.uncalibrated, ref, "lstat"))
            rows.append(_report_row(base, cmp.calibrated, ref, "calib", "_calibrated"))
        elif kind == "conditional":
            dgp = Dgp(row_cfg["dgp"], error=row_cfg.get("error", "normal"),
                      sigma=row_cfg.get("sigma", 0.2), hetero=row_cfg.get("hetero", False),
                      center_p=row_cfg["p"])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", FlatBiasWarning)
                res = run_conditional(dgp, row_cfg["n"], row_cfg["x0"],
                                      QuantileRequest(row_cfg["p"], alpha, side), reps, a.seed,
                                      deviations=row_cfg.get("deviations", [0.0]),
                                      large_n=not a.no_large_n, workers=a.workers)
            base = {**base, "error": dgp.error, "hetero": dgp.hetero}
            for x0, rep, hmed in zip(res.x0, res.pointwise, res.median_h):
                rows.append({**_report_row({**base, "x0": x0}, rep, None, "lstat"),
                             "median_h": hmed})
            for d, rate in zip(res.deviations, res.joint_rejection):
                rows.append({**base, "method": "lstat_joint", "deviation": d,
                             "rejection": rate, "replications": reps,
                             "undefined": reps - res.joint_defined, "seed": a.seed})
        else:
            raise DataError(f"unknown config kind {kind!r}")
    _emit({"command": "simulate", "table": cfg["name"], "seed": a.seed, "rows": rows}, rows,
          a.format, out)
    return EXIT_OK


def cmd_oracle(a, out) -> int:
    req = _request(a)
    n = a.n
    if a.u is not None:
        if req.side == "two_sided":
            raise UsageError("--u applies to one-sided requests only")
        us = {("high" if req.side == "lower" else "low"): decompose(a.u, n)}
    else:
        us = interval_indices(n, req)
    payload = {"command": "oracle", "n": n, "p": req.p, "alpha": req.alpha, "side": req.side,
               "calibrated": req.calibrated}
    if req.side == "two_sided":
        ex = exact_cp_two_sided(n, us["low"].u, us["high"].u, req.p)
        payload.update(u_low=us["low"].u, u_high=us["high"].u, eps_low=us["low"].epsilon,
                       eps_high=us["high"].epsilon)
    else:
        idx = us["high"] if req.side == "lower" else us["low"]
        oside = "lower" if req.side == "lower" else "upper"
        if idx.epsilon == 0.0:
            ex = exact_cp_integer(n, idx.k, req.p, oside)
        else:
            ex = exact_cp_interpolated(n, idx.u, req.p, oside)
        payload.update(u=idx.u, k=idx.k, eps=idx.epsilon,
                       first_order_cp=first_order_cp(req.alpha, req.p, n, idx.epsilon))
    payload.update(cp=ex.cp, method=ex.method, abs_error_bound=ex.abs_error_bound)
    _emit(payload, [{k: v for k, v in payload.items() if k != "command"}], a.format, out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _prob(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1): {text!r}")
    return v


def _request_args(sp, *, p_required=True) -> None:
    sp.add_argument("--p", type=_prob, required=p_required, help="quantile level")
    sp.add_argument("--alpha", type=_prob, default=0.05)
    sp.add_argument("--side", choices=["two_sided", "two-sided", "lower", "upper"],
                    default="two_sided")
    sp.add_argument("--calibrated", action="store_true", help="apply the n^-1 level calibration")
    sp.add_argument("--t", type=_prob, default=0.5, help="share of alpha in the low tail")
    sp.add_argument("--format", choices=["json", "csv"], default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qlstat", description="Quantile confidence intervals from fractional "
                 "order statistics.")
    ap.add_argument("--version", action="version", version=f"qlstat {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("ci", help="unconditional quantile CI")
    _request_args(sp)
    sp.add_argument("--col", "--y", dest="col", default="y", help="response column")
    sp.add_argument("--bound-lower", type=float, default=None)
    sp.add_argument("--bound-upper", type=float, default=None)
    sp.add_argument("input", nargs="?", default="-")
    sp.set_defaults(func=cmd_ci)

    for name, func, helptext in (("cond-ci", cmd_cond_ci, "conditional quantile CI(s)"),
                                 ("bandwidth", cmd_bandwidth, "plug-in bandwidth report")):
        sp = sub.add_parser(name, help=helptext)
        _request_args(sp)
        sp.add_argument("--y", default="y", help="response column")
        sp.add_argument("--x", required=True, help="comma-separated continuous covariates")
        sp.add_argument("--discrete", default=None, help="comma-separated discrete covariates")
        sp.add_argument("--cell", default=None, help="values of the discrete covariates")
        sp.add_argument("--x0", action="append", required=True,
                        help="evaluation point(s); with one covariate a comma list gives "
                             "several points, otherwise repeat the flag")
        sp.add_argument("--no-large-n", action="store_true",
                        help="drop the max(1, n/1000)^(5/60) factor")
        if name == "cond-ci":
            sp.add_argument("--h", type=float, default=None, help="window half-width")
            sp.add_argument("--joint", choices=["bonferroni", "independent_windows"],
                            default=None)
            sp.add_argument("--bound-lower", type=float, default=None)
            sp.add_argument("--bound-upper", type=float, default=None)
        sp.add_argument("input", nargs="?", default="-")
        sp.set_defaults(func=func)

    sp = sub.add_parser("simulate", help="Monte Carlo coverage tables")
    sp.add_argument("--table", choices=TABLES, default=None)
    sp.add_argument("--config", default=None, help="path to a table config JSON file")
    sp.add_argument("--rows", choices=["lstat"], default="lstat")
    sp.add_argument("--reps", type=int, default=None)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--no-large-n", action="store_true")
    sp.add_argument("--format", choices=["json", "csv"], default="csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("oracle", help="exact coverage of the CI under continuity")
    _request_args(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--u", type=_prob, default=None, help="evaluate this index instead")
    sp.set_defaults(func=cmd_oracle)
    return ap


# ---------------------------------------------------------------- entry

def _fail(code: int, exc: BaseException, err, **extra) -> int:
    diag = {"error": type(exc).__name__, "exit": code, "message": str(exc), **extra}
    err.write(json.dumps(_clean(diag)) + "\n")
    return code


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if getattr(args, "reps", None) is not None and args.reps < 1:
            raise UsageError("--reps must be positive")
        buf = io.StringIO()
        code = args.func(args, buf)
        out.write(buf.getvalue())
        return code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, DomainError, ModeViolationError) as exc:
        return _fail(EXIT_USAGE, exc, err)
    except ExtremeQuantileError as exc:
        return _fail(EXIT_EXTREME, exc, err, min_n=exc.min_n, tail=exc.tail,
                     local_n=exc.local_n)
    except DataError as exc:
        return _fail(EXIT_DATA, exc, err)
    except OSError as exc:
        return _fail(EXIT_DATA, exc, err)
    except (NumericalError, CalibrationOverflowError) as exc:
        return _fail(EXIT_NUMERICAL, exc, err, residual=getattr(exc, "residual", None))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
