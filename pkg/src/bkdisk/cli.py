"""Batch front-end: verifications, iterations, scans; JSON/CSV reports.

Exit codes: 0 success with trusted results, 1 input/config errors,
2 untrusted tails or non-convergence (the report is still written).
Reports are deterministic: two runs with the same config and inputs are
byte-identical once the timestamp block is suppressed (``--no-timestamp``,
which also drops wall-clock timings).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

from .backend import DEFAULT_PRECISION_BITS, EXACT
from .balancing import (
    difference_residual,
    iterate,
    kernel_series,
    normalize_lambda,
    residual,
    weighted_moment_table,
)
from .asymptotics import (
    defect_seq_to_csv,
    defect_sequence,
    boundary_profile,
    decay_diagnostic,
    default_edge_grid,
    analytic_remainder,
)
from .errors import BkdiskError, SingularProfile
from .geometry import PotentialProfile, balanced_check
from .moments import moment_table
from .series import series_eval, series_to_json
from .weights import (
    flat_simplex_weight,
    hyperbolic_weight,
    simplex_grid,
    to_float_weight,
    weight_from_json,
)

COMMANDS = (
    "verify-hyperbolic",
    "residual",
    "iterate",
    "asymptotics",
    "conjecture-scan",
    "balanced-check",
)

ENV_PRECISION = "BK_PRECISION_BITS"


@dataclass
class RunConfig:
    command: str
    weight_path: str = "hyperbolic"
    precision_bits: Optional[int] = None
    order_m: Optional[int] = None
    grid_start: Optional[float] = None
    grid_stop: Optional[float] = None
    grid_count: int = 32
    alpha: Optional[object] = None
    n: int = 1
    theta: float = 0.5
    maxiter: int = 200
    tol: float = 1e-6
    lam: Optional[float] = None
    k: int = 3
    jmax: Optional[int] = None
    degree: Optional[int] = None
    output_path: Optional[str] = None
    format: str = "json"
    jobs: int = 1
    no_timestamp: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.grid_stop is not None and not 0 < self.grid_stop < 1:
            raise ValueError("grid stop must lie in (0, 1)")
        if self.grid_start is not None and not 0 < self.grid_start < 1:
            raise ValueError("grid start must lie in (0, 1)")
        if self.grid_count < 8:
            raise ValueError("grid count must be >= 8")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def bits(self) -> int:
        if self.precision_bits is not None:
            return int(self.precision_bits)
        env = os.environ.get(ENV_PRECISION)
        return int(env) if env else DEFAULT_PRECISION_BITS


def _pmap(jobs: int):
    if jobs <= 1:
        return None

    def mapper(fn, items):
        items = list(items)
        if len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))

    return mapper


def _load_weight(cfg: RunConfig):
    if cfg.weight_path == "hyperbolic":
        return hyperbolic_weight(EXACT)
    with open(cfg.weight_path) as fh:
        return weight_from_json(json.load(fh))


def _grid_1d(backend, cfg: RunConfig, default_stop: Fraction):
    stop = Fraction(str(cfg.grid_stop)) if cfg.grid_stop is not None else default_stop
    count = cfg.grid_count
    if cfg.grid_start is None:
        return tuple(backend.number(stop * Fraction(i, count))
                     for i in range(1, count + 1))
    start = Fraction(str(cfg.grid_start))
    if start > stop:
        raise ValueError("grid start exceeds stop")
    return tuple(
        backend.number(start + (stop - start) * Fraction(i, count - 1))
        for i in range(count)
    )


def _alpha_value(cfg: RunConfig, default):
    if cfg.alpha is None:
        return default
    a = cfg.alpha
    if isinstance(a, str):
        try:
            return int(a)
        except ValueError:
            return float(a)
    if isinstance(a, float) and a.is_integer():
        return int(a)
    return a


# ---------------------------------------------------------------------------
# command runners: each returns (results dict, csv text, trusted, converged)
# ---------------------------------------------------------------------------


def _run_verify_hyperbolic(cfg: RunConfig, mapper):
    order = cfg.order_m or 300
    bits = cfg.bits
    exact_w = hyperbolic_weight(EXACT)
    jtop = min(order, 100)
    exact_table = moment_table(exact_w, order)
    moments_ok = all(
        exact_table.entry(j) == Fraction(1, (j + 1) * (j + 2))
        for j in range(jtop + 1)
    )
    exact_kernel = kernel_series(exact_table, order)
    kernel_ok = all(
        exact_kernel.coefficient(j) == (j + 1) * (j + 2) for j in range(jtop + 1)
    )
    half_value, half_tail = series_eval(exact_kernel, Fraction(1, 2))
    half_err = abs(half_value - 16)
    half_ok = half_err <= half_tail.value and half_tail.valid

    fw = to_float_weight(exact_w, bits)
    fb = fw.backend
    table = moment_table(fw, order)
    grid = _grid_1d(fb, cfg, Fraction(9, 10))
    rep = residual(fw, fb.number(1), table, grid, order, tail_tol=cfg.tol,
                   mapper=mapper)
    sup_within_tail = float(rep.sup_norm) <= float(rep.tail_bound_max)

    results = {
        "order": order,
        "precision_bits": bits,
        "moments_exact_up_to": jtop,
        "moments_exact": moments_ok,
        "kernel_coefficients_exact": kernel_ok,
        "kernel_at_half": {
            "value": EXACT.to_str(half_value),
            "abs_error_vs_16": EXACT.to_str(half_err),
            "tail_bound": EXACT.to_str(half_tail.value),
            "within_tail": half_ok,
        },
        "residual": rep.to_json(fb),
        "residual_sup_within_tail_bound": sup_within_tail,
    }
    trusted = (moments_ok and kernel_ok and half_ok and rep.trusted
               and sup_within_tail)
    return results, rep.to_csv(fb), trusted, True


def _run_residual(cfg: RunConfig, mapper):
    w = _load_weight(cfg)
    fw = to_float_weight(w, cfg.bits)
    order = cfg.order_m or 300
    alpha = _alpha_value(cfg, 3)
    table = weighted_moment_table(fw, order, alpha, cfg.n)
    lam = fw.backend.number(cfg.lam) if cfg.lam is not None \
        else normalize_lambda(fw, table)
    grid = _grid_1d(fw.backend, cfg, Fraction(9, 10)) if cfg.n == 1 else None
    rep = residual(fw, lam, table, grid, order, tail_tol=cfg.tol, mapper=mapper)
    results = {
        "order": order,
        "alpha": alpha,
        "n": cfg.n,
        "report": rep.to_json(fw.backend),
    }
    return results, rep.to_csv(fw.backend), rep.trusted, True


def _run_iterate(cfg: RunConfig, mapper):
    w = _load_weight(cfg)
    fw = to_float_weight(w, cfg.bits)
    order = cfg.order_m or 80
    alpha = _alpha_value(cfg, 3)
    reference = to_float_weight(hyperbolic_weight(EXACT), cfg.bits) \
        if cfg.n == 1 else None
    trace = iterate(fw, theta=cfg.theta, maxiter=cfg.maxiter, tol=cfg.tol,
                    order=order, alpha=alpha, n=cfg.n, reference=reference,
                    mapper=mapper)
    results = {
        "order": order,
        "alpha": alpha,
        "theta": cfg.theta,
        "tol": cfg.tol,
        "trace": trace.to_json(fw.backend),
        "final_weight": series_to_json(trace.final_weight.series),
    }
    return results, trace.to_csv(fw.backend), True, trace.converged


def _run_asymptotics(cfg: RunConfig, mapper):
    w = _load_weight(cfg)
    jmax = cfg.jmax or 100
    k = min(cfg.k, w.series.order)
    table = moment_table(w, jmax)
    profile = boundary_profile(w, k)
    zero = w.backend.zero()
    f3 = profile.derivatives[3] if len(profile.derivatives) > 3 else zero
    seq = defect_sequence(table, f3, jmax)
    decay = decay_diagnostic(seq, backend=w.backend)
    z_grid = default_edge_grid(w.backend)
    try:
        z_vals = analytic_remainder(w, z_grid)
        z_block = {
            "grid": [w.backend.to_str(x) for x in z_grid],
            "values": [w.backend.to_str(v) for v in z_vals],
        }
    except SingularProfile as exc:
        z_block = {"error": str(exc)}
    ts = w.backend.to_str
    results = {
        "boundary_derivatives": [ts(v) for v in profile.derivatives],
        "boundary_flags": {
            "value_zero": profile.value_zero,
            "slope_minus_one": profile.slope_minus_one,
            "second_zero": profile.second_zero,
        },
        "defect_seq": [ts(v) for v in seq],
        "all_zero": decay.all_zero,
        "decay_slope": decay.slope,
        "analytic_remainder": z_block,
    }
    return results, defect_seq_to_csv(seq, w.backend), True, True


def _run_conjecture_scan(cfg: RunConfig, mapper):
    n = cfg.n
    if n not in (1, 2, 3):
        raise ValueError("conjecture scan supports n in {1, 2, 3}")
    alpha = _alpha_value(cfg, 3 if n == 1 else n + 2)
    degree = cfg.degree if cfg.degree is not None else (60 if n <= 2 else 24)
    f = flat_simplex_weight(n, EXACT)
    table = weighted_moment_table(f, degree, alpha, n)
    stop = Fraction(str(cfg.grid_stop)) if cfg.grid_stop is not None \
        else Fraction(4, 5)
    if n == 1:
        grid = tuple(EXACT.number(stop * Fraction(i, cfg.grid_count))
                     for i in range(1, cfg.grid_count + 1))
    else:
        grid = simplex_grid(n, EXACT, radii=max(cfg.grid_count // 3, 4),
                            max_sum=stop)
    rep = difference_residual(f, Fraction(1), table, grid, degree,
                              tail_tol=cfg.tol, mapper=mapper)
    results = {
        "n": n,
        "alpha": alpha,
        "degree": degree,
        "moment_count": len(table.entries),
        "report": rep.to_json(EXACT),
    }
    return results, rep.to_csv(EXACT), rep.trusted, True


def _run_balanced_check(cfg: RunConfig, mapper):
    w = _load_weight(cfg)
    fw = to_float_weight(w, cfg.bits)
    alpha = _alpha_value(cfg, 3)
    jmax = cfg.jmax or 400
    if cfg.grid_stop is not None and cfg.grid_stop > 0.9:
        raise ValueError("balanced-check grid must lie in (0, 0.9]")
    grid = None
    if cfg.grid_stop is not None or cfg.grid_start is not None:
        grid = _grid_1d(fw.backend, cfg, Fraction(4, 5))
    diag = balanced_check(PotentialProfile(h=fw, alpha=alpha), grid=grid,
                          jmax=jmax, mapper=mapper)
    results = {
        "alpha": alpha,
        "jmax": jmax,
        "diagnostic": diag.to_json(fw.backend),
    }
    return results, diag.to_csv(fw.backend), diag.trusted, True


_RUNNERS = {
    "verify-hyperbolic": _run_verify_hyperbolic,
    "residual": _run_residual,
    "iterate": _run_iterate,
    "asymptotics": _run_asymptotics,
    "conjecture-scan": _run_conjecture_scan,
    "balanced-check": _run_balanced_check,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; write the report; return the exit code."""
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    mapper = _pmap(cfg.jobs)
    t0 = time.perf_counter()
    try:
        results, csv_text, trusted, converged = _RUNNERS[cfg.command](cfg, mapper)
    except (BkdiskError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - t0

    report = {
        "command": cfg.command,
        "config_echo": asdict(cfg),
        "results": results,
        "trusted": bool(trusted and converged),
    }
    if not cfg.no_timestamp:
        report["timings"] = {"elapsed_s": round(elapsed, 6)}
        report["timestamp"] = (
            datetime.datetime.now(datetime.timezone.utc).isoformat()
        )
    out_path = cfg.output_path or f"bkdisk-{cfg.command}.{cfg.format}"
    if cfg.format == "json":
        payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        payload = csv_text
    with open(out_path, "w") as fh:
        fh.write(payload)
    status = 0 if (trusted and converged) else 2
    print(f"{cfg.command}: trusted={bool(trusted)} converged={bool(converged)} "
          f"-> {out_path}")
    return status


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with config fields; flags override")
    p.add_argument("--weight", dest="weight_path",
                   help='weight file (series JSON) or inline "hyperbolic"')
    p.add_argument("--precision", dest="precision_bits", type=int,
                   help=f"float precision in bits (env {ENV_PRECISION}, default "
                        f"{DEFAULT_PRECISION_BITS})")
    p.add_argument("--order", dest="order_m", type=int, help="truncation order M")
    p.add_argument("--grid-start", dest="grid_start", type=float)
    p.add_argument("--grid-stop", dest="grid_stop", type=float)
    p.add_argument("--grid-count", dest="grid_count", type=int)
    p.add_argument("--alpha", dest="alpha")
    p.add_argument("--n", dest="n", type=int)
    p.add_argument("--theta", dest="theta", type=float)
    p.add_argument("--maxiter", dest="maxiter", type=int)
    p.add_argument("--tol", dest="tol", type=float)
    p.add_argument("--lam", dest="lam", type=float,
                   help="identity scale; origin-pinned when omitted")
    p.add_argument("--k", dest="k", type=int, help="boundary derivative count")
    p.add_argument("--jmax", dest="jmax", type=int)
    p.add_argument("--degree", dest="degree", type=int)
    p.add_argument("--output", dest="output_path")
    p.add_argument("--format", dest="format", choices=("json", "csv"))
    p.add_argument("--jobs", dest="jobs", type=int)
    p.add_argument("--no-timestamp", dest="no_timestamp", action="store_true",
                   default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bkdisk",
        description="Balanced radial weights on the disk: verification, "
                    "iteration, and scans at high precision.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        for key, value in file_cfg.items():
            key = key.replace("-", "_")
            if key == "command":
                continue
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config field {key!r}")
            setattr(cfg, key, value)
    for f in cfg.__dataclass_fields__:
        if f == "command":
            continue
        value = getattr(args, f, None)
        if value is not None:
            setattr(cfg, f, value)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
