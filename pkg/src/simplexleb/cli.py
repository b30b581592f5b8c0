"""Batch front door: norms, identity checks, parameter sweeps, alpha studies.

Subcommands
-----------
norm        L1 norm of one kernel for one dilation vector (JSON).
verify      check the exact kernel decomposition at seeded random points.
sweep       norm/predictor sweep over a dilation grid (deterministic CSV).
irrational  the 1-D fractional-part kernel study (CSV + summary JSON).

Exit codes: 0 success, 1 usage or malformed input, 2 quadrature did not
converge (a value is still emitted with a flag), 3 identity violation.

Outputs embed the effective configuration, library version, and the
convention flags (plain-integral normalization, modulus convention for the
0-dimensional norm, mu-range choice), so any run is reproducible from its
own artifact.  Floats are printed with 17 significant digits, '.' decimal,
LF line endings.  The 'seconds' column is 0 unless --timings is given, so
reruns with the same config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .asymptotics import full_predictor, remainder_envelope
from .core import DilationVector
from .irrational import AlphaSpec, I_n, study_ratio
from .kernels import DEFAULT_NU_MAX
from .norms import (
    DEFAULT_RHO,
    DEFAULT_TOL,
    NormConvergenceError,
    frak_f,
    l1_norm,
    verify_identity,
)

CONVENTIONS = {
    "normalization": "plain",
    "zero_dim_norm": "modulus",
    "mu_range": "theorem",
}

ENV_WORKERS = "SIMPLEXLEB_WORKERS"


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _default_workers() -> int:
    env = os.environ.get(ENV_WORKERS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


# ------------------------------------------------------------ configuration

@dataclasses.dataclass
class RunConfig:
    """Effective parameters of a run; echoed verbatim into every output."""

    command: str
    kernel: str = "D"
    n: str = ""
    tol: float = DEFAULT_TOL
    rho: float = DEFAULT_RHO
    nu_max: int = DEFAULT_NU_MAX
    t_nodes: int = 64
    points: int = 100
    seed: int = 0
    workers: int = 1
    budget_mb: int = 1536
    timings: bool = False
    n1: str = ""
    n2: str = ""
    n3: str = ""
    alpha: str = ""
    nmax: int = 4096
    output: str = ""

    def items(self):
        for f in dataclasses.fields(self):
            yield f.name, getattr(self, f.name)


def _load_config_file(path: str) -> dict:
    """Flat key=value text; '#' starts a comment, blank lines ignored."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = (part.strip() for part in line.split("=", 1))
            out[key] = val
    return out


def _build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    file_vals = _load_config_file(args.config) if args.config else {}
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    for key, raw in file_vals.items():
        if key == "command":
            continue
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        typ = fields[key].type
        if typ == "bool":
            value = raw.lower() in ("1", "true", "yes", "on")
        elif typ == "int":
            value = int(raw)
        elif typ == "float":
            value = float(raw)
        else:
            value = raw
        setattr(cfg, key, value)
    for key in fields:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            setattr(cfg, key, flag_val)
    if getattr(args, "workers", None) is None and "workers" not in file_vals:
        cfg.workers = _default_workers()
    return cfg


def _header_lines(cfg: RunConfig) -> list:
    lines = [f"# simplexleb {__version__}"]
    for key, val in sorted(CONVENTIONS.items()):
        lines.append(f"# convention {key}={val}")
    for key, val in cfg.items():
        lines.append(f"# config {key}={val}")
    return lines


def _meta(cfg: RunConfig) -> dict:
    return {
        "version": __version__,
        "conventions": CONVENTIONS,
        "config": {k: v for k, v in cfg.items()},
    }


def _parse_ntuple(text: str) -> DilationVector:
    try:
        entries = tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise ValueError(f"malformed n-tuple {text!r}") from None
    if not entries or any(v <= 0 for v in entries):
        raise ValueError(f"n entries must be positive: {text!r}")
    return DilationVector(entries)


def _emit(text: str, output: str):
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ norm

def cmd_norm(cfg: RunConfig) -> int:
    n = _parse_ntuple(cfg.n)
    if cfg.kernel not in ("D", "F", "S", "Fcomposite", "R"):
        raise ValueError(f"unknown kernel {cfg.kernel!r}")
    exit_code = 0
    try:
        res = l1_norm(cfg.kernel, n, tol=cfg.tol, rho=cfg.rho,
                      nu_max=cfg.nu_max, workers=cfg.workers,
                      budget_bytes=cfg.budget_mb << 20)
        payload = {
            "value": res.value,
            "normalized": res.normalized,
            "grid": res.grid,
            "history": [[list(m) if m else None, v] for m, v in res.history],
            "error_estimate": res.error_estimate,
            "converged": res.converged,
            "parseval": res.parseval,
        }
    except NormConvergenceError as exc:
        last_grid, last_val = exc.history[-1]
        payload = {
            "value": last_val,
            "normalized": last_val / (2 * math.pi) ** n.d,
            "grid": last_grid,
            "history": [[list(m) if m else None, v] for m, v in exc.history],
            "error_estimate": float("nan"),
            "converged": False,
        }
        exit_code = 2
    doc = _meta(cfg) | {"kernel": cfg.kernel, "n": list(n.entries)} | payload
    _emit(json.dumps(doc, indent=2, default=str) + "\n", cfg.output)
    return exit_code


# ------------------------------------------------------------------ verify

def cmd_verify(cfg: RunConfig) -> int:
    n = _parse_ntuple(cfg.n)
    if n.d < 2:
        raise ValueError("identity verification requires d >= 2")
    report = verify_identity(n, num_points=cfg.points, nu_max=cfg.nu_max,
                             seed=cfg.seed)
    doc = _meta(cfg) | {
        "n": list(n.entries),
        "nu_max": report.nu_max,
        "points": cfg.points,
        "passed": report.passed,
        "median_residual": report.median_residual,
        "max_residual": float(report.residuals.max()),
        "slack": report.slack,
        "worst_point": list(report.worst[0]),
        "worst_residual": report.worst[1],
        "worst_tail_bound": report.worst[2],
    }
    _emit(json.dumps(doc, indent=2) + "\n", cfg.output)
    return 0 if report.passed else 3


# ------------------------------------------------------------------ sweep

_GEOM_RE = re.compile(r"^geom\(\s*([^,\s]+)\s*,\s*([^,\s]+)\s*,\s*(\d+)\s*\)$")
_LIST_RE = re.compile(r"^list\((.*)\)$")

_EXPR_FUNCS = {"pow": pow, "log": math.log, "sqrt": math.sqrt,
               "exp": math.exp, "floor": math.floor, "ceil": math.ceil}


def _parse_axis(text: str, prior: dict) -> list:
    """One sweep-axis spec: geom(a,b,k), list(v,...) or an expression
    in earlier axes such as pow(n1,2) or 2*n1+3."""
    text = text.strip()
    m = _GEOM_RE.match(text)
    if m:
        a, b, k = float(m.group(1)), float(m.group(2)), int(m.group(3))
        if a <= 0 or b <= 0 or k < 1:
            raise ValueError(f"bad geom() bounds in {text!r}")
        if k == 1:
            return [a]
        return [a * (b / a) ** (i / (k - 1)) for i in range(k)]
    m = _LIST_RE.match(text)
    if m:
        return [float(tok) for tok in m.group(1).split(",") if tok.strip()]
    # expression in earlier axes, evaluated per row
    rows = len(next(iter(prior.values()))) if prior else 0
    if rows == 0:
        raise ValueError(f"expression {text!r} needs an earlier axis")
    out = []
    for i in range(rows):
        scope = dict(_EXPR_FUNCS)
        scope.update({name: vals[i] for name, vals in prior.items()})
        try:
            out.append(float(eval(text, {"__builtins__": {}}, scope)))
        except Exception as exc:
            raise ValueError(f"cannot evaluate {text!r}: {exc}") from None
    return out


def _sweep_rows(cfg: RunConfig) -> list:
    axes = {}
    for name in ("n1", "n2", "n3"):
        spec = getattr(cfg, name)
        if not spec:
            break
        axes[name] = _parse_axis(spec, axes)
    if not axes:
        raise ValueError("sweep needs at least --n1")
    lengths = {len(v) for v in axes.values()}
    if len(lengths) != 1:
        raise ValueError(f"axis lengths differ: "
                         f"{ {k: len(v) for k, v in axes.items()} }")
    count = lengths.pop()
    return [tuple(axes[k][i] for k in axes) for i in range(count)]


def _sweep_one(entries: tuple, cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    n = DilationVector(entries)
    d = n.d
    kw = dict(tol=cfg.tol, rho=cfg.rho, workers=cfg.workers,
              budget_bytes=cfg.budget_mb << 20)
    res_d = l1_norm("D", n, **kw)
    res_s = l1_norm("S", n, nu_max=cfg.nu_max, **kw)
    res_f = l1_norm("F", n, **kw)
    fraks = {}
    for k in range(2, d + 1):
        try:
            fraks[k] = frak_f(k, n, t_nodes=cfg.t_nodes, tol=cfg.tol,
                              rho=cfg.rho, workers=cfg.workers).value
        except ValueError:
            # outside the ascending regime of the correction functional
            fraks[k] = float("nan")
    try:
        pred = full_predictor(n, fraks)
        main, resid, ratio = pred.main, res_d.value - pred.total, \
            (res_d.value - pred.total) / pred.envelope
        env = pred.envelope
    except (ValueError, KeyError):
        main = resid = ratio = float("nan")
        env = remainder_envelope(n) if min(entries) > 1.0 else float("nan")
    return {
        "entries": entries,
        "norm_D": res_d.value, "norm_S": res_s.value, "norm_F": res_f.value,
        "fraks": fraks, "main_term": main, "residual": resid,
        "envelope": env, "ratio": ratio,
        "grid_M": "x".join(str(m) for m in res_d.grid),
        "seconds": time.perf_counter() - t0 if cfg.timings else 0.0,
    }


def cmd_sweep(cfg: RunConfig) -> int:
    rows = _sweep_rows(cfg)
    d = len(rows[0])
    if d < 2:
        raise ValueError("sweeps require d >= 2 (use 'norm' for d = 1)")
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda e: _sweep_one(e, cfg), rows))
    else:
        results = [_sweep_one(entries, cfg) for entries in rows]

    header = (["d"] + [f"n{j}" for j in range(1, d + 1)]
              + ["norm_D", "norm_S", "norm_F"]
              + [f"frakF{k}" for k in range(2, d + 1)]
              + ["main_term", "residual", "envelope", "ratio",
                 "grid_M", "seconds"])
    lines = _header_lines(cfg) + [",".join(header)]
    for row in results:
        cells = ([str(d)] + [_fmt(v) for v in row["entries"]]
                 + [_fmt(row["norm_D"]), _fmt(row["norm_S"]),
                    _fmt(row["norm_F"])]
                 + [_fmt(row["fraks"][k]) for k in range(2, d + 1)]
                 + [_fmt(row["main_term"]), _fmt(row["residual"]),
                    _fmt(row["envelope"]), _fmt(row["ratio"]),
                    row["grid_M"], _fmt(row["seconds"])])
        lines.append(",".join(cells))
    _emit("\n".join(lines) + "\n", cfg.output)
    return 0


# -------------------------------------------------------------- irrational

def _parse_alpha(text: str) -> AlphaSpec:
    text = text.strip()
    if text == "golden":
        return AlphaSpec.golden()
    if text.startswith("rational:"):
        body = text[len("rational:"):]
        m = re.fullmatch(r"(-?\d+)\s*/\s*(\d+)", body) or \
            re.fullmatch(r"(-?\d+)()", body)
        if not m:
            raise ValueError(f"malformed rational alpha {text!r}")
        p, q = int(m.group(1)), int(m.group(2) or 1)
        return AlphaSpec.from_rational(p, q)
    if text.startswith("liouville:"):
        body = text[len("liouville:"):]
        m = re.fullmatch(r"(\d+)\s*,\s*(\d+)", body)
        if not m:
            raise ValueError(f"malformed liouville alpha {text!r}")
        return AlphaSpec.liouville(int(m.group(1)), int(m.group(2)))
    if text.startswith("dec:"):
        return AlphaSpec.from_decimal(text[len("dec:"):])
    raise ValueError(f"unrecognized alpha spec {text!r}")


def _explicit_records(alpha: AlphaSpec, grid: list, cfg: RunConfig) -> list:
    """Rows for a hand-picked n list (n >= 2 but below the study floor of
    16 is fine here; the ratio uses ln^2 n and needs n >= 2)."""
    from .irrational import RatioRecord, _convergent_denominators

    if any(v < 2 for v in grid):
        raise ValueError("n values must be >= 2")
    qset = _convergent_denominators(alpha, max(grid))
    out, lo, hi = [], math.inf, -math.inf
    for n in grid:
        v = I_n(alpha, n, tol=cfg.tol, rho=cfg.rho,
                workers=cfg.workers).value
        ratio = v / math.log(n) ** 2 if n > 1 else float("nan")
        lo, hi = min(lo, ratio), max(hi, ratio)
        out.append(RatioRecord(n=n, value=v, ratio=ratio, running_min=lo,
                               running_max=hi,
                               is_convergent_denominator=n in qset))
    return out


def cmd_irrational(cfg: RunConfig) -> int:
    alpha = _parse_alpha(cfg.alpha)
    if cfg.n:
        try:
            grid = [int(tok) for tok in cfg.n.split(",")]
        except ValueError:
            raise ValueError(f"malformed n list {cfg.n!r}") from None
        if any(v < 1 for v in grid):
            raise ValueError("n values must be >= 1")
        grid = sorted(set(grid))
        records = _explicit_records(alpha, grid, cfg)
    else:
        grid, e = [], 4
        while 2 ** e <= cfg.nmax:
            grid.append(2 ** e)
            e += 1
        if not grid:
            raise ValueError("--nmax must be at least 16")
        records = study_ratio(alpha, grid, tol=cfg.tol, workers=cfg.workers)
    lines = _header_lines(cfg) + ["n,I_n,ratio,is_convergent_q"]
    for rec in records:
        lines.append(",".join([str(rec.n), _fmt(rec.value), _fmt(rec.ratio),
                               str(int(rec.is_convergent_denominator))]))
    _emit("\n".join(lines) + "\n", cfg.output)
    summary = _meta(cfg) | {
        "alpha": alpha.describe(),
        "running_min_ratio": records[-1].running_min,
        "running_max_ratio": records[-1].running_max,
    }
    sys.stderr.write(json.dumps(summary, indent=2) + "\n")
    return 0


# ------------------------------------------------------------------- main

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="simplexleb",
                  description="Lebesgue constants of dilated simplices: "
                              "norms, identity checks, sweeps, alpha studies.")
    top.add_argument("--version", action="version",
                     version=f"simplexleb {__version__}")
    sub = top.add_subparsers(dest="command", required=True,
                             parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="flat key=value config file; "
                                        "flags override file values")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--rho", type=float, default=None,
                       help="grid oversampling factor")
        p.add_argument("--nu-max", dest="nu_max", type=int, default=None)
        p.add_argument("--workers", type=int, default=None,
                       help=f"worker threads (default ${ENV_WORKERS} "
                            "or CPU count)")
        p.add_argument("--budget-mb", dest="budget_mb", type=int,
                       default=None, help="grid memory cap in MiB")
        p.add_argument("--output", default=None,
                       help="write to file instead of stdout")
        p.add_argument("--timings", action="store_const", const=True,
                       default=None,
                       help="report wall-clock seconds (breaks byte-level "
                            "reproducibility)")

    p = sub.add_parser("norm", help="L1 norm of one kernel")
    p.add_argument("--kernel", default=None,
                   choices=["D", "F", "S", "Fcomposite", "R"])
    p.add_argument("--n", default=None, help="comma-separated dilation tuple")
    common(p)

    p = sub.add_parser("verify", help="check the exact decomposition")
    p.add_argument("--n", default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    common(p)

    p = sub.add_parser("sweep", help="norm/predictor sweep to CSV")
    p.add_argument("--n1", default=None,
                   help="geom(a,b,k) | list(v,...)")
    p.add_argument("--n2", default=None,
                   help="geom/list or expression in n1, e.g. pow(n1,2)")
    p.add_argument("--n3", default=None)
    p.add_argument("--t-nodes", dest="t_nodes", type=int, default=None)
    common(p)

    p = sub.add_parser("irrational", help="fractional-part kernel study")
    p.add_argument("--alpha", default=None,
                   help="rational:P/Q | golden | liouville:B,M | dec:0.70...")
    p.add_argument("--n", default=None, help="explicit comma-separated n list")
    p.add_argument("--nmax", type=int, default=None,
                   help="powers of two 16..nmax (default 4096)")
    common(p)
    return top


_DISPATCH = {"norm": cmd_norm, "verify": cmd_verify, "sweep": cmd_sweep,
             "irrational": cmd_irrational}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        required = {"norm": ["n"], "verify": ["n"], "sweep": ["n1"],
                    "irrational": ["alpha"]}
        for key in required[args.command]:
            if not getattr(cfg, key):
                raise ValueError(f"--{key} is required for {args.command}")
        return _DISPATCH[args.command](cfg)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"simplexleb: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
