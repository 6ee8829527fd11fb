"""``fnls`` command line.

Exit status: 0 success, 1 check failure, 2 configuration error, 3 resource
error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import DomainError, RegimeError, ResourceError, TruncationError
from .params import ExperimentParams, validate_regime

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3
EPS_WARN = 0.2
OVERRIDES = ("alpha", "beta", "s", "sigma", "eps", "N", "theta", "k", "T")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 already; keep the usage text on stderr
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common(p):
    p.add_argument("--config", type=Path, help="params JSON file")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--out", type=Path, help="output directory (default $FNLS_OUT or ./fnls_out)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--overwrite", action="store_true")
    p.add_argument("--json", action="store_true", help="print the result as JSON on stdout")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fnls", description="Picard-iterate experiments for fractional quadratic NLS.")
    ap.add_argument("--version", action="version", version=f"fnls {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("torus-inflation", help="closed-form torus growth and threshold search")
    _common(p)
    p.add_argument("--no-search", action="store_true", help="skip the smallest-N search")

    p = sub.add_parser("line-inflation", help="band-restricted iterate norms on the line")
    _common(p)
    p.add_argument("--Ns", type=_ints, help="comma-separated N values (default: --N)")
    p.add_argument("--nt", type=int, default=64, help="time nodes")

    p = sub.add_parser("checks", help="run the invariant suite")
    _common(p)
    p.add_argument("--corrupt", action="append", default=[], metavar="NAME",
                   help="inject a fault (repeatable)")

    p = sub.add_parser("sweep", help="phase-diagram growth exponents")
    _common(p)
    p.add_argument("--alphas", type=_floats, default=None)
    p.add_argument("--betas", type=_floats, default=None)
    p.add_argument("--Ns", type=_ints, default=None)
    p.add_argument("--T-obs", dest="T_obs", type=float, default=None)
    p.add_argument("--nsteps", type=int, default=128)
    p.add_argument("--Mb", type=int, default=192)
    return ap


def load_params(args, require=("alpha", "beta"), defaults=None) -> ExperimentParams:
    """Merge defaults, ``--config`` and explicit flags (later wins)."""
    d = dict(defaults or {})
    if args.config is not None:
        try:
            d.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
    for name in OVERRIDES:
        v = getattr(args, name, None)
        if v is not None:
            d[name] = v
    missing = [r for r in require if r not in d]
    if missing:
        raise ConfigError("missing required " + ", ".join(f"--{m}" for m in missing))
    try:
        p = ExperimentParams.from_dict(d)
    except (DomainError, TypeError) as exc:
        raise ConfigError(str(exc))
    # basic field invariants; regime inequalities are left to the experiments
    basic = [v for v in validate_regime(p, "none").violations]
    if basic:
        raise ConfigError("invalid parameters: " + ", ".join(basic))
    return p


def out_dir(args) -> Path:
    d = args.out or Path(os.environ.get("FNLS_OUT") or "fnls_out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _soft_checks(p: ExperimentParams):
    if p.eps > EPS_WARN:
        print(f"warning: eps={p.eps:g} is not small; the thresholds assume eps << 1",
              file=sys.stderr)


def _meta(p: ExperimentParams, **extra):
    m = {"params": p.to_json()}
    m.update(extra)
    return m


# commands -------------------------------------------------------------------

def cmd_torus_inflation(args) -> int:
    from .io import write_csv
    from .torus import TORUS_COLUMNS, inflation_experiment_torus

    p = load_params(args, require=("beta",),
                    defaults={"alpha": 2.0, "regime_tag": "inflation-torus"})
    _soft_checks(p)
    at_N, best = inflation_experiment_torus(p, search=not args.no_search)
    rows = [("given",) + at_N.row()]
    if best is not None:
        rows.append(("smallest",) + best.row())
    path = write_csv(out_dir(args) / "torus_inflation.csv", ("which",) + TORUS_COLUMNS, rows,
                     _meta(p, units="N integer; T time; norms dimensionless"),
                     overwrite=args.overwrite)
    reported = best if best is not None else at_N
    if args.json:
        print(json.dumps({"csv": str(path), "N": reported.N, "ok": reported.ok,
                          "flags": reported.flags}, sort_keys=True))
    else:
        print(f"smallest qualifying N = {reported.N}" if best is not None
              else f"N = {reported.N}: thresholds {'met' if reported.ok else 'not met'}")
    return EXIT_OK if reported.ok else EXIT_FAIL


def cmd_line_inflation(args) -> int:
    from .io import write_csv
    from .iterates import INFLATION_COLUMNS, fit_slope, inflation_experiment_line

    p = load_params(args)
    _soft_checks(p)
    Ns = args.Ns or [p.N]
    reps = [inflation_experiment_line(p.with_(N=N), nt=args.nt) for N in Ns]
    rows = [r.row() + (int(r.inflated),) for r in reps]
    meta = _meta(p, units="norms in H^sigma; prediction eps^k (log N)^(1-k) N^(...)")
    if len(Ns) >= 2:
        meta["fitted_slope"] = "%.17g" % fit_slope(Ns, [r.band_norm * r.T ** -(r.k - 1) for r in reps])
    path = write_csv(out_dir(args) / "line_inflation.csv", INFLATION_COLUMNS + ("inflated",), rows,
                     meta, overwrite=args.overwrite)
    if args.json:
        print(json.dumps({"csv": str(path), "rows": len(rows)}, sort_keys=True))
    else:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_checks(args) -> int:
    from .checks import run_suite
    from .io import json_text, write_json

    report = run_suite(args.corrupt)
    write_json(out_dir(args) / "checks.json", report, overwrite=args.overwrite)
    if args.json:
        sys.stdout.write(json_text(report))
    else:
        for c in report["checks"]:
            print(f"{'PASS' if c['ok'] else 'FAIL'} {c['name']}")
    if not report["ok"]:
        print("failed: " + ", ".join(report["failures"]), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .io import write_csv
    from .solver import (SWEEP_COLUMNS, SWEEP_NS, SWEEP_T_OBS, SWEEP_TEMPLATE, WP_CAVEAT,
                         phase_diagram_sweep)

    if args.config is not None or any(getattr(args, n) is not None for n in OVERRIDES):
        d = SWEEP_TEMPLATE.to_dict()
        template = load_params(args, defaults=d)
    else:
        template = SWEEP_TEMPLATE
    if args.alphas is None or args.betas is None:
        raise ConfigError("sweep needs --alphas and --betas")
    cells = [(a, b) for a in args.alphas for b in args.betas]
    if not cells:
        raise ConfigError("empty sweep grid")
    Ns = args.Ns or list(SWEEP_NS)
    T_obs = SWEEP_T_OBS if args.T_obs is None else args.T_obs
    res = phase_diagram_sweep(cells, template, Ns=Ns, T_obs=T_obs, nsteps=args.nsteps,
                              Mb=args.Mb, jobs=args.jobs)
    meta = _meta(template, caveat=WP_CAVEAT, completed=f"{res.completed}/{res.cells}",
                 Ns=",".join(str(n) for n in Ns))
    out = out_dir(args)
    path = write_csv(out / "sweep.csv", SWEEP_COLUMNS, res.cell_rows(), meta,
                     overwrite=args.overwrite)
    write_csv(out / "sweep_detail.csv", SWEEP_COLUMNS, res.rows, meta, overwrite=args.overwrite)
    if args.json:
        print(json.dumps({"csv": str(path), "completed": res.completed, "cells": res.cells},
                         sort_keys=True))
    else:
        print(f"{res.completed}/{res.cells} cells complete; wrote {path}")
    return EXIT_OK if res.completed >= 0.9 * res.cells else EXIT_FAIL


COMMANDS = {
    "torus-inflation": cmd_torus_inflation,
    "line-inflation": cmd_line_inflation,
    "checks": cmd_checks,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        ap.print_usage(sys.stderr)
        print(f"fnls: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileExistsError as exc:
        print(f"fnls: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, RegimeError) as exc:
        print(f"fnls: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceError, TruncationError, MemoryError) as exc:
        print(f"fnls: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
