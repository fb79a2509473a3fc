"""Command-line interface: ``latcurrent {current,sweep,lyapunov,integral,spectrum,validate}``.

Exit codes: 0 ok, 1 validation-suite failure, 2 bad input, 3 numerical failure.
Errors are written to stderr as one JSON object.  Data tables go to ``--out``
(or stdout); summaries (fits, L_min) go to stdout when ``--out`` is given and
to stderr otherwise, so stdout stays a clean table.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import experiments as ex
from . import lindblad
from .lindblad import SolverError
from .potentials import ValidationError, realization, sample_potential

EXIT_OK, EXIT_SUITE_FAILED, EXIT_BAD_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message)
        sys.exit(EXIT_BAD_INPUT)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def parse_list(text: str, cast=float) -> list:
    """``"1,2,5"`` or ``"start:stop:step"`` (stop included when hit)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValidationError(f"bad range {text!r}; use start:stop:step with step > 0")
        a, b, h = parts
        n = int(math.floor((b - a) / h + 1e-9)) + 1
        vals = [a + k * h for k in range(max(n, 0))]
    else:
        vals = [float(x) for x in text.split(",")]
    if cast is int:
        if any(v != int(v) for v in vals):
            raise ValidationError(f"expected integers in {text!r}")
        return [int(v) for v in vals]
    return vals


def _load_potential(text: str) -> dict:
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)
    return json.loads(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("--seed", type=int, help="master seed (U64) of the potential ensemble")
    p.add_argument("--method", choices=ex.METHODS)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--tol", type=float)
    p.add_argument("--realizations", type=int)
    p.add_argument("--dims", help="lattice dims, e.g. 20 or 6,3,3")
    p.add_argument("--alphas", help="alpha_in_l,alpha_out_l,alpha_in_r,alpha_out_r")
    p.add_argument("--beta", type=float, help="dephasing rate")
    p.add_argument("--potential", help="potential spec as JSON text or a path to a JSON file")
    p.add_argument("--no-timing", dest="timing", action="store_false", default=None,
                   help="write wall_ms=0 so repeated runs are byte-identical")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="latcurrent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("current", help="stationary current of one configuration")
    _common(p)

    p = sub.add_parser("sweep", help="currents over a list of lengths, with decay fits")
    _common(p)
    p.add_argument("--Ns", help="lengths, e.g. 20:200:10 or 5,8,13,21")

    p = sub.add_parser("lyapunov", help="Lyapunov exponents on an energy grid")
    _common(p)
    p.add_argument("--energies", help="energy grid, e.g. -3:3:0.01")
    p.add_argument("--lyapunov-N", dest="lyapunov_N", type=int)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("integral", help="transfer integral of 1/||T_N(E)||^2")
    _common(p)
    p.add_argument("--Ns", help="lengths")
    p.add_argument("--R", type=float, help="quadrature truncation")

    p = sub.add_parser("spectrum", help="eigenvalues of the one-particle generator")
    _common(p)

    p = sub.add_parser("validate", help="cross-method oracle suite")
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--ode-tol", dest="ode_tol", type=float, default=1e-5)
    p.add_argument("--mutate-generator-sign", dest="mutate", action="store_true",
                   help=argparse.SUPPRESS)
    return parser


def config_from_args(args: argparse.Namespace) -> ex.ExperimentConfig:
    data: dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config!r}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
    simple = ("seed", "method", "out", "format", "tol", "realizations", "beta",
              "lyapunov_N", "samples", "R", "timing")
    for key in simple:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if args.dims is not None:
        data["dims"] = parse_list(args.dims, int)
    if args.alphas is not None:
        data["alphas"] = parse_list(args.alphas)
    if args.potential is not None:
        try:
            data["potential"] = _load_potential(args.potential)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot parse potential: {exc}") from exc
    if getattr(args, "Ns", None) is not None:
        data["Ns"] = parse_list(args.Ns, int)
    if getattr(args, "energies", None) is not None:
        data["energies"] = parse_list(args.energies)
    try:
        return ex.ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(obj: dict, out: str | None) -> None:
    stream = sys.stdout if out else sys.stderr
    stream.write(json.dumps(obj, sort_keys=True) + "\n")


def _records(cfg: ex.ExperimentConfig, records) -> str:
    return ex.records_to_csv(records) if cfg.format == "csv" else ex.records_to_jsonl(records)


def _rows(rows: list[dict], fmt: str) -> str:
    if fmt == "jsonl":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    keys = list(rows[0]) if rows else []
    lines = [",".join(keys)] + [",".join(repr(r[k]) if isinstance(r[k], float) else str(r[k])
                                          for k in keys) for r in rows]
    return "\n".join(lines) + "\n"


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        checks = ex.validate(seed=args.seed, ode_tol=args.ode_tol,
                             generator_sign=-1.0 if args.mutate else 1.0)
        for c in checks:
            print(c.line())
        failed = [c.name for c in checks if not c.passed]
        print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
        return EXIT_SUITE_FAILED if failed else EXIT_OK

    cfg = config_from_args(args)
    effective = cfg.to_dict()
    if args.command == "current":
        rec = ex.run_current(cfg)
        _write(_records(cfg, [rec]), cfg.out)
    elif args.command == "sweep":
        res = ex.run_sweep(cfg)
        _write(_records(cfg, res.records), cfg.out)
        _summary({"config": effective, **res.summary()}, cfg.out)
    elif args.command == "lyapunov":
        rows, best = ex.run_lyapunov(cfg)
        _write(ex.lyapunov_table(rows, cfg.format), cfg.out)
        _summary({"config": effective, "L_min": best.mean, "E_min": best.energy,
                  "std_error": best.std_error}, cfg.out)
    elif args.command == "integral":
        _write(_rows(ex.run_integral(cfg), cfg.format), cfg.out)
    elif args.command == "spectrum":
        size = math.prod(cfg.dims)
        v = sample_potential(realization(cfg.potential, 0), size).values
        g = ex.build_generator(cfg.dims, cfg.couplings, v)
        ev = lindblad.generator_spectrum(g)
        rows = [{"re": float(z.real), "im": float(z.imag)} for z in ev]
        _write(_rows(rows, cfg.format), cfg.out)
        _summary({"config": effective, "slowest_rate": lindblad.slowest_rate(g)}, cfg.out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except ValidationError as exc:
        _emit_error("validation", str(exc))
        return EXIT_BAD_INPUT
    except (SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        _emit_error("numerical", str(exc))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
