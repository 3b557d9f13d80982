"""Command-line front end.

    nulllab estimate DATA [--gamma G] [--family gem|gev] [--known-null U0,S2]
    nulllab simulate (--plan NAME | --config PATH) --seed S [--out PATH]
    nulllab gen --model (NAME | PATH) --n N --seed S [--block-L L] [--out PATH]

Exit status: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import warnings
from pathlib import Path

import jsonschema

from . import estimators, harness
from .errors import NullLabError, NumericalError, ValidationError
from .mixtures import MixtureSpec, sample_block_dependent

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

_LAW = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["const", "uniform", "gamma"]},
        "v": {"type": "number"}, "a": {"type": "number"}, "b": {"type": "number"},
        "shape": {"type": "number"}, "scale": {"type": "number"}, "shift": {"type": "number"},
    },
    "additionalProperties": False,
}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "required": ["u0", "sigma0_sq", "eps", "mixing"],
            "properties": {
                "u0": {"type": "number"},
                "sigma0_sq": {"type": "number", "exclusiveMinimum": 0},
                "eps": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "mixing": {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["point_mass", "product"]},
                        "u": {"oneOf": [{"type": "number"}, _LAW]},
                        "sigma_sq": {"type": "number", "minimum": 0},
                        "sigma": _LAW,
                    },
                    "additionalProperties": False,
                },
                "A": {"type": ["number", "null"]},
                "delta_n": {"type": ["number", "null"]},
            },
            "additionalProperties": False,
        },
        "plan": {
            "type": "object",
            "properties": {
                "name": {"type": "string"},
                "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
                "gamma_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                               "minItems": 1},
                "L_grid": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "eps_grid": {"type": ["array", "null"], "items": {"type": "number"}},
                "reps": {"type": "integer", "minimum": 1},
                "master_seed": {"type": "integer"},
                "pipelines": {"type": "array", "items": {"enum": list(harness.PIPELINES)},
                              "minItems": 1},
            },
            "additionalProperties": False,
        },
        "estimator": {
            "type": "object",
            "properties": {
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "t_override": {"type": ["number", "null"]},
                "family": {"enum": ["GEM", "GEV"]},
                "clamp_sigma": {"type": "boolean"},
                "A": {"type": ["number", "null"]},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"format": {"enum": ["csv", "json"]}, "path": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def load_run_config(path) -> dict:
    """Read and schema-check a run-config document; unknown keys are rejected."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"config {path}: {where}: {exc.message}") from None
    return doc


def read_values(path, column=None) -> list[float]:
    """Parse newline-delimited reals, or one column of a CSV file with a header."""
    try:
        text = Path(path).read_text() if path != "-" else sys.stdin.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    values = []
    if column is None:
        for lineno, line in enumerate(text.splitlines(), start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            values.append(_parse_real(s, lineno))
        return values

    rows = csv.reader(line for line in text.splitlines() if not line.startswith("#"))
    header = next(rows, None)
    if header is None:
        return values
    if column in header:
        idx = header.index(column)
    else:
        try:
            idx = int(column)
        except ValueError:
            raise ValidationError(f"column {column!r} not in header {header}") from None
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if idx >= len(row):
            raise ValidationError(f"line {lineno}: missing column {column!r}")
        values.append(_parse_real(row[idx].strip(), lineno))
    return values


def _parse_real(s, lineno):
    try:
        v = float(s)
    except ValueError:
        raise ValidationError(f"line {lineno}: not a number: {s!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"line {lineno}: non-finite value {s!r}")
    return v


def _fmt(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def report_to_csv(rep: estimators.EstimateReport) -> str:
    z = rep.diagnostics.raw_eps_complex
    fields = {
        "u0_hat": rep.u0_hat, "sigma0_sq_hat": rep.sigma0_sq_hat, "eps_hat": rep.eps_hat,
        "t_used": rep.t_used, "gamma": rep.gamma, "n": rep.n, "family": rep.family,
        "gchar_modulus": rep.diagnostics.gchar_modulus, "raw_eps_re": z.real,
        "raw_eps_im": z.imag, "raw_sigma0_sq": rep.diagnostics.raw_sigma0_sq,
        "warnings": "; ".join(rep.diagnostics.warnings),
    }
    return ",".join(fields) + "\n" + ",".join(_fmt(v) for v in fields.values()) + "\n"


# --------------------------------------------------------------------------
# subcommands


def cmd_estimate(args) -> int:
    values = read_values(args.input, args.column)
    if not values:
        raise ValidationError("EmptySample: input holds no observations")
    cfg = estimators.EstimatorConfig(
        gamma=args.gamma, family=args.family.upper(), t_override=args.t, A=args.A
    )
    known = None
    if args.known_null is not None:
        try:
            u0, s2 = (float(p) for p in args.known_null.split(","))
        except ValueError:
            raise ValidationError("--known-null expects 'u0,sigma0sq'") from None
        known = (u0, s2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = estimators.estimate(values, cfg, known_null=known)
    for msg in rep.diagnostics.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    if args.format == "json":
        text = json.dumps(rep.to_dict(), indent=2) + "\n"
    else:
        text = report_to_csv(rep)
    _write(text, args.out)
    return EXIT_OK


def _plan_from_args(args) -> tuple[harness.ExperimentPlan, str, str | None]:
    fmt, out = args.format, args.out
    if args.plan and args.config:
        raise ValidationError("give either --plan or --config, not both")
    if args.plan:
        plans = harness.builtin_plans(args.seed)
        if args.plan not in plans:
            raise ValidationError(
                f"unknown plan {args.plan!r}; available: {', '.join(sorted(plans))}"
            )
        plan = plans[args.plan]
    elif args.config:
        doc = load_run_config(args.config)
        if "model" not in doc:
            raise ValidationError("config needs a 'model' section to simulate")
        spec = MixtureSpec.from_dict(doc["model"])
        plan_doc = dict(doc.get("plan", {}))
        if "gamma_grid" not in plan_doc:
            plan_doc["gamma_grid"] = [doc.get("estimator", {}).get("gamma", 0.2)]
        plan_doc.setdefault("n_grid", [50_000])
        plan_doc["master_seed"] = args.seed
        plan = harness.ExperimentPlan.from_dict(plan_doc, spec)
        output = doc.get("output", {})
        fmt = fmt or output.get("format")
        out = out or output.get("path")
    else:
        raise ValidationError("one of --plan or --config is required")
    if args.reps is not None:
        plan = dataclasses.replace(plan, reps=args.reps)
    return plan, fmt or "csv", out


def cmd_simulate(args) -> int:
    plan, fmt, out = _plan_from_args(args)
    result = harness.run_plan(plan, threads=args.threads)
    text = result.to_csv() if fmt == "csv" else result.to_json()
    _write(text, out)
    print(harness.summarize(result), file=sys.stderr if not out else sys.stdout)
    return EXIT_OK


def _model_from_arg(model: str) -> MixtureSpec:
    plans = harness.builtin_plans()
    if model in plans:
        return plans[model].spec
    doc = load_run_config(model)
    if "model" not in doc:
        raise ValidationError(f"config {model} has no 'model' section")
    return MixtureSpec.from_dict(doc["model"])


def cmd_gen(args) -> int:
    if args.n < 1:
        raise ValidationError(f"--n must be >= 1, got {args.n}")
    if args.block_L < 0:
        raise ValidationError(f"--block-L must be >= 0, got {args.block_L}")
    spec = _model_from_arg(args.model)
    if args.eps is not None:
        spec = spec.with_eps(args.eps)
    s = sample_block_dependent(spec, args.n, args.block_L, seed=args.seed)
    lines = [
        "# nulllab sample",
        "# model: " + json.dumps(spec.to_dict(), sort_keys=True),
        f"# seed: {args.seed}",
        f"# block_L: {args.block_L}",
        f"# n: {s.n}",
        f"# n_null: {s.n_null}",
    ]
    lines.extend(format(v, ".17g") for v in s.values.tolist())
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nulllab",
        description="Empirical-null and non-null proportion estimation via generalized Fourier functionals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate (u0, sigma0^2, eps) from a file of z-scores")
    p.add_argument("input", help="newline-delimited reals, CSV with --column, or '-' for stdin")
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--family", choices=["gem", "gev", "GEM", "GEV"], default="gem")
    p.add_argument("--known-null", metavar="U0,SIGMA0SQ")
    p.add_argument("--column", help="CSV column name or zero-based index")
    p.add_argument("--t", type=float, help="use this frequency instead of sqrt(gamma log n)")
    p.add_argument("--A", type=float, help="variance cap; warns when gamma >= 1/A")
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a built-in or configured Monte-Carlo plan")
    p.add_argument("--plan")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reps", type=int)
    p.add_argument("--threads", type=int, help="worker threads (default NULLLAB_THREADS or all cores)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="write simulated statistics, one per line")
    p.add_argument("--model", required=True, help="built-in plan name or run-config path")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--block-L", type=int, default=0)
    p.add_argument("--eps", type=float)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)
    return parser


def _glue_negative_values(argv):
    # argparse reads "-1,1" as an option; bind it to --known-null explicitly
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--known-null":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NullLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
