"""Command-line front end.

Exit status: 0 success (or formula true), 1 formula false, 2 input error,
3 numeric warning (verdict within tolerance, horizon cap, Pade order cap).
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import io
from .csl import CslSyntaxError, ModelFormula, check, parse
from .expm import ExpmOptions
from .measure import InvalidSpecError, QuadratureOptions, cylinder_measure
from .model import StructureError, apollonian_gen1, validate

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_WARN = 0, 1, 2, 3


class InputError(Exception):
    pass


def _positive(kind):
    def conv(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return conv


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qctmc",
        description="Check CSL formulas against quantum continuous-time Markov chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    numeric = argparse.ArgumentParser(add_help=False)
    numeric.add_argument("--expm-eps", type=_positive(float), default=ExpmOptions.epsilon,
                         help="Pade termination tolerance (default %(default)g)")
    numeric.add_argument("--output", choices=("text", "json"), default="text")
    numeric.add_argument("--initial", metavar="PATH",
                         help="JSON object state -> d x d matrix overriding the model's initial ID")
    numeric.add_argument("--no-timing", action="store_true",
                         help="omit wall-clock timings so output is reproducible byte for byte")

    p_check = sub.add_parser("check", parents=[numeric], help="decide a model formula")
    p_check.add_argument("model", metavar="MODEL")
    src = p_check.add_mutually_exclusive_group(required=True)
    src.add_argument("--formula", metavar="TEXT")
    src.add_argument("--formula-file", metavar="PATH")
    grid = p_check.add_mutually_exclusive_group()
    grid.add_argument("--step", type=_positive(float), help="quadrature step width")
    grid.add_argument("--samples", type=_positive(int), default=100,
                      help="quadrature samples per phase (default %(default)s)")
    p_check.add_argument("--rule", choices=("right", "mid"), default="right")
    p_check.add_argument("--decision-tol", type=_positive(float), default=1e-6)
    p_check.add_argument("--horizon-tol", type=_positive(float), default=1e-8)
    p_check.add_argument("--horizon-cap", type=_positive(float), default=float(2**20))

    p_cyl = sub.add_parser("cyl", parents=[numeric], help="probability of a cylinder set")
    p_cyl.add_argument("model", metavar="MODEL")
    p_cyl.add_argument("cylinder", metavar="CYLINDER")

    p_val = sub.add_parser("validate", help="list model invariant violations")
    p_val.add_argument("model", metavar="MODEL")
    p_val.add_argument("--initial", metavar="PATH")
    p_val.add_argument("--output", choices=("text", "json"), default="text")

    p_gen = sub.add_parser("gen", help="write a built-in example model")
    p_gen.add_argument("example", choices=("apollonian",))
    p_gen.add_argument("-o", "--out", metavar="PATH", help="output file (default: stdout)")
    return parser


def _load(args):
    model, initial = io.load_model(args.model)
    if getattr(args, "initial", None):
        initial = io.load_initial(args.initial, model.dim)
    problems = validate(model, initial)
    if initial is None:
        problems.append("initial: model file has no initial ID and --initial was not given")
    if problems:
        raise InputError("\n".join(problems))
    return model, initial


def _blocks_json(rho, dim):
    return {s: io.matrix_to_json(rho.block(s, dim)) for s in sorted(rho.blocks)}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _emit(doc, out):
    out.write(json.dumps(_clean(doc), sort_keys=True) + "\n")


def _fmt_matrix(a):
    rows = []
    for row in np.asarray(a):
        rows.append("  [" + ", ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in row) + "]")
    return "\n".join(rows)


def cmd_check(args, out):
    model, initial = _load(args)
    text = args.formula
    if args.formula_file:
        try:
            with open(args.formula_file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"formula-file: {exc.strerror or exc}") from None
    formula = parse(text)
    if not isinstance(formula, ModelFormula):
        raise InputError("formula: expected a model formula of the form P~c [ path ]")
    quad = QuadratureOptions(
        samples=args.samples or 100, step=args.step, rule=args.rule,
        horizon_tol=args.horizon_tol, horizon_cap=args.horizon_cap,
    )
    t0 = time.perf_counter()
    verdict = check(model, initial, formula, quad, ExpmOptions(epsilon=args.expm_eps),
                    args.decision_tol)
    elapsed = time.perf_counter() - t0
    diagnostics = dict(verdict.result.diagnostics)
    diagnostics["warning"] = verdict.warning
    diagnostics["notes"] = list(verdict.notes)
    timing = None if args.no_timing else {**verdict.result.timing, "total": elapsed}
    if args.output == "json":
        _emit({
            "probability": verdict.probability,
            "verdict": verdict.truth,
            "margin": verdict.margin,
            "diagnostics": diagnostics,
            "timing": timing,
        }, out)
    else:
        out.write(f"probability: {verdict.probability:.6f}\n")
        out.write(f"verdict: {'true' if verdict.truth else 'false'}\n")
        out.write(f"margin: {verdict.margin:.6g}\n")
        if verdict.warning:
            out.write(f"warning: {verdict.warning}\n")
        for note in verdict.notes:
            out.write(f"note: {note}\n")
        out.write(f"structure drift: {diagnostics['structure_drift']:.3g}\n")
        if timing:
            out.write("timing: " + ", ".join(f"{k} {v:.3f}s" for k, v in timing.items()) + "\n")
    if verdict.warning:
        return EXIT_WARN
    return EXIT_OK if verdict.truth else EXIT_FALSE


def cmd_cyl(args, out):
    model, initial = _load(args)
    spec = io.load_cylinder(args.cylinder)
    t0 = time.perf_counter()
    result = cylinder_measure(model, initial, spec, ExpmOptions(epsilon=args.expm_eps))
    elapsed = time.perf_counter() - t0
    timing = None if args.no_timing else {**result.timing, "total": elapsed}
    final = {s: b for s, b in result.final_operator.blocks.items() if np.any(b != 0)}
    if args.output == "json":
        _emit({
            "probability": result.probability,
            "final_operator": _blocks_json(result.final_operator, model.dim),
            "diagnostics": result.diagnostics,
            "timing": timing,
        }, out)
    else:
        out.write(f"probability: {result.probability:.6f}\n")
        for s in sorted(final):
            out.write(f"block {s}:\n{_fmt_matrix(final[s])}\n")
        for w in result.diagnostics["warnings"]:
            out.write(f"warning: {w}\n")
        if timing:
            out.write("timing: " + ", ".join(f"{k} {v:.3f}s" for k, v in timing.items()) + "\n")
    return EXIT_WARN if result.diagnostics["warnings"] else EXIT_OK


def cmd_validate(args, out):
    model, initial = io.load_model(args.model)
    if args.initial:
        initial = io.load_initial(args.initial, model.dim)
    problems = validate(model, initial)
    if args.output == "json":
        _emit({"valid": not problems, "diagnostics": problems}, out)
    else:
        out.write("valid\n" if not problems else "\n".join(problems) + "\n")
    return EXIT_OK if not problems else EXIT_INPUT


def cmd_gen(args, out):
    model, initial = apollonian_gen1()
    if args.out:
        io.save_model(args.out, model, initial)
    else:
        json.dump(io.model_to_dict(model, initial), out, indent=1)
        out.write("\n")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "cyl": cmd_cyl, "validate": cmd_validate, "gen": cmd_gen}


def run(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except (InputError, io.ModelFileError, CslSyntaxError, InvalidSpecError, KeyError) as exc:
        err.write(f"error: {exc.args[0] if exc.args else exc}\n")
        return EXIT_INPUT
    except (StructureError, ArithmeticError) as exc:
        err.write(f"numeric error: {exc}\n")
        return EXIT_WARN


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
