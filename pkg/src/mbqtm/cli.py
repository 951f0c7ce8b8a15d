"""Command-line front end.

Every subcommand emits one report, as ``key: value`` text or as a single
JSON document ``{version, format_version, request, payload, timing}``.
Stochastic subcommands take ``--seed``; without it the seed comes from
``MBQTM_SEED`` or is generated, and is echoed in the report either way.

Exit status: 0 success or positive evidence, 1 checker found no evidence,
2 usage error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .complexity import (
    ClassId,
    check,
    format_ir,
    load_instance,
    load_ir,
    lower,
    transform_zqp_to_zbqp_star,
)
from .complexity.transforms import measured_overhead
from .ensemble import EnsembleConfig, ensemble_from_marginal, ensemble_measure
from .errors import MachineError, MbqtmError, ParseError, PreconditionError
from .machine import FORMAT_VERSION, format_machine, load_machine
from .measurement import NoiseModel, bulk_measure, et_measure, observe_cell, observe_full, qubit_marginal
from .resources import resolve
from .statistics import TableSpec, TailConvention, audit_table1, build_table, parse_real
from .superposition import marginal, run
from .wellformed import check_unitarity_window, validate_wellformed

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3
SEED_ENV = "MBQTM_SEED"


class ValidationFailure(Exception):
    def __init__(self, payload, message):
        super().__init__(message)
        self.payload = payload


def _real(text: str) -> float:
    try:
        return parse_real(text)
    except PreconditionError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _reals(text: str) -> list[float]:
    return [_real(t) for t in text.split(",") if t.strip()]


def _seed_arg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not (0 <= v < 2**64):
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        return _seed_arg(env)
    return int(np.random.SeedSequence().entropy % (2**63))


def _load_machine(path: str):
    p = resolve(path)
    if p.suffix == ".mqir":
        return lower(load_ir(p))
    return load_machine(p)


# subcommands --------------------------------------------------------------------

def cmd_validate(args):
    m = _load_machine(args.machine)
    report = validate_wellformed(m)
    payload = {"wellformedness": report.to_dict()}
    if args.window > 0:
        seed = _resolve_seed(args)
        args.seed = seed
        verdict = check_unitarity_window(m, args.window, args.window_steps, args.samples, seed=seed)
        payload["window"] = verdict.to_dict()
    passed = report.passed and payload.get("window", {}).get("passed", True)
    payload["passed"] = passed
    if not passed:
        msg = report.describe() if not report.passed else (
            f"{m.name}: window check deviation {payload['window']['worst_deviation']:.3g}")
        raise ValidationFailure(payload, msg)
    return payload, EXIT_OK


def cmd_run(args):
    m = _load_machine(args.machine)
    s = run(m, args.input, args.steps)
    halted = sum(abs(a) ** 2 for c, a in s.items() if c.state == m.final)
    payload = {
        "machine": m.name,
        "steps": args.steps,
        "support": len(s),
        "norm_squared": s.norm_squared(),
        "halted_probability": halted,
    }
    if args.cell is not None:
        payload["marginal"] = marginal(s, args.cell)
    if args.dump_amplitudes:
        payload["amplitudes"] = [
            {"state": c.state, "head": c.head, "tape": dict(c.tape), "re": a.real, "im": a.imag}
            for c, a in s.items()
        ]
    return payload, EXIT_OK


def cmd_observe(args):
    m = _load_machine(args.machine)
    seed = args.seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    s = run(m, args.input, args.steps)
    if args.model == "qtm":
        config, _ = observe_full(s, rng)
        payload = {"model": "qtm-observe", "configuration": str(config), "symbol": config.symbol_at(args.cell),
                   "probability": abs(s.amplitude(config)) ** 2}
    else:
        sym, post = observe_cell(s, args.cell, rng, model="qtm-partial")
        payload = {"model": "qtm-partial", "symbol": sym, "probability": marginal(s, args.cell)[sym],
                   "post_support": len(post)}
    payload.update(cell=args.cell, seed=seed)
    return payload, EXIT_OK


def cmd_measure(args):
    m = _load_machine(args.machine)
    seed = args.seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    s = run(m, args.input, args.steps)
    q = qubit_marginal(s, args.cell)
    payload = {"p1": q.p1, "p0": q.p0}
    if args.model == "bqtm":
        out = bulk_measure(q, NoiseModel(args.noise, args.theta), rng, seed=seed)
        payload["outcome"] = out.to_dict()
    else:
        if args.epsilon is None:
            raise PreconditionError("--epsilon is required for the mbqtm model")
        if args.n is not None:
            rep = ensemble_from_marginal(q, EnsembleConfig(args.n, seed), theta=args.theta)
            payload["realization"] = "ensemble"
            payload["ensemble"] = rep.to_dict()
        else:
            out = et_measure(q, args.epsilon, args.theta, rng, args.noise, superposition=s, seed=seed)
            payload["realization"] = "abstract"
            payload["outcome"] = out.to_dict()
        payload["consumed"] = True
    return payload, EXIT_OK


def cmd_ensemble(args):
    m = _load_machine(args.machine)
    seed = args.seed = _resolve_seed(args)
    cfg = EnsembleConfig(args.n, seed, args.partitions)
    rep = ensemble_measure(m, args.input, args.steps, args.cell, cfg, theta=args.theta, scale=args.scale,
                           slow_path=args.slow_path)
    return rep.to_dict(), EXIT_OK


def cmd_table(args):
    spec = TableSpec(tuple(args.thetas), tuple(args.epsilons), args.convention)
    grid = build_table(spec)
    records = [
        {"theta": th, "epsilon": e, "convention": spec.convention.value, "n": grid[i][j]}
        for i, th in enumerate(spec.thetas)
        for j, e in enumerate(spec.epsilons)
    ]
    return {"convention": spec.convention.value, "thetas": list(spec.thetas), "epsilons": list(spec.epsilons),
            "grid": grid, "records": records}, EXIT_OK


def cmd_audit(args):
    return audit_table1().to_dict(), EXIT_OK


def cmd_check(args):
    inst = load_instance(args.instance)
    args.seed = _resolve_seed(args)
    verdict = check(inst, mode=args.mode, trials=args.trials, seed=args.seed,
                    epsilon=args.epsilon, theta=args.theta, n=args.n, noise=args.noise)
    payload = {"instance": str(args.instance), "input": inst.input, "steps": inst.steps, **verdict.to_dict()}
    return payload, EXIT_OK if verdict.in_class_evidence else EXIT_NEGATIVE


def cmd_transform(args):
    src = resolve(args.source)
    if src.suffix == ".inst":
        inst = load_instance(src)
        if inst.ir is None:
            raise PreconditionError("instance does not reference a phased IR")
        ir = inst.ir
    else:
        ir = load_ir(src)
    out_ir = transform_zqp_to_zbqp_star(ir)
    lengths = range(1, 9)
    inputs = ["1" * n for n in lengths] + ["0" * n for n in lengths]
    symbols = [s for s in ir.alphabet if s != "#"]
    inputs = [x for x in inputs if set(x) <= set(symbols)] or [""]
    measured = sorted(set(measured_overhead(ir, out_ir, inputs)))
    out = Path(args.output)
    if out.suffix == ".mqt":
        text = format_machine(lower(out_ir), comments=[f"lowered from {out_ir.name}; overhead k = {out_ir.overhead}"])
    else:
        text = format_ir(out_ir)
    out.write_text(text, encoding="utf-8")
    return {"source": str(args.source), "output": str(out), "name": out_ir.name, "k": out_ir.overhead,
            "measured_k": measured, "cells": out_ir.cells, "wellformed": True}, EXIT_OK


# argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text", help="report format")
    common.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=_seed_arg, help=f"64-bit seed (default: ${SEED_ENV} or generated)")
    machine_run = argparse.ArgumentParser(add_help=False)
    machine_run.add_argument("machine", help="machine (.mqt) or phased IR (.mqir) file")
    machine_run.add_argument("--input", default="", help="input word written from cell 0")
    machine_run.add_argument("--steps", type=int, required=True, help="number of evolution steps")

    p = argparse.ArgumentParser(prog="mbqtm", description="Quantum, bulk and modified bulk Turing machine simulator")
    p.add_argument("--version", action="version",
                   version=f"mbqtm {__version__} (machine format {FORMAT_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common, seeded], help="check well-formedness of a machine")
    v.add_argument("machine")
    v.add_argument("--window", type=int, default=3, help="tape window radius for the randomized check (0 skips it)")
    v.add_argument("--window-steps", type=int, default=3)
    v.add_argument("--samples", type=int, default=10)
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", parents=[common, machine_run], help="evolve and summarise the superposition")
    r.add_argument("--cell", type=int, help="report the symbol marginal at this cell")
    r.add_argument("--dump-amplitudes", action="store_true")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("observe", parents=[common, seeded, machine_run], help="projective observation")
    o.add_argument("--cell", type=int, required=True)
    o.add_argument("--model", choices=("qtm", "qtm-partial"), default="qtm")
    o.set_defaults(func=cmd_observe)

    m = sub.add_parser("measure", parents=[common, seeded, machine_run], help="bulk or (epsilon, theta) measurement")
    m.add_argument("--cell", type=int, required=True)
    m.add_argument("--model", choices=("bqtm", "mbqtm"), required=True)
    m.add_argument("--theta", type=_real, required=True)
    m.add_argument("--epsilon", type=_real)
    m.add_argument("--n", type=int, help="realise the measurement with an ensemble of n members")
    m.add_argument("--noise", choices=("uniform", "adversarial-edge"), default="uniform")
    m.set_defaults(func=cmd_measure)

    e = sub.add_parser("ensemble", parents=[common, seeded, machine_run], help="ensemble-average measurement")
    e.add_argument("--cell", type=int, required=True)
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--partitions", type=int, default=1)
    e.add_argument("--theta", type=_real)
    e.add_argument("--scale", choices=("probability", "plusminus"), default="plusminus")
    e.add_argument("--slow-path", action="store_true", help="simulate every member separately")
    e.set_defaults(func=cmd_ensemble)

    t = sub.add_parser("table", parents=[common], help="required ensemble sizes for (theta, epsilon)")
    t.add_argument("--thetas", type=_reals, required=True, help="comma list, e.g. 2^-5,2^-6")
    t.add_argument("--epsilons", type=_reals, required=True)
    t.add_argument("--convention", choices=[c.value for c in TailConvention], default="two-sided")
    t.set_defaults(func=cmd_table)

    a = sub.add_parser("audit-table1", parents=[common], help="recompute the published n-table")
    a.set_defaults(func=cmd_audit)

    c = sub.add_parser("check", parents=[common, seeded], help="run the class criterion on an instance")
    c.add_argument("instance")
    c.add_argument("--mode", choices=("exact", "empirical"), default="exact")
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--epsilon", type=_real)
    c.add_argument("--theta", type=_real)
    c.add_argument("--n", type=int)
    c.add_argument("--noise", choices=("uniform", "adversarial-edge"))
    c.set_defaults(func=cmd_check)

    x = sub.add_parser("transform", parents=[common], help="zero-error to starred bulk rewrite")
    x.add_argument("source", help="phased IR (.mqir) or an instance referencing one")
    x.add_argument("--to", choices=("zbqp-star",), required=True)
    x.add_argument("-o", "--output", required=True, help="output path (.mqir, or .mqt for the lowered table)")
    x.set_defaults(func=cmd_transform)
    return p


def _request(args) -> dict:
    skip = {"func", "format", "timing"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _scalar(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def _render_text(args, payload) -> str:
    lines = [f"# mbqtm {args.command}"]
    if getattr(args, "seed", None) is not None and "seed" not in payload:
        lines.append(f"seed: {args.seed}")
    if args.command == "table":
        width = max(8, *(len(str(n)) + 2 for row in payload["grid"] for n in row))
        lines.append(f"convention: {payload['convention']}")
        lines.append("theta \\ eps".ljust(14) + "".join(f"{e!r:>{width}}" for e in payload["epsilons"]))
        for th, row in zip(payload["thetas"], payload["grid"]):
            lines.append(f"{th!r:<14}" + "".join(f"{n:>{width}}" for n in row))
        return "\n".join(lines)
    if args.command == "audit-table1":
        for r in payload["records"]:
            lines.append(" ".join(f"{k}={_scalar(v)}" for k, v in r.items()))
        lines += [f"{k}: {_scalar(v)}" for k, v in payload["conclusions"].items()]
        return "\n".join(lines)

    def walk(prefix, obj):
        if isinstance(obj, dict) and obj and prefix.count(".") < 2:
            for k, v in obj.items():
                walk(f"{prefix}.{k}" if prefix else str(k), v)
        else:
            lines.append(f"{prefix}: {_scalar(obj)}")

    walk("", payload)
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        payload, status = args.func(args)
    except ValidationFailure as exc:
        payload, status = exc.payload, EXIT_INVALID
        print(f"error: {exc}", file=sys.stderr)
    except (ParseError, MachineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PreconditionError, OSError, MbqtmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    elapsed = time.perf_counter() - start
    if args.format == "json":
        doc = {
            "version": __version__,
            "format_version": FORMAT_VERSION,
            "request": _request(args),
            "payload": payload,
            "timing": {"seconds": elapsed} if args.timing else None,
        }
        print(json.dumps(doc, sort_keys=True, default=_json_default))
    else:
        text = _render_text(args, payload)
        if args.timing:
            text += f"\ntiming.seconds: {elapsed!r}"
        print(text)
    return status


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


if __name__ == "__main__":
    sys.exit(main())
