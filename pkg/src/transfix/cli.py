"""Command-line scenario runner.

Subcommands::

    transfix run <scenario>     execute every directive, write artifacts
    transfix check <scenario>   validate only; print the scenario with defaults applied
    transfix oracle <scenario>  execute only the oracle-check directives
    transfix explain <trace>    render a trace file as a table

Exit status is 0 when every directive met its expectation, 1 when some did
not, and 2 for unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml

from .engine import iterate_to_fixpoint, verify_uniqueness
from .errors import (EmptyTrace, InnerDivergence, NonConvergence, OperatorCheckFailed, ScenarioParseError,
                     ScenarioValidationError, TransfixError)
from .families import preimage
from .games import play, solve_nested, verify_nested_uniqueness
from .oracle import enumerate_fixpoints, gfp_bruteforce, grid, lfp_bruteforce, mu_reachability
from .records import certificate_dict, dump_json, read_trace, render_table, write_trace
from .scenario import Scenario, load, state_arg
from .space import CONTRACTION, FiniteLattice, MetricSpace, PowersetLattice

log = logging.getLogger("transfix")


@dataclass
class DirectiveResult:
    index: int
    kind: str
    ok: bool
    message: str
    files: List[str] = field(default_factory=list)


class _Emitter:
    def __init__(self, out_dir: Path, stem: str):
        self.out_dir = out_dir
        self.stem = stem
        self.files: List[str] = []

    def _path(self, suffix: str) -> Path:
        path = self.out_dir / f"{self.stem}{suffix}"
        self.files.append(str(path))
        return path

    def trace(self, trace, suffix: str = "") -> None:
        if trace is not None:
            write_trace(trace, self._path(f"{suffix}.trace.jsonl"))

    def record(self, obj: Dict[str, Any], suffix: str) -> None:
        self._path(suffix).write_text(dump_json(obj), encoding="utf-8")

    def certificate(self, cert, suffix: str = "") -> None:
        self.trace(cert.trace, suffix)
        self.record(certificate_dict(cert), f"{suffix}.cert.json")

    def failure(self, exc: BaseException, suffix: str = "") -> None:
        self.trace(getattr(exc, "trace", None), suffix)
        record = {"record": "non-convergence" if isinstance(exc, NonConvergence) else "error",
                  "error": type(exc).__name__, "message": str(exc)}
        trace = getattr(exc, "trace", None)
        if trace is not None:
            record["outcome"] = trace.outcome
        self.record(record, f"{suffix}.result.json")


def _run_kwargs(scen: Scenario) -> Dict[str, Any]:
    s = scen.settings
    return {"window": s["window"], "limit_cap": s["limit_cap"], "dense_cap": s["dense_cap"], "seed": s["seed"]}


def _nested_kwargs(scen: Scenario) -> Dict[str, Any]:
    # nested games carry their own per-limit cap
    kw = _run_kwargs(scen)
    del kw["limit_cap"]
    return kw


def _converge_directive(emit: _Emitter, expect: str, thunk) -> DirectiveResult:
    try:
        cert = thunk()
    except NonConvergence as exc:
        emit.failure(exc)
        ok = expect == "diverge"
        return DirectiveResult(0, "", ok, f"did not converge ({type(exc).__name__}: {exc})")
    emit.certificate(cert)
    ok = expect == "converge"
    value = cert.trace.space.render(cert.value)
    return DirectiveResult(0, "", ok, f"converged at {cert.closure} to {value}")


def _near(op, cert, point) -> bool:
    """Whether a grid fixed point and a certified value are the same fixed point.

    Both are approximate; under a contraction with factor ``c`` their residuals
    bound the distance to the true fixed point by ``r / (1 - c)`` each.
    """
    space = op.space
    if op.kind != CONTRACTION:
        return space.equal(cert.value, point)
    slack = (cert.residual + space.distance(op(point), point)) / (1.0 - op.factor)
    return space.distance(cert.value, point) <= slack + space.tolerance


def _oracle(scen: Scenario, run: Dict[str, Any], emit: _Emitter) -> DirectiveResult:
    check = run["check"]
    kw = _run_kwargs(scen)
    kw["check_samples"] = scen.settings["check_samples"]
    budget = scen.run_budget(run)
    if check == "reachability":
        ts = scen.systems[run["system"]]
        oracle_set = mu_reachability(ts, run["target"])
        lat = PowersetLattice(ts.states)
        op = preimage(lat, ts.transitions, ts.labels[run["target"]])
        engine_set = iterate_to_fixpoint(op, lat.bottom, budget, **kw).value
        agree = engine_set == oracle_set
        rec = {"record": "oracle", "check": check, "oracle": lat.render(oracle_set),
               "engine": lat.render(engine_set), "agree": agree}
        emit.record(rec, ".oracle.json")
        return DirectiveResult(0, "", agree, f"reachable {lat.render(oracle_set)}; engine agrees: {agree}")

    op = scen.operators[run["operator"]]
    space = op.space
    if check in ("lfp", "gfp"):
        if not isinstance(space, FiniteLattice):
            raise ScenarioValidationError(f"{check} needs a finite lattice")
        start = space.bottom if check == "lfp" else space.top
        brute = (lfp_bruteforce if check == "lfp" else gfp_bruteforce)(op, space)
        engine_value = iterate_to_fixpoint(op, start, budget, **kw).value
        agree = engine_value == brute
        rec = {"record": "oracle", "check": check, "oracle": space.render(brute),
               "engine": space.render(engine_value), "agree": agree}
        emit.record(rec, ".oracle.json")
        return DirectiveResult(0, "", agree, f"{check} {space.render(brute)}; engine agrees: {agree}")

    # fixpoints
    if isinstance(space, MetricSpace):
        g = run["grid"]
        carrier = [[v] * space.dim for v in grid(float(g["lo"]), float(g["hi"]), float(g["step"]))]
    else:
        carrier = space
    fps = enumerate_fixpoints(op, carrier)
    rec = {"record": "oracle", "check": check, "fixpoints": [space.render(x) for x in fps]}
    ok = True
    msg = f"{len(fps)} fixed point(s)"
    if "count" in run:
        ok = len(fps) == run["count"]
        msg += f" (expected {run['count']})"
    if "initials" in run:
        uniq = verify_uniqueness(op, [state_arg(space, x) for x in run["initials"]], budget, **kw)
        rec["uniqueness"] = uniq.status
        agree = (uniq.status == "unique") == (len(fps) == 1)
        if uniq.status == "unique" and len(fps) == 1:
            agree = _near(op, uniq.certificates[0], fps[0])
        rec["agree"] = agree
        ok = ok and agree
        msg += f"; engine reports {uniq.status}; agree: {agree}"
    emit.record(rec, ".oracle.json")
    return DirectiveResult(0, "", ok, msg)


def _uniqueness(scen: Scenario, run: Dict[str, Any], emit: _Emitter) -> DirectiveResult:
    kw = _run_kwargs(scen)
    if "game" in run:
        game = scen.games[run["game"]]
        starts = [(state_arg(game.outer_space, x), state_arg(game.inner_space, y)) for x, y in run["starts"]]
        result = verify_nested_uniqueness(game, starts, **_nested_kwargs(scen))
        space = game.outer_space
    else:
        op = scen.operators[run["operator"]]
        space = op.space
        initials = [state_arg(space, x) for x in run["initials"]]
        result = verify_uniqueness(op, initials, scen.run_budget(run), check_samples=scen.settings["check_samples"],
                                   **kw)
    for k, cert in enumerate(result.certificates):
        if cert is not None:
            emit.certificate(cert, f".run{k}")
    for k, exc in enumerate(result.failures):
        emit.failure(exc, f".failure{k}")
    emit.record({"record": "uniqueness", "status": result.status,
                 "values": [space.render(v) for v in result.values]}, ".uniqueness.json")
    expect = run.get("expect", "unique")
    return DirectiveResult(0, "", result.status == expect,
                           f"{result.status}: {[space.render(v) for v in result.values]}")


def execute_directive(scen: Scenario, i: int, run: Dict[str, Any], out_dir: Path) -> DirectiveResult:
    kind = run["do"]
    stem = f"{i:02d}-{kind}" + (f"-{run['name']}" if run.get("name") else "")
    emit = _Emitter(out_dir, stem)
    kw = _run_kwargs(scen)
    expect = run.get("expect", "converge")
    try:
        if kind == "iterate":
            op = scen.operators[run["operator"]]
            x0 = state_arg(op.space, run["from"])
            result = _converge_directive(emit, expect, lambda: iterate_to_fixpoint(
                op, x0, scen.run_budget(run), check_samples=scen.settings["check_samples"], **kw))
        elif kind == "play":
            game = scen.games[run["game"]]
            x0 = state_arg(game.space, run["from"])
            result = _converge_directive(emit, expect, lambda: play(
                game, x0, scen.run_budget(run), check_samples=scen.settings["check_samples"], **kw))
        elif kind == "nested":
            game = scen.games[run["game"]]
            x0 = state_arg(game.outer_space, run["x0"])
            y0 = state_arg(game.inner_space, run["y0"])
            result = _converge_directive(emit, expect, lambda: solve_nested(game, x0, y0, **_nested_kwargs(scen)))
        elif kind == "uniqueness":
            result = _uniqueness(scen, run, emit)
        else:
            result = _oracle(scen, run, emit)
    except (TransfixError, ValueError) as exc:
        emit.failure(exc)
        diverged = isinstance(exc, (InnerDivergence, OperatorCheckFailed))
        result = DirectiveResult(0, "", diverged and expect == "diverge", f"{type(exc).__name__}: {exc}")
    result.index, result.kind, result.files = i, kind, emit.files
    return result


def run_scenario(scen: Scenario, out_dir, only_oracle: bool = False) -> List[DirectiveResult]:
    """Execute the scenario's directives in order, writing artifacts under ``out_dir/<name>``."""
    target = Path(out_dir) / scen.name
    target.mkdir(parents=True, exist_ok=True)
    results = []
    for i, run in enumerate(scen.runs):
        if only_oracle and run["do"] != "oracle-check":
            continue
        results.append(execute_directive(scen, i, run, target))
    return results


def explain_trace(path) -> str:
    return render_table(read_trace(path))


def _overrides(args) -> Dict[str, Any]:
    return {"seed": args.seed, "budget": args.budget, "tolerance": args.tolerance}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transfix", description="Transfinite fixed-point scenario runner")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "execute every directive"), ("check", "validate only"),
                            ("oracle", "execute only oracle-check directives")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--budget", help="default budget ordinal, e.g. 'w*10'")
        p.add_argument("--tolerance", type=float, help="equality tolerance for metric spaces")
        p.add_argument("--out-dir", type=Path, default=Path("out"))
    p = sub.add_parser("explain", help="render a trace file")
    p.add_argument("trace", type=Path)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "explain":
        try:
            sys.stdout.write(explain_trace(args.trace))
        except (ScenarioParseError, EmptyTrace, OSError, KeyError, ValueError) as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        scen = load(args.scenario, _overrides(args))
    except (ScenarioParseError, ScenarioValidationError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.command == "check":
        sys.stdout.write(yaml.safe_dump(scen.normalized(), sort_keys=False))
        return 0
    results = run_scenario(scen, args.out_dir, only_oracle=args.command == "oracle")
    for r in results:
        print(f"[{'ok' if r.ok else 'FAIL'}] {r.index:02d} {r.kind}: {r.message}")
    return 0 if all(r.ok for r in results) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
