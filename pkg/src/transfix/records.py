"""Trace and certificate records.

A trace file is JSON Lines: one header record followed by one record per
recorded stage. Stages use the ordinal text syntax, states the space's
rendering (metric coordinates as 17-significant-digit strings) and every
float is written with ``%.17g`` so parsing is lossless. Keys are sorted and
nothing time-dependent is written, so identical runs give identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .engine import FixpointCertificate, IterationTrace, StageRecord, detect_stable
from .errors import EmptyTrace, ScenarioParseError
from .ordinal import parse_ordinal
from .space import render_float, space_from_dict

PathLike = Union[str, Path]


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def trace_lines(trace: IterationTrace) -> List[str]:
    space = trace.space
    header = {
        "record": "trace",
        "space": space.describe(),
        "initial": space.render(trace.initial),
        "budget": str(trace.budget),
        "outcome": trace.outcome,
        "closure": None if trace.closure is None else str(trace.closure),
        "measure": trace.measure,
    }
    lines = [_dumps(header)]
    for rec in trace.stages:
        row = {"record": "stage", "stage": str(rec.stage), "state": space.render(rec.state),
               "discrepancy": render_float(rec.discrepancy)}
        if rec.inner_closure is not None:
            row["inner_closure"] = str(rec.inner_closure)
        lines.append(_dumps(row))
    return lines


def dump_trace(trace: IterationTrace) -> str:
    return "\n".join(trace_lines(trace)) + "\n"


def load_trace(text: str) -> IterationTrace:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ScenarioParseError(f"bad trace record: {exc.msg}", lineno, exc.colno) from None
    if not rows or rows[0].get("record") != "trace":
        raise ScenarioParseError("trace file must start with a trace header", 1, 1)
    head = rows[0]
    space = space_from_dict(head["space"])
    trace = IterationTrace(
        space=space,
        initial=space.parse_state(head["initial"]),
        budget=parse_ordinal(head["budget"]),
        outcome=head["outcome"],
        closure=None if head.get("closure") is None else parse_ordinal(head["closure"]),
        measure=head.get("measure", "residual"),
    )
    for lineno, row in enumerate(rows[1:], 2):
        if row.get("record") != "stage":
            raise ScenarioParseError(f"unexpected record {row.get('record')!r}", lineno, 1)
        inner = row.get("inner_closure")
        trace.stages.append(StageRecord(parse_ordinal(row["stage"]), space.parse_state(row["state"]),
                                        float(row["discrepancy"]),
                                        None if inner is None else parse_ordinal(inner)))
    return trace


def read_trace(path: PathLike) -> IterationTrace:
    return load_trace(Path(path).read_text(encoding="utf-8"))


def write_trace(trace: IterationTrace, path: PathLike) -> None:
    Path(path).write_text(dump_trace(trace), encoding="utf-8")


def certificate_dict(cert: FixpointCertificate) -> Dict[str, Any]:
    space = cert.trace.space
    out = {
        "record": "certificate",
        "value": space.render(cert.value),
        "closure": str(cert.closure),
        "residual": render_float(cert.residual),
        "check_mode": cert.check_mode,
        "tolerance": None if cert.tolerance is None else render_float(cert.tolerance),
        "uniqueness_evidence": [[space.render(x0), space.render(v)] for x0, v in cert.uniqueness_evidence],
        "notes": list(cert.notes),
    }
    if cert.inner_value is not None:
        out["inner_value"] = _render_any(cert.inner_value)
    return out


def _render_any(x):
    if isinstance(x, np.ndarray):
        return [render_float(v) for v in x.reshape(-1)]
    if isinstance(x, frozenset):
        return sorted(map(str, x))
    return str(x)


def dump_json(obj: Dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_table(trace: IterationTrace) -> str:
    """Per-stage table: ordinal, state, discrepancy and the stability flag."""
    if not trace.stages:
        raise EmptyTrace("trace has no recorded stages")
    rows = [("stage", "state", "discrepancy", "stable")]
    # metric discrepancies keep all 17 significant digits, trailing zeros included
    fmt = "%#.17g" if trace.space.check_mode != "exact" else "%.17g"
    # once a stage is unstable so is every earlier one; scanning backwards keeps this linear
    stable = [False] * len(trace.stages)
    for i in range(len(trace.stages) - 1, -1, -1):
        stable[i] = detect_stable(trace, trace.stages[i].stage)
        if not stable[i]:
            break
    for rec, flag in zip(trace.stages, stable):
        state = trace.space.render(rec.state)
        if isinstance(state, list):
            state = "{" + ", ".join(map(str, state)) + "}" if trace.space.check_mode == "exact" else \
                "(" + ", ".join(state) + ")"
        rows.append((str(rec.stage), str(state), fmt % rec.discrepancy,
                     "true" if flag else "false"))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    footer = f"outcome: {trace.outcome}"
    if trace.closure is not None:
        footer += f" at {trace.closure}"
    return "\n".join(lines + [footer]) + "\n"
