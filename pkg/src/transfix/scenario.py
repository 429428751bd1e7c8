"""Scenario files: loading, validation and object construction.

A scenario is one YAML document::

    name: halving
    defaults: {seed: 0, tolerance: 1.0e-9, budget: "w*10"}
    spaces:
      reals: {kind: metric, dim: 1}
    operators:
      half: {space: reals, family: affine, A: 0.5, b: 1.0}
    runs:
      - {do: iterate, operator: half, from: 0.0}

Structure is checked against :data:`SCHEMA`; name references are resolved
afterwards so errors can name the missing reference.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import jsonschema
import yaml

from .engine import DEFAULT_CHECK_SAMPLES, DEFAULT_DENSE_CAP, DEFAULT_LIMIT_CAP, DEFAULT_WINDOW
from .errors import OrdinalParseError, ScenarioParseError, ScenarioValidationError
from .families import FAMILIES, build_operator
from .games import (NestedGame, SemanticGame, SignalSchedule, affine_nested_game, affine_signal_game,
                    union_signal_game)
from .oracle import TransitionSystem
from .ordinal import Ordinal, as_ordinal, parse_ordinal
from .space import KINDS, MEASURES, MetricSpace, Operator, OrdinalChain, Space, space_from_dict

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "tolerance": 1e-9,
    "budget": "w*10",
    "window": DEFAULT_WINDOW,
    "limit_cap": DEFAULT_LIMIT_CAP,
    "dense_cap": DEFAULT_DENSE_CAP,
    "check_samples": DEFAULT_CHECK_SAMPLES,
}

_ordinal_text = {"type": ["string", "integer"]}
_named = {"type": "object", "additionalProperties": {"type": "object"}}

SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["name", "runs"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "defaults": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "budget": _ordinal_text,
                "window": {"type": "integer", "minimum": 2},
                "limit_cap": {"type": "integer", "minimum": 1},
                "dense_cap": {"type": "integer", "minimum": 0},
                "check_samples": {"type": "integer", "minimum": 1},
            },
        },
        "spaces": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["kind"],
                "properties": {"kind": {"enum": ["powerset", "lattice", "metric", "ordinal-chain"]}},
            },
        },
        "systems": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["states", "transitions"],
                "additionalProperties": False,
                "properties": {
                    "states": {"type": "array"},
                    "transitions": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}},
                    "labels": {"type": "object", "additionalProperties": {"type": "array"}},
                },
            },
        },
        "operators": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["space", "family"],
                "properties": {
                    "space": {"type": "string"},
                    "family": {"enum": list(FAMILIES)},
                    "kind": {"enum": list(KINDS)},
                    "factor": {"type": "number"},
                },
            },
        },
        "games": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["type", "family"],
                "properties": {
                    "type": {"enum": ["semantic", "nested"]},
                    "family": {"enum": ["affine-signal", "union-signal", "affine"]},
                    "measure": {"enum": list(MEASURES)},
                    "signal": {
                        "type": "object",
                        "required": ["tail"],
                        "additionalProperties": False,
                        "properties": {
                            "schedule": {"type": "array",
                                         "items": {"type": "array", "minItems": 2, "maxItems": 2}},
                            "tail": {},
                        },
                    },
                },
            },
        },
        "runs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["do"],
                "properties": {
                    "do": {"enum": ["iterate", "uniqueness", "play", "nested", "oracle-check"]},
                    "name": {"type": "string"},
                    "budget": _ordinal_text,
                    "expect": {"enum": ["converge", "diverge", "unique", "multiple", "inconclusive"]},
                    "check": {"enum": ["lfp", "gfp", "fixpoints", "reachability"]},
                    "initials": {"type": "array", "minItems": 2},
                    "starts": {"type": "array", "minItems": 2,
                               "items": {"type": "array", "minItems": 2, "maxItems": 2}},
                    "grid": {"type": "object", "required": ["lo", "hi", "step"]},
                    "count": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}


@dataclass
class Scenario:
    name: str
    settings: Dict[str, Any]
    spaces: Dict[str, Space] = field(default_factory=dict)
    systems: Dict[str, TransitionSystem] = field(default_factory=dict)
    operators: Dict[str, Operator] = field(default_factory=dict)
    games: Dict[str, Union[SemanticGame, NestedGame]] = field(default_factory=dict)
    runs: List[Dict[str, Any]] = field(default_factory=list)
    source: Dict[str, Any] = field(default_factory=dict)

    @property
    def budget(self) -> Ordinal:
        return parse_ordinal(self.settings["budget"])

    def run_budget(self, run: Dict[str, Any]) -> Ordinal:
        return as_ordinal(run["budget"]) if "budget" in run else self.budget

    def normalized(self) -> Dict[str, Any]:
        """The source document with defaults filled in, for echoing back."""
        doc = copy.deepcopy(self.source)
        doc["defaults"] = dict(self.settings)
        return doc


def parse_text(text: str) -> Dict[str, Any]:
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ScenarioParseError(f"invalid YAML: {exc.problem or exc}", line, col) from None
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioParseError("a scenario must be a mapping", 1, 1)
    return doc


def _fail(where: str, msg: str):
    raise ScenarioValidationError(f"{where}: {msg}")


def _ref(table: Dict[str, Any], name: Any, where: str, what: str):
    if name not in table:
        _fail(where, f"unknown {what} {name!r}")
    return table[name]


def build(doc: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Scenario:
    """Validate a parsed document and construct every declared object."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.path)))
    if errors:
        err = errors[0]
        where = "/".join(map(str, err.path)) or "<root>"
        _fail(where, err.message)

    settings = dict(DEFAULTS)
    settings.update(doc.get("defaults", {}))
    settings.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        settings["budget"] = str(as_ordinal(settings["budget"]))
    except (OrdinalParseError, TypeError) as exc:
        _fail("defaults/budget", str(exc))
    scen = Scenario(doc["name"], settings, source=copy.deepcopy(doc))

    for name, decl in doc.get("spaces", {}).items():
        decl = dict(decl)
        if decl["kind"] == "metric":
            decl.setdefault("tolerance", settings["tolerance"])
            if overrides and overrides.get("tolerance") is not None:
                decl["tolerance"] = overrides["tolerance"]
        try:
            scen.spaces[name] = space_from_dict(decl)
        except (KeyError, TypeError, ValueError) as exc:
            _fail(f"spaces/{name}", f"invalid declaration: {exc}")

    for name, decl in doc.get("systems", {}).items():
        try:
            scen.systems[name] = TransitionSystem(decl["states"], decl["transitions"], decl.get("labels", {}))
        except ValueError as exc:
            _fail(f"systems/{name}", str(exc))

    for name, decl in doc.get("operators", {}).items():
        space = _ref(scen.spaces, decl["space"], f"operators/{name}", "space")
        try:
            scen.operators[name] = build_operator(space, decl, name=name)
        except (KeyError, TypeError, ValueError) as exc:
            _fail(f"operators/{name}", f"invalid declaration: {exc}")

    for name, decl in doc.get("games", {}).items():
        scen.games[name] = _build_game(scen, name, decl)

    for i, run in enumerate(doc["runs"]):
        _check_run(scen, i, run)
        scen.runs.append(dict(run))
    return scen


def _build_game(scen: Scenario, name: str, decl: Dict[str, Any]):
    where = f"games/{name}"
    try:
        if decl["type"] == "semantic":
            space = _ref(scen.spaces, decl.get("space"), where, "space")
            sig = decl.get("signal")
            if sig is None:
                _fail(where, "semantic games need a signal")
            schedule = SignalSchedule({as_ordinal(r): v for r, v in sig.get("schedule", [])}, sig["tail"])
            if decl["family"] == "affine-signal":
                return affine_signal_game(space, decl["A"], decl.get("B", 0.0), decl.get("b", 0.0), schedule,
                                          measure=decl.get("measure", "residual"), kind=decl.get("kind"),
                                          name=name)
            if decl["family"] == "union-signal":
                return union_signal_game(space, schedule, measure=decl.get("measure", "symmetric-difference"),
                                         name=name)
            _fail(where, f"family {decl['family']!r} is not a semantic-game family")
        if decl["family"] != "affine":
            _fail(where, f"family {decl['family']!r} is not a nested-game family")
        outer = _ref(scen.spaces, decl.get("outer_space"), where, "space")
        inner = _ref(scen.spaces, decl.get("inner_space"), where, "space")
        if not isinstance(outer, MetricSpace) or not isinstance(inner, MetricSpace):
            _fail(where, "affine nested games need metric spaces")
        return affine_nested_game(
            outer, inner, decl["A"], decl.get("B", 0.0), decl.get("b", 0.0),
            decl.get("C", 0.0), decl.get("D", 0.0), decl.get("e", 0.0),
            inner_budget=decl.get("inner_budget", scen.settings["budget"]),
            outer_budget=decl.get("outer_budget", scen.settings["budget"]),
            outer_kind=decl.get("outer_kind"), name=name,
            check_samples=int(decl.get("check_samples", 32)),
            inner_check_samples=int(decl.get("inner_check_samples", 16)),
            limit_cap=int(decl.get("limit_cap", 1000)),
        )
    except ScenarioValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        _fail(where, f"invalid declaration: {exc}")


def _check_run(scen: Scenario, i: int, run: Dict[str, Any]) -> None:
    where = f"runs/{i}"
    kind = run["do"]
    if "budget" in run:
        try:
            as_ordinal(run["budget"])
        except (OrdinalParseError, TypeError) as exc:
            _fail(where, f"bad budget: {exc}")
    if kind == "iterate":
        _ref(scen.operators, run.get("operator"), where, "operator")
        if "from" not in run:
            _fail(where, "iterate needs 'from'")
    elif kind == "uniqueness":
        if "game" in run:
            game = _ref(scen.games, run["game"], where, "game")
            if not isinstance(game, NestedGame) or "starts" not in run:
                _fail(where, "game uniqueness needs a nested game and 'starts'")
        else:
            _ref(scen.operators, run.get("operator"), where, "operator")
            if "initials" not in run:
                _fail(where, "uniqueness needs 'initials'")
    elif kind == "play":
        game = _ref(scen.games, run.get("game"), where, "game")
        if not isinstance(game, SemanticGame) or "from" not in run:
            _fail(where, "play needs a semantic game and 'from'")
    elif kind == "nested":
        game = _ref(scen.games, run.get("game"), where, "game")
        if not isinstance(game, NestedGame) or "x0" not in run or "y0" not in run:
            _fail(where, "nested needs a nested game, 'x0' and 'y0'")
    elif kind == "oracle-check":
        check = run.get("check")
        if check is None:
            _fail(where, "oracle-check needs 'check'")
        if check == "reachability":
            ts = _ref(scen.systems, run.get("system"), where, "system")
            if run.get("target") not in ts.labels:
                _fail(where, f"unknown label {run.get('target')!r}")
        else:
            op = _ref(scen.operators, run.get("operator"), where, "operator")
            if check == "fixpoints" and isinstance(op.space, MetricSpace) and "grid" not in run:
                _fail(where, "fixpoints on a metric space needs a 'grid'")
            if check == "fixpoints" and isinstance(op.space, OrdinalChain):
                _fail(where, "fixpoints needs a finite carrier")


def load(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> Scenario:
    return build(parse_text(Path(path).read_text(encoding="utf-8")), overrides)


def state_arg(space: Space, value):
    """Interpret a scenario-file state literal in ``space``."""
    if isinstance(space, OrdinalChain):
        return space.coerce(as_ordinal(value))
    if isinstance(value, (int, float)) and isinstance(space, MetricSpace):
        return space.coerce([value] * space.dim)
    return space.coerce(value)
