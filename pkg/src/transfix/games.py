"""Semantic games and nested games built on the engine.

A :class:`SemanticGame` updates an observer state each round from the round's
external signal; its equilibrium is a state the tail signal leaves unchanged.
A :class:`NestedGame` solves an inner game to equilibrium for the current
outer state before every outer step, so the outer run iterates the composed
map ``X -> outer(X, Y*(X))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .engine import (DEFAULT_BUDGET, DEFAULT_CHECK_SAMPLES, DEFAULT_DENSE_CAP, DEFAULT_LIMIT_CAP,
                     DEFAULT_WINDOW, FixpointCertificate, Uniqueness, classify_runs, ensure_checked,
                     iterate_to_fixpoint, run_walk)
from .families import _matrix, _vector, affine, contraction_factor, operator_norm
from .errors import InnerDivergence, NonConvergence, OperatorCheckFailed, SignalUndefined
from .ordinal import ONE, ZERO, Ordinal, as_ordinal
from .space import (CONTRACTION, GENERAL, DiscrepancyMeasure, MetricSpace, Operator, Space, builtin_measure,
                    space_from_dict)


class SignalSchedule:
    """Per-round external input: explicit ``(round, value)`` entries plus a constant tail.

    Rounds without an entry receive the tail. The tail *begins* right after
    the last explicit round; equilibria are only recognised from there on.
    """

    def __init__(self, entries: Optional[Mapping[Any, Any]] = None, tail: Any = None):
        self.entries: Dict[Ordinal, Any] = {as_ordinal(k): v for k, v in (entries or {}).items()}
        self.tail = tail
        self.tail_start = (max(self.entries) + ONE) if self.entries else ZERO

    @classmethod
    def constant(cls, value) -> "SignalSchedule":
        return cls({}, value)

    def at(self, round) -> Any:
        round = as_ordinal(round)
        if round in self.entries:
            return self.entries[round]
        if self.tail is None:
            raise SignalUndefined(f"no signal at round {round}")
        return self.tail

    def in_tail(self, round) -> bool:
        return self.tail is not None and as_ordinal(round) >= self.tail_start


@dataclass
class SemanticGame:
    space: Space
    update: Callable[[Any, Any], Any]
    signal: SignalSchedule
    measure: DiscrepancyMeasure
    kind: str = GENERAL
    factor: Optional[float] = None
    name: str = "game"

    def __post_init__(self):
        if self.signal.tail is None:
            raise SignalUndefined("a game's signal schedule needs a constant tail")
        self.signal.entries = {k: self._coerce_signal(v) for k, v in self.signal.entries.items()}
        self.signal.tail = self._coerce_signal(self.signal.tail)
        self._tail_op = Operator(self.space, lambda x: self.update(x, self.signal.tail), kind=self.kind,
                                 factor=self.factor, name=f"{self.name}@tail")

    def _coerce_signal(self, value):
        try:
            return self.space.coerce(value)
        except (TypeError, ValueError):
            return value

    @property
    def tail_operator(self) -> Operator:
        """The round map with the tail signal fixed; the one whose kind is checked."""
        return self._tail_op


def play_round(g: SemanticGame, x, round) -> Tuple[Any, float]:
    """Play one round: returns the new state and the discrepancy it leaves."""
    signal = g.signal.at(round)
    x = g.space.coerce(x)
    new = g.update(x, signal)
    return new, g.measure(x, new, signal)


def play(g: SemanticGame, x0, budget=DEFAULT_BUDGET, *, window: int = DEFAULT_WINDOW,
         limit_cap: int = DEFAULT_LIMIT_CAP, dense_cap: int = DEFAULT_DENSE_CAP,
         check_samples: int = DEFAULT_CHECK_SAMPLES, seed: int = 0) -> FixpointCertificate:
    """Play rounds from ``x0`` until an equilibrium under the tail signal.

    Each recorded stage carries the discrepancy of the round played at it.
    """
    ensure_checked(g.tail_operator, check_samples, seed)

    def step(stage, x):
        return g.update(x, g.signal.at(stage)), None

    def measure(stage, x, fx):
        return g.measure(x, fx, g.signal.at(stage))

    return run_walk(g.space, step, x0, budget, measure=measure, measure_name=g.measure.name,
                    op_kind=g.kind, window=window, limit_cap=limit_cap, dense_cap=dense_cap,
                    closure_ok=g.signal.in_tail)


@dataclass
class NestedGame:
    """Outer update ``outer_update(X, Y)`` fed by inner equilibria ``Y*(X)``.

    ``inner_kind``/``inner_factor`` declare the kind of the sliced inner map
    ``Y -> inner_update(X, Y)`` for every context ``X``; ``outer_kind``/
    ``outer_factor`` declare the kind of the composed outer step.
    """

    outer_space: Space
    inner_space: Space
    outer_update: Callable[[Any, Any], Any]
    inner_update: Callable[[Any, Any], Any]
    inner_budget: Ordinal = DEFAULT_BUDGET
    outer_budget: Ordinal = DEFAULT_BUDGET
    inner_kind: str = GENERAL
    inner_factor: Optional[float] = None
    outer_kind: str = GENERAL
    outer_factor: Optional[float] = None
    inner_check_samples: int = 16
    check_samples: int = 32
    # every outer step runs a full inner solve, so divergence is declared sooner
    limit_cap: int = 1000
    # inner solves on metric spaces stop at this tolerance; None means 1e-3 of the inner space's
    inner_tolerance: Optional[float] = None
    name: str = "nested"
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.inner_budget = as_ordinal(self.inner_budget)
        self.outer_budget = as_ordinal(self.outer_budget)
        self._solve_space = self.inner_space
        if isinstance(self.inner_space, MetricSpace):
            # the outer residual cannot see inner error, so keep that error far below it
            tol = self.inner_tolerance if self.inner_tolerance is not None else self.inner_space.tolerance * 1e-3
            self._solve_space = space_from_dict(dict(self.inner_space.describe(), tolerance=tol))

    def inner_operator(self, X) -> Operator:
        return Operator(self._solve_space, lambda Y: self.inner_update(X, Y), kind=self.inner_kind,
                        factor=self.inner_factor, name=f"{self.name}.inner")

    def composed_operator(self, y0=None, seed: int = 0) -> Operator:
        """The outer step ``X -> outer_update(X, Y*(X))`` with cold inner starts from ``y0``."""
        y0 = self.inner_space.default_point() if y0 is None else y0

        def fn(X):
            return self.outer_update(X, solve_inner(self, X, y0, seed=seed).value)

        return Operator(self.outer_space, fn, kind=self.outer_kind, factor=self.outer_factor,
                        name=f"{self.name}.composed")


def solve_inner(n: NestedGame, X, y0, *, seed: int = 0) -> FixpointCertificate:
    """Equilibrium ``Y*(X)`` of the inner game for the fixed context ``X``.

    Any failure (kind check, budget, divergent limit) raises :class:`InnerDivergence`.
    """
    op = n.inner_operator(n.outer_space.coerce(X))
    try:
        return iterate_to_fixpoint(op, y0, n.inner_budget, check_samples=n.inner_check_samples, seed=seed)
    except (OperatorCheckFailed, NonConvergence) as exc:
        raise InnerDivergence(f"inner game has no equilibrium for context {X!r}: {exc}", X, exc) from exc


def solve_nested(n: NestedGame, x0, y0, *, window: int = DEFAULT_WINDOW, limit_cap: Optional[int] = None,
                 dense_cap: int = DEFAULT_DENSE_CAP, seed: int = 0) -> FixpointCertificate:
    """Global equilibrium of a nested game.

    Every outer stage first solves the inner game (warm-started from the
    previous inner equilibrium), then applies the outer update. The returned
    certificate holds ``X`` as ``value`` and ``Y*(X)`` as ``inner_value``; each
    trace record carries the inner closure ordinal of its stage.
    """
    if n.outer_kind != GENERAL:
        ensure_checked(n.composed_operator(y0, seed), n.check_samples, seed)
    latest = {"y": n.inner_space.coerce(y0)}

    def step(stage, X):
        cert = solve_inner(n, X, latest["y"], seed=seed)
        latest["y"] = cert.value
        return n.outer_update(X, cert.value), cert.closure

    cert = run_walk(n.outer_space, step, x0, n.outer_budget,
                    measure=lambda s, x, fx: n.outer_space.distance(x, fx), measure_name="residual",
                    op_kind=n.outer_kind, window=window, limit_cap=limit_cap or n.limit_cap,
                    dense_cap=dense_cap)
    cert.inner_value = latest["y"]
    return cert


def equilibrium_check(g, x, y0=None, *, seed: int = 0) -> bool:
    """Whether one full round leaves ``x`` unchanged.

    Semantic games use the tail signal. Nested games first solve the inner
    game at ``x`` (from ``y0``, default the inner space's origin or bottom).
    """
    if isinstance(g, SemanticGame):
        x = g.space.coerce(x)
        return g.space.equal(g.update(x, g.signal.tail), x)
    x = g.outer_space.coerce(x)
    y0 = g.inner_space.default_point() if y0 is None else y0
    y = solve_inner(g, x, y0, seed=seed).value
    return g.outer_space.equal(g.outer_update(x, y), x)


def verify_nested_uniqueness(n: NestedGame, starts: Sequence[Tuple[Any, Any]], **kwargs) -> Uniqueness:
    """Solve from several ``(x0, y0)`` pairs and compare the global values."""
    if len(starts) < 2:
        raise ValueError("need at least two starting pairs")
    certs: List[Optional[FixpointCertificate]] = []
    failures: List[BaseException] = []
    for x0, y0 in starts:
        try:
            certs.append(solve_nested(n, x0, y0, **kwargs))
        except (NonConvergence, InnerDivergence) as exc:
            certs.append(None)
            failures.append(exc)
    factor = n.outer_factor if n.outer_kind == CONTRACTION else None
    return classify_runs(n.outer_space, certs, [x for x, _ in starts], failures, factor)


# -- builtin families ---------------------------------------------------------


def affine_signal_game(space: MetricSpace, A, B, b, signal: SignalSchedule, measure: str = "residual",
                       kind: Optional[str] = None, name: str = "affine-signal") -> SemanticGame:
    """Round map ``x -> A x + B d + b`` for signal ``d``; a contraction iff ``||A|| < 1``."""
    A, B, b = _matrix(A, space.dim), _matrix(B, space.dim), _vector(b, space.dim)
    norm = operator_norm(A, space.metric)
    if kind is None:
        kind = CONTRACTION if norm < 1.0 else GENERAL
    return SemanticGame(space, lambda x, d: A @ x + B @ d + b, signal, builtin_measure(measure, space),
                        kind=kind, factor=contraction_factor(norm) if kind == CONTRACTION else None, name=name)


def union_signal_game(space, signal: SignalSchedule, measure: str = "symmetric-difference",
                      name: str = "union-signal") -> SemanticGame:
    """Round map ``X -> X | d`` on a powerset lattice."""
    return SemanticGame(space, lambda X, d: X | d, signal, builtin_measure(measure, space),
                        kind="monotone", name=name)


def affine_nested_game(outer_space: MetricSpace, inner_space: MetricSpace, A, B, b, C, D, e,
                       inner_budget=DEFAULT_BUDGET, outer_budget=DEFAULT_BUDGET,
                       outer_kind: Optional[str] = None, name: str = "affine-nested", **kwargs) -> NestedGame:
    """Outer ``X -> A X + B Y + b``, inner ``Y -> C X + D Y + e``.

    The inner equilibrium is ``Y* = (I - D)^-1 (C X + e)`` when ``||D|| < 1``,
    so the composed step is affine with matrix ``A + B (I - D)^-1 C``; see
    :func:`composed_affine`. Kinds default to contraction whenever the
    relevant norm is below one.
    """
    n, m = outer_space.dim, inner_space.dim
    A, b = _matrix(A, n), _vector(b, n)
    D, e = _matrix(D, m), _vector(e, m)
    B = np.asarray(B, dtype=float) * (np.eye(n, m) if np.ndim(B) == 0 else 1)
    C = np.asarray(C, dtype=float) * (np.eye(m, n) if np.ndim(C) == 0 else 1)
    inner_norm = operator_norm(D, inner_space.metric)
    inner_kind = CONTRACTION if inner_norm < 1.0 else GENERAL
    params = {"A": A, "B": B, "b": b, "C": C, "D": D, "e": e}
    outer_factor = None
    if inner_kind == CONTRACTION:
        M, _ = _composed_matrix(params)
        outer_norm = operator_norm(M, outer_space.metric)
        if outer_kind is None:
            outer_kind = CONTRACTION if outer_norm < 1.0 else GENERAL
        if outer_kind == CONTRACTION:
            outer_factor = contraction_factor(outer_norm)
    outer_kind = outer_kind or GENERAL
    return NestedGame(outer_space, inner_space,
                      outer_update=lambda X, Y: A @ X + B @ Y + b,
                      inner_update=lambda X, Y: C @ X + D @ Y + e,
                      inner_budget=inner_budget, outer_budget=outer_budget,
                      inner_kind=inner_kind, inner_factor=contraction_factor(inner_norm) if inner_kind == CONTRACTION else None,
                      outer_kind=outer_kind, outer_factor=outer_factor, name=name, params=params, **kwargs)


def _composed_matrix(p) -> Tuple[np.ndarray, np.ndarray]:
    m = p["D"].shape[0]
    solve = np.linalg.solve(np.eye(m) - p["D"], np.column_stack([p["C"], p["e"]]))
    inner_gain, inner_offset = solve[:, :-1], solve[:, -1]
    return p["A"] + p["B"] @ inner_gain, p["B"] @ inner_offset + p["b"]


def inner_equilibrium_affine(n: NestedGame, X) -> np.ndarray:
    """Closed-form ``Y*(X)`` for an :func:`affine_nested_game`."""
    p = n.params
    m = p["D"].shape[0]
    return np.linalg.solve(np.eye(m) - p["D"], p["C"] @ np.asarray(X, dtype=float) + p["e"])


def composed_affine(n: NestedGame) -> Operator:
    """The composed outer step of an affine nested game, as a plain affine operator."""
    M, c = _composed_matrix(n.params)
    return affine(n.outer_space, M, c, kind=n.outer_kind, factor=n.outer_factor, name=f"{n.name}.Phi")
