"""Ordinal-indexed iteration of operators.

Stages are visited in increasing ordinal order. Successor stages apply the
operator once; a limit stage ``lam`` takes its value from the states sampled
along ``lam``'s fundamental sequence, via the space's limit rule (agreement of
``window`` consecutive samples by default). A run stops at the first stage
whose state the operator leaves unchanged (exactly on lattices and chains,
within the tolerance on metric spaces) and that stage is the closure ordinal.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceeded, LimitDivergence, NonConvergence, OperatorCheckFailed, StageNotRecorded
from .ordinal import ONE, ZERO, Kind, Ordinal, as_ordinal, classify, fundamental_seq, parse_ordinal
from .space import CONTRACTION, EXACT, DiscrepancyMeasure, Operator, Space, check_operator

log = logging.getLogger(__name__)

DEFAULT_BUDGET = parse_ordinal("w*10")
DEFAULT_WINDOW = 2
DEFAULT_LIMIT_CAP = 10**5
DEFAULT_DENSE_CAP = 10**4
DEFAULT_CHECK_SAMPLES = 1000

# certificate notes
NOTE_SAMPLED_CHECK = "contraction-check-sampled"
NOTE_LIMIT_RULE = "limit-stage-by-sample-agreement"
NOTE_UNCHECKED = "operator-kind-undeclared"


@dataclass
class StageRecord:
    stage: Ordinal
    state: Any
    discrepancy: float
    inner_closure: Optional[Ordinal] = None


@dataclass
class IterationTrace:
    """Recorded stages of one run.

    ``outcome`` is ``"converged"`` (``closure`` set), ``"exhausted"`` (budget
    reached) or ``"limit-divergence"``. Successor stages are recorded densely up
    to ``dense_cap`` records, after that only limit stages, power-of-two offsets
    past a limit and the closure stage.
    """

    space: Space
    initial: Any
    budget: Ordinal
    stages: List[StageRecord] = field(default_factory=list)
    outcome: str = "exhausted"
    closure: Optional[Ordinal] = None
    measure: str = "residual"

    def __len__(self) -> int:
        return len(self.stages)

    def record_at(self, stage) -> StageRecord:
        stage = as_ordinal(stage)
        for rec in self.stages:
            if rec.stage == stage:
                return rec
        raise StageNotRecorded(f"stage {stage} was not recorded")

    def states(self) -> List[Any]:
        return [r.state for r in self.stages]

    def discrepancies(self) -> List[float]:
        return [r.discrepancy for r in self.stages]


@dataclass
class FixpointCertificate:
    value: Any
    closure: Ordinal
    residual: float
    check_mode: str
    tolerance: Optional[float]
    trace: IterationTrace
    uniqueness_evidence: List[Tuple[Any, Any]] = field(default_factory=list)
    notes: Tuple[str, ...] = ()
    inner_value: Any = None

    @property
    def through_limit(self) -> bool:
        return NOTE_LIMIT_RULE in self.notes


def residual(space: Space, x, fx) -> float:
    if space.check_mode == EXACT:
        return 0.0 if space.equal(x, fx) else 1.0
    return space.distance(x, fx)


# step(stage, state) -> (next_state, inner_closure or None)
StepFn = Callable[[Ordinal, Any], Tuple[Any, Optional[Ordinal]]]
MeasureFn = Callable[[Ordinal, Any, Any], float]


class _Walk:
    """Visits stages in order; see the module docstring for the rules."""

    def __init__(self, space: Space, step: StepFn, x0, *, measure: MeasureFn, window: int,
                 limit_cap: int, dense_cap: int, stop_on_fixed: bool,
                 closure_ok: Callable[[Ordinal], bool] = lambda s: True):
        if window < 2:
            raise ValueError("agreement window must be at least 2")
        self.space = space
        self.step = step
        self.measure = measure
        self.window = window
        self.limit_cap = limit_cap
        self.dense_cap = dense_cap
        self.stop_on_fixed = stop_on_fixed
        self.closure_ok = closure_ok
        self.stage = ZERO
        self.state = x0
        self.records: List[StageRecord] = []
        self.found: Optional[Ordinal] = None
        self.used_limit = False
        self.last_image = None

    def _should_record(self, stage: Ordinal) -> bool:
        if len(self.records) < self.dense_cap or stage.is_limit():
            return True
        k = stage.finite_part
        return k & (k - 1) == 0

    def visit(self) -> bool:
        stage, x = self.stage, self.state
        # overflow is reported below as the state leaving the space
        with np.errstate(over="ignore", invalid="ignore"):
            fx, inner = self.step(stage, x)
        fixed = self.space.equal(x, fx) and self.closure_ok(stage)
        if fixed or self._should_record(stage):
            self.records.append(StageRecord(stage, x, self.measure(stage, x, fx), inner))
        self.last_image = fx
        if fixed and self.stop_on_fixed:
            self.found = stage
            return True
        if not self.space.contains(fx):
            raise NonConvergence(f"state left the space after stage {stage}")
        self.stage = stage.plus_nat(1)
        self.state = fx
        return False

    def _try_limit(self, target: Ordinal, samples: Sequence[Tuple[Ordinal, Any]]) -> bool:
        if len(samples) < self.window:
            return False
        # states before a game's signal tail say nothing about the limit
        if not all(self.closure_ok(stage) for stage, _ in list(samples)[-self.window:]):
            return False
        value = self.space.limit(target, list(samples)[-self.window:])
        if value is None:
            return False
        self.stage, self.state = target, value
        self.used_limit = True
        return True

    def explore(self, exp: Ordinal) -> bool:
        """Walk the block ``[stage, stage + w^exp)``; True iff a closure was found."""
        if exp.is_zero():
            return self.visit()
        start = self.stage
        target = start + Ordinal.omega_power(exp)
        cls = classify(exp)
        samples: deque = deque(maxlen=self.window)
        if exp == ONE:
            for _ in range(self.limit_cap):
                samples.append((self.stage, self.state))
                if self._try_limit(target, samples):
                    return False
                if self.visit():
                    return True
        elif cls.kind is Kind.SUCCESSOR:
            for _ in range(self.limit_cap):
                samples.append((self.stage, self.state))
                if self._try_limit(target, samples):
                    return False
                if self.explore(cls.pred):
                    return True
        else:
            for n in range(self.limit_cap):
                # block [start + w^(exp[n-1]), start + w^(exp[n]))
                if self.explore(fundamental_seq(exp, n)):
                    return True
                samples.append((self.stage, self.state))
                if self._try_limit(target, samples):
                    return False
        raise LimitDivergence(f"no agreement at limit stage {target} within {self.limit_cap} samples")

    def run_through(self, last: Ordinal) -> bool:
        """Visit every stage up to and including ``last``."""
        for exp, coeff in (last + ONE).terms:
            for _ in range(coeff):
                if self.explore(exp):
                    return True
        return False

    def run_before(self, target: Ordinal) -> bool:
        """Walk every stage below ``target``, leaving ``self.state`` at stage ``target``."""
        for exp, coeff in target.terms:
            for _ in range(coeff):
                if self.explore(exp):
                    return True
        return False


def _residual_measure(space: Space, measure: Optional[DiscrepancyMeasure]) -> MeasureFn:
    if measure is None:
        return lambda stage, x, fx: space.distance(x, fx)
    return lambda stage, x, fx: measure(x, fx, None)


def _op_step(op: Operator) -> StepFn:
    return lambda stage, x: (op(x), None)


def ensure_checked(op: Operator, sample_count: int = DEFAULT_CHECK_SAMPLES, seed: int = 0) -> None:
    result = check_operator(op, sample_count, seed)
    if not result:
        detail = f"witness {result.witness!r}"
        if result.ratio is not None:
            detail += f", ratio {result.ratio:.6g}"
        raise OperatorCheckFailed(f"operator {op.name!r} fails its declared {op.kind} check: {detail}", result)


def state_at(op: Operator, x0, o, *, budget=None, window: int = DEFAULT_WINDOW,
             limit_cap: int = DEFAULT_LIMIT_CAP) -> Any:
    """The state ``phi^o(x0)``.

    ``phi^0 = x0``, successors apply ``op`` once and a limit takes the value
    its fundamental-sequence samples settle on (see :class:`IterationTrace`).
    On exact spaces the walk stops early at a fixed point, since every later
    stage equals it.
    """
    o = as_ordinal(o)
    if budget is not None and o > as_ordinal(budget):
        raise BudgetExceeded(f"stage {o} exceeds budget {budget}")
    space = op.space
    walk = _Walk(space, _op_step(op), space.coerce(x0), measure=lambda s, x, fx: 0.0, window=window,
                 limit_cap=limit_cap, dense_cap=0, stop_on_fixed=space.check_mode == EXACT)
    walk.run_before(o)
    return walk.state


def _certificate(walk: _Walk, trace: IterationTrace, op_kind: str, extra_notes=()) -> FixpointCertificate:
    space = walk.space
    trace.outcome = "converged"
    trace.closure = walk.found
    notes = list(extra_notes)
    if op_kind == CONTRACTION:
        notes.append(NOTE_SAMPLED_CHECK)
    elif op_kind not in ("monotone",):
        notes.append(NOTE_UNCHECKED)
    if walk.used_limit:
        notes.append(NOTE_LIMIT_RULE)
    return FixpointCertificate(
        value=walk.state,
        closure=walk.found,
        residual=residual(space, walk.state, walk.last_image),
        check_mode=space.check_mode,
        tolerance=space.tolerance,
        trace=trace,
        notes=tuple(notes),
    )


def run_walk(space: Space, step: StepFn, x0, budget, *, measure: MeasureFn, measure_name: str,
             op_kind: str, window: int = DEFAULT_WINDOW, limit_cap: int = DEFAULT_LIMIT_CAP,
             dense_cap: int = DEFAULT_DENSE_CAP, closure_ok=lambda s: True,
             extra_notes=()) -> FixpointCertificate:
    """Shared driver for operator runs and game runs."""
    budget = as_ordinal(budget)
    x0 = space.coerce(x0)
    walk = _Walk(space, step, x0, measure=measure, window=window, limit_cap=limit_cap,
                 dense_cap=dense_cap, stop_on_fixed=True, closure_ok=closure_ok)
    trace = IterationTrace(space, x0, budget, walk.records, measure=measure_name)
    try:
        found = walk.run_through(budget)
    except LimitDivergence as exc:
        trace.outcome = "limit-divergence"
        raise LimitDivergence(str(exc), trace) from None
    except NonConvergence as exc:
        raise NonConvergence(str(exc), trace) from None
    if not found:
        raise NonConvergence(f"no fixed point up to budget {budget}", trace)
    return _certificate(walk, trace, op_kind, extra_notes)


def iterate_to_fixpoint(op: Operator, x0, budget=DEFAULT_BUDGET, *, measure: Optional[DiscrepancyMeasure] = None,
                        window: int = DEFAULT_WINDOW, limit_cap: int = DEFAULT_LIMIT_CAP,
                        dense_cap: int = DEFAULT_DENSE_CAP, check_samples: int = DEFAULT_CHECK_SAMPLES,
                        seed: int = 0) -> FixpointCertificate:
    """Iterate ``op`` from ``x0`` until it stops changing, within ``budget``.

    Returns a :class:`FixpointCertificate` whose ``closure`` is the first
    stage ``s`` with ``op(X_s) = X_s``. Raises :class:`NonConvergence` (with the
    trace attached) when the budget runs out, and its subclass
    :class:`LimitDivergence` when a limit stage cannot be evaluated.
    Operators declaring a kind must pass the matching check first, otherwise
    :class:`OperatorCheckFailed` is raised.
    """
    ensure_checked(op, check_samples, seed)
    name = measure.name if measure is not None else "residual"
    return run_walk(op.space, _op_step(op), x0, budget, measure=_residual_measure(op.space, measure),
                    measure_name=name, op_kind=op.kind, window=window, limit_cap=limit_cap,
                    dense_cap=dense_cap)


def detect_stable(trace: IterationTrace, start) -> bool:
    """True iff every recorded stage at or after ``start`` holds the same state."""
    start = as_ordinal(start)
    later = [r.state for r in trace.stages if r.stage >= start]
    if not later:
        raise StageNotRecorded(f"no stage at or after {start} in the trace")
    return all(trace.space.equal(later[0], s) for s in later[1:])


@dataclass
class Uniqueness:
    """Result of running from several initial states.

    ``status`` is ``"unique"``, ``"multiple"`` or ``"inconclusive"``; ``values``
    holds one representative per distinct fixed point found.
    """

    status: str
    values: List[Any]
    certificates: List[Optional[FixpointCertificate]]
    failures: List[BaseException] = field(default_factory=list)

    @property
    def value(self):
        if self.status != "unique":
            raise ValueError(f"no unique value: status is {self.status}")
        return self.values[0]


def same_fixpoint(space: Space, a: FixpointCertificate, b: FixpointCertificate,
                  factor: Optional[float] = None) -> bool:
    """Whether two certified values are the same fixed point.

    Exact spaces compare values directly. For a contraction with factor ``c``,
    ``d(a, b) <= d(a, fa) + c d(a, b) + d(fb, b)``, so two approximate fixed
    points belong to one true fixed point iff ``d(a, b)`` is within
    ``(r_a + r_b) / (1 - c)``; without a factor the tolerance is used. The
    bound is tight (1-D maps approached from opposite sides), so one extra
    tolerance absorbs rounding in the residuals.
    """
    if space.check_mode == EXACT or factor is None:
        return space.equal(a.value, b.value)
    slack = (a.residual + b.residual) / (1.0 - factor) + space.tolerance
    return space.distance(a.value, b.value) <= slack


def classify_runs(space: Space, certs: Sequence[Optional[FixpointCertificate]], initials: Sequence[Any],
                  failures: List[BaseException], factor: Optional[float]) -> Uniqueness:
    if failures:
        return Uniqueness("inconclusive", [c.value for c in certs if c is not None], list(certs), failures)
    reps: List[FixpointCertificate] = []
    for cert in certs:
        if not any(same_fixpoint(space, r, cert, factor) for r in reps):
            reps.append(cert)
    if len(reps) == 1:
        evidence = [(x0, c.value) for x0, c in zip(initials, certs)]
        reps[0].uniqueness_evidence = evidence
        return Uniqueness("unique", [reps[0].value], list(certs))
    return Uniqueness("multiple", [r.value for r in reps], list(certs))


def verify_uniqueness(op: Operator, initials: Sequence[Any], budget=DEFAULT_BUDGET, **kwargs) -> Uniqueness:
    """Run from every initial state and compare the fixed points reached.

    Any non-converging run makes the answer ``"inconclusive"``. Keyword
    arguments go to :func:`iterate_to_fixpoint`.
    """
    if len(initials) < 2:
        raise ValueError("need at least two initial states")
    certs: List[Optional[FixpointCertificate]] = []
    failures: List[BaseException] = []
    for x0 in initials:
        try:
            certs.append(iterate_to_fixpoint(op, x0, budget, **kwargs))
        except NonConvergence as exc:
            log.debug("run from %r did not converge: %s", x0, exc)
            certs.append(None)
            failures.append(exc)
    factor = op.factor if op.kind == CONTRACTION else None
    return classify_runs(op.space, certs, list(initials), failures, factor)
