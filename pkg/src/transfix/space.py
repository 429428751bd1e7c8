"""State spaces, operators and the checks that gate them.

Four spaces are provided:

* :class:`FiniteLattice` -- an explicit finite lattice given by elements and a
  covering (or full order) relation, validated exhaustively on construction.
* :class:`PowersetLattice` -- subsets of a finite base set ordered by inclusion.
* :class:`MetricSpace` -- real vectors of fixed dimension with a builtin
  distance and an equality tolerance.
* :class:`OrdinalChain` -- the ordinals up to a bound, the one infinite space
  the engine handles (limits are suprema).

Lattices and chains compare states exactly; metric spaces compare within
``tolerance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BadFactor, LatticeError, SpaceMismatch, TooLarge
from .ordinal import Ordinal, as_ordinal, fundamental_seq, parse_ordinal

EXACT = "exact"
TOLERANT = "tolerant"

DEFAULT_TOLERANCE = 1e-9
MAX_MONOTONE_PAIRS = 2**12


def render_float(v: float) -> str:
    return "%.17g" % v


class Space:
    """Common interface of every state space."""

    check_mode = EXACT
    tolerance: Optional[float] = None

    def equal(self, x, y) -> bool:
        return x == y

    def distance(self, x, y) -> float:
        return 0.0 if self.equal(x, y) else 1.0

    def contains(self, x) -> bool:
        return True

    def coerce(self, x):
        return x

    def default_point(self):
        raise NotImplementedError

    def render(self, x):
        raise NotImplementedError

    def parse_state(self, obj):
        raise NotImplementedError

    def describe(self) -> Dict[str, Any]:
        raise NotImplementedError

    def limit(self, stage: Ordinal, samples: Sequence[Tuple[Ordinal, Any]]):
        """Value at limit ``stage`` from the trailing fundamental-sequence samples, or None.

        The default rule is agreement: all samples in the window are equal.
        """
        first = samples[0][1]
        if all(self.equal(first, s) for _, s in samples[1:]):
            return samples[-1][1]
        return None


# -- lattices -----------------------------------------------------------------


class FiniteLattice(Space):
    """A finite lattice on named elements.

    ``covers`` lists pairs ``(lower, upper)``; the order is their
    reflexive-transitive closure. Alternatively pass ``order`` with the full
    relation. Partial-order laws and the existence of all binary joins and
    meets are verified on construction.
    """

    def __init__(self, elements: Sequence[Hashable], covers: Iterable[Tuple[Hashable, Hashable]] = (),
                 order: Optional[Iterable[Tuple[Hashable, Hashable]]] = None):
        self._elements = list(elements)
        if len(set(self._elements)) != len(self._elements):
            raise LatticeError("duplicate lattice elements")
        if not self._elements:
            raise LatticeError("a lattice needs at least one element")
        self._index = {e: i for i, e in enumerate(self._elements)}
        n = len(self._elements)
        rel = np.eye(n, dtype=bool)
        self._covers = [tuple(p) for p in covers]
        for lo, hi in list(self._covers) + [tuple(p) for p in (order or ())]:
            try:
                rel[self._index[lo], self._index[hi]] = True
            except KeyError as exc:
                raise LatticeError(f"unknown element {exc.args[0]!r} in order relation") from None
        if order is None:
            for k in range(n):  # Warshall closure
                rel |= rel[:, [k]] & rel[[k], :]
        self._leq = rel
        self._check_partial_order()
        self._join = self._bound_table(upper=True)
        self._meet = self._bound_table(upper=False)
        below_all = np.flatnonzero(rel.all(axis=1))
        above_all = np.flatnonzero(rel.all(axis=0))
        self.bottom = self._elements[below_all[0]]
        self.top = self._elements[above_all[0]]

    def _check_partial_order(self) -> None:
        rel = self._leq
        if not rel.diagonal().all():
            raise LatticeError("order is not reflexive")
        both = rel & rel.T
        np.fill_diagonal(both, False)
        if both.any():
            i, j = map(int, np.argwhere(both)[0])
            raise LatticeError(f"order is not antisymmetric: {self._elements[i]!r}, {self._elements[j]!r}")
        composed = (rel.astype(np.int64) @ rel.astype(np.int64)) > 0
        if (composed & ~rel).any():
            raise LatticeError("order is not transitive")

    def _bound_table(self, upper: bool) -> np.ndarray:
        rel = self._leq if upper else self._leq.T
        n = len(self._elements)
        table = np.empty((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i, n):
                cands = np.flatnonzero(rel[i] & rel[j])
                least = [c for c in cands if rel[c, cands].all()]
                if not least:
                    kind = "join" if upper else "meet"
                    raise LatticeError(f"no {kind} for {self._elements[i]!r} and {self._elements[j]!r}")
                table[i, j] = table[j, i] = least[0]
        return table

    @property
    def elements(self) -> List[Hashable]:
        return list(self._elements)

    def __len__(self) -> int:
        return len(self._elements)

    def __contains__(self, x) -> bool:
        return x in self._index

    def contains(self, x) -> bool:
        return x in self._index

    def coerce(self, x):
        return self.parse_state(x)

    def leq(self, x, y) -> bool:
        return bool(self._leq[self._index[x], self._index[y]])

    def join(self, x, y):
        return self._elements[self._join[self._index[x], self._index[y]]]

    def meet(self, x, y):
        return self._elements[self._meet[self._index[x], self._index[y]]]

    def comparable_pair_count(self) -> int:
        return int(self._leq.sum())

    def comparable_pairs(self) -> Iterable[Tuple[Hashable, Hashable]]:
        for i, j in np.argwhere(self._leq):
            yield self._elements[i], self._elements[j]

    def default_point(self):
        return self.bottom

    def render(self, x):
        return x

    def parse_state(self, obj):
        if obj not in self._index:
            raise ValueError(f"{obj!r} is not a lattice element")
        return obj

    def describe(self) -> Dict[str, Any]:
        if self._covers:
            return {"kind": "lattice", "elements": list(self._elements),
                    "covers": [list(p) for p in self._covers]}
        return {"kind": "lattice", "elements": list(self._elements),
                "order": [list(p) for p in self.comparable_pairs()]}


class PowersetLattice(FiniteLattice):
    """All subsets of ``base`` ordered by inclusion; states are frozensets."""

    def __init__(self, base: Iterable[Hashable]):
        self.base = tuple(base)
        if len(set(self.base)) != len(self.base):
            raise LatticeError("duplicate base elements")
        self._base_set = frozenset(self.base)
        self.bottom = frozenset()
        self.top = frozenset(self.base)

    @property
    def elements(self) -> List[frozenset]:
        # ordered by bitmask over ``base``
        return [frozenset(b for i, b in enumerate(self.base) if mask >> i & 1)
                for mask in range(1 << len(self.base))]

    def __len__(self) -> int:
        return 1 << len(self.base)

    def contains(self, x) -> bool:
        return isinstance(x, frozenset) and x <= self._base_set

    __contains__ = contains

    def coerce(self, x):
        x = frozenset(x)
        if not x <= self._base_set:
            raise SpaceMismatch(f"{set(x - self._base_set)} not in base set")
        return x

    def leq(self, x, y) -> bool:
        return x <= y

    def join(self, x, y):
        return x | y

    def meet(self, x, y):
        return x & y

    def distance(self, x, y) -> float:
        return float(len(x ^ y))

    def comparable_pair_count(self) -> int:
        return 3 ** len(self.base)

    def comparable_pairs(self):
        elems = self.elements
        for x in elems:
            for y in elems:
                if x <= y:
                    yield x, y

    def render(self, x):
        order = {b: i for i, b in enumerate(self.base)}
        return sorted(x, key=order.__getitem__)

    def parse_state(self, obj):
        return self.coerce(obj)

    def describe(self) -> Dict[str, Any]:
        return {"kind": "powerset", "base": list(self.base)}


# -- metric spaces ------------------------------------------------------------


_DISTANCES: Dict[str, Callable[[np.ndarray], float]] = {
    "euclidean": lambda v: float(np.sqrt(np.dot(v, v))),
    "max": lambda v: float(np.max(np.abs(v))) if v.size else 0.0,
}


class MetricSpace(Space):
    """Real vectors of dimension ``dim`` with a named distance."""

    check_mode = TOLERANT

    def __init__(self, dim: int = 1, distance: str = "euclidean", tolerance: float = DEFAULT_TOLERANCE,
                 sample_radius: float = 100.0):
        if dim < 1:
            raise ValueError("dim must be positive")
        if distance not in _DISTANCES:
            raise ValueError(f"unknown distance {distance!r}; expected one of {sorted(_DISTANCES)}")
        if not tolerance > 0:
            raise ValueError("tolerance must be positive")
        self.dim = int(dim)
        self.metric = distance
        self.tolerance = float(tolerance)
        self.sample_radius = float(sample_radius)
        self._norm = _DISTANCES[distance]

    def coerce(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float).reshape(-1)
        if arr.shape != (self.dim,):
            raise SpaceMismatch(f"expected a point of dimension {self.dim}, got shape {np.shape(x)}")
        return arr

    def distance(self, x, y) -> float:
        return self._norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def equal(self, x, y) -> bool:
        return self.distance(x, y) <= self.tolerance

    def contains(self, x) -> bool:
        return bool(np.all(np.isfinite(x)))

    def default_point(self) -> np.ndarray:
        return np.zeros(self.dim)

    def random_points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-self.sample_radius, self.sample_radius, size=(n, self.dim))

    def render(self, x):
        return [render_float(v) for v in np.asarray(x, dtype=float).reshape(-1)]

    def parse_state(self, obj):
        return self.coerce([float(v) for v in obj])

    def describe(self) -> Dict[str, Any]:
        return {"kind": "metric", "dim": self.dim, "distance": self.metric,
                "tolerance": render_float(self.tolerance)}


# -- ordinal chain ------------------------------------------------------------


class OrdinalChain(Space):
    """The ordinals ``alpha <= bound`` in their natural order.

    Limits are suprema. From finitely many samples the supremum is recognised
    in two cases: the samples agree, or each sampled state equals its own stage
    (the run tracks the fundamental sequence, so its supremum is the stage).
    """

    def __init__(self, bound):
        self.bound = as_ordinal(bound)

    def contains(self, x) -> bool:
        return isinstance(x, Ordinal) and x <= self.bound

    def coerce(self, x):
        x = as_ordinal(x)
        if x > self.bound:
            raise SpaceMismatch(f"{x} exceeds chain bound {self.bound}")
        return x

    def leq(self, x, y) -> bool:
        return x <= y

    def default_point(self):
        return as_ordinal(0)

    def limit(self, stage, samples):
        agreed = super().limit(stage, samples)
        if agreed is not None:
            return agreed
        if all(s == st for st, s in samples) and stage <= self.bound:
            return stage
        return None

    def probe_points(self) -> List[Ordinal]:
        """A finite, ordered probe set used for sampled monotonicity checks."""
        points = {as_ordinal(n) for n in range(9)} | {self.bound}
        for base in [self.bound] + ([fundamental_seq(self.bound, n) for n in range(1, 4)]
                                    if self.bound.is_limit() else []):
            lim = base.limit_part
            points.add(lim)
            if lim.is_limit():
                points.update(fundamental_seq(lim, n) for n in range(6))
            points.update(lim.plus_nat(k) for k in range(4) if lim.plus_nat(k) <= self.bound)
        return sorted(p for p in points if p <= self.bound)

    def render(self, x):
        return str(x)

    def parse_state(self, obj):
        return self.coerce(parse_ordinal(obj))

    def describe(self) -> Dict[str, Any]:
        return {"kind": "ordinal-chain", "bound": str(self.bound)}


def space_from_dict(d: Dict[str, Any]) -> Space:
    """Inverse of :meth:`Space.describe`; also the scenario-file space syntax."""
    kind = d.get("kind")
    if kind == "powerset":
        return PowersetLattice(d["base"])
    if kind == "lattice":
        return FiniteLattice(d["elements"], covers=[tuple(p) for p in d.get("covers", ())],
                             order=[tuple(p) for p in d["order"]] if "order" in d else None)
    if kind == "metric":
        return MetricSpace(dim=int(d.get("dim", 1)), distance=d.get("distance", "euclidean"),
                           tolerance=float(d.get("tolerance", DEFAULT_TOLERANCE)),
                           sample_radius=float(d.get("sample_radius", 100.0)))
    if kind == "ordinal-chain":
        return OrdinalChain(d["bound"])
    raise ValueError(f"unknown space kind {kind!r}")


# -- operators ----------------------------------------------------------------

MONOTONE = "monotone"
CONTRACTION = "contraction"
GENERAL = "general"
KINDS = (MONOTONE, CONTRACTION, GENERAL)


class Operator:
    """A self-map on a space with a declared kind.

    ``kind`` is ``"monotone"`` (lattices and chains), ``"contraction"``
    (metric spaces, with ``factor`` in (0, 1)) or ``"general"`` for maps that
    declare no structure; general maps can still be iterated but certificates
    carry no guarantee.
    """

    def __init__(self, space: Space, fn: Callable[[Any], Any], kind: str = GENERAL,
                 factor: Optional[float] = None, name: str = "", params: Optional[Dict[str, Any]] = None):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        if kind == CONTRACTION:
            if factor is None or not 0.0 < factor < 1.0:
                raise BadFactor(f"contraction factor must lie in (0, 1), got {factor!r}")
            if not isinstance(space, MetricSpace):
                raise SpaceMismatch("contractions live on metric spaces")
        if kind == MONOTONE and not isinstance(space, (FiniteLattice, OrdinalChain)):
            raise SpaceMismatch("monotone operators live on lattices or ordinal chains")
        self.space = space
        self.fn = fn
        self.kind = kind
        self.factor = factor
        self.name = name or getattr(fn, "__name__", "op")
        self.params = params or {}
        self._passed_checks: set = set()

    def __call__(self, x):
        return self.fn(x)

    def __repr__(self) -> str:
        extra = f", factor={self.factor}" if self.factor is not None else ""
        return f"Operator({self.name!r}, kind={self.kind!r}{extra})"


@dataclass
class CheckResult:
    """Outcome of an operator check; truthy iff it passed."""

    passed: bool
    witness: Optional[Tuple[Any, Any]] = None
    ratio: Optional[float] = None
    sampled: bool = False
    pairs_checked: int = 0

    def __bool__(self) -> bool:
        return self.passed


def check_monotone(op: Operator, lat: Space) -> CheckResult:
    """Exhaustively test ``x <= y  =>  op(x) <= op(y)`` on a finite lattice.

    On an :class:`OrdinalChain` the test runs over :meth:`OrdinalChain.probe_points`
    and the result is marked as sampled.
    """
    if op.space is not lat:
        raise SpaceMismatch("operator is not defined on this lattice")
    if isinstance(lat, OrdinalChain):
        probes = lat.probe_points()
        images = [op(p) for p in probes]
        count = 0
        for (i, x), (j, y) in combinations(enumerate(probes), 2):
            count += 1
            if not images[i] <= images[j]:
                return CheckResult(False, witness=(x, y), sampled=True, pairs_checked=count)
        return CheckResult(True, sampled=True, pairs_checked=count)
    if not isinstance(lat, FiniteLattice):
        raise SpaceMismatch("monotonicity is checked on lattices")
    total = lat.comparable_pair_count()
    if total > MAX_MONOTONE_PAIRS:
        raise TooLarge(f"{total} comparable pairs exceeds the exhaustive limit {MAX_MONOTONE_PAIRS}")
    images = {x: op(x) for x in lat.elements}
    count = 0
    for x, y in lat.comparable_pairs():
        count += 1
        if not lat.leq(images[x], images[y]):
            return CheckResult(False, witness=(x, y), pairs_checked=count)
    return CheckResult(True, pairs_checked=count)


def check_contraction(op: Operator, m: MetricSpace, sample_count: int = 1000, seed: int = 0) -> CheckResult:
    """Sample point pairs and test ``d(f x, f y) <= c d(x, y) + tolerance``.

    A violation reports the sampled pair with the largest distance ratio.
    Deterministic for a fixed ``seed``.
    """
    if op.space is not m or not isinstance(m, MetricSpace):
        raise SpaceMismatch("operator is not defined on this metric space")
    c = op.factor
    if c is None or not 0.0 < c < 1.0:
        raise BadFactor(f"contraction factor must lie in (0, 1), got {c!r}")
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)
    xs = m.random_points(rng, sample_count)
    ys = m.random_points(rng, sample_count)
    worst = None
    for x, y in zip(xs, ys):
        d = m.distance(x, y)
        if d == 0.0:
            continue
        dfx = m.distance(op(x), op(y))
        if not dfx <= c * d + m.tolerance:
            ratio = dfx / d
            if worst is None or ratio > worst[0] or math.isnan(ratio):
                worst = (ratio, (x, y))
    if worst is not None:
        return CheckResult(False, witness=worst[1], ratio=worst[0], sampled=True, pairs_checked=sample_count)
    return CheckResult(True, sampled=True, pairs_checked=sample_count)


def check_operator(op: Operator, sample_count: int = 1000, seed: int = 0) -> CheckResult:
    """Run the check matching the operator's declared kind (cached once passed)."""
    key = (sample_count, seed)
    if key in op._passed_checks:
        return CheckResult(True, sampled=op.kind == CONTRACTION or isinstance(op.space, OrdinalChain))
    if op.kind == MONOTONE:
        result = check_monotone(op, op.space)
    elif op.kind == CONTRACTION:
        result = check_contraction(op, op.space, sample_count, seed)
    else:
        result = CheckResult(True)
    if result:
        op._passed_checks.add(key)
    return result


# -- discrepancy --------------------------------------------------------------


@dataclass(frozen=True)
class DiscrepancyMeasure:
    """Non-negative disagreement measure ``fn(before, after, signal)``.

    ``before`` is the state entering a round, ``after`` the state it produces
    and ``signal`` the round's external input (None outside games).
    """

    name: str
    fn: Callable[[Any, Any, Any], float] = field(compare=False)

    def __call__(self, before, after, signal=None) -> float:
        value = float(self.fn(before, after, signal))
        if not value >= 0.0:
            raise ValueError(f"discrepancy {self.name!r} returned {value}")
        return value


def builtin_measure(name: str, space: Space) -> DiscrepancyMeasure:
    if name == "residual":
        return DiscrepancyMeasure(name, lambda b, a, s: space.distance(b, a))
    if name == "distance-to-signal":
        return DiscrepancyMeasure(name, lambda b, a, s: space.distance(a, s))
    if name == "symmetric-difference":
        return DiscrepancyMeasure(name, lambda b, a, s: float(len(frozenset(a) ^ frozenset(s))))
    raise ValueError(f"unknown discrepancy measure {name!r}")


MEASURES = ("residual", "distance-to-signal", "symmetric-difference")
