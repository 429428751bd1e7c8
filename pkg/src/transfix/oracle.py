"""Brute-force ground truth for small instances.

Nothing here reuses the engine's iteration code: fixed points are found by
scanning every element, and reachability uses its own Kleene loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, List, Sequence, Tuple

from .errors import NoFixpoint, TooLarge, UnknownLabel
from .space import FiniteLattice, Operator, PowersetLattice

MAX_CARRIER = 2**16
MAX_CROSSCHECK_STATES = 12


def _carrier(op: Operator, carrier) -> list:
    if isinstance(carrier, FiniteLattice):
        size = len(carrier)
        if size > MAX_CARRIER:
            raise TooLarge(f"carrier has {size} elements; the oracle scans at most {MAX_CARRIER}")
        return carrier.elements
    points = list(carrier)
    if len(points) > MAX_CARRIER:
        raise TooLarge(f"carrier has {len(points)} points; the oracle scans at most {MAX_CARRIER}")
    return [op.space.coerce(p) for p in points]


def enumerate_fixpoints(op: Operator, carrier) -> list:
    """Every carrier element ``x`` with ``op(x) = x``, in carrier order.

    ``carrier`` is a finite lattice (exact equality) or a finite collection of
    points of ``op``'s metric space (equality within its tolerance).
    """
    elems = _carrier(op, carrier)
    if isinstance(carrier, FiniteLattice):
        return [x for x in elems if op(x) == x]
    space = op.space
    return [x for x in elems if space.equal(op(x), x)]


def lfp_bruteforce(op: Operator, lat: FiniteLattice):
    """The fixed point below every other fixed point."""
    fps = enumerate_fixpoints(op, lat)
    for x in fps:
        if all(lat.leq(x, y) for y in fps):
            return x
    raise NoFixpoint("no least fixed point; the operator cannot be monotone")


def gfp_bruteforce(op: Operator, lat: FiniteLattice):
    """The fixed point above every other fixed point."""
    fps = enumerate_fixpoints(op, lat)
    for x in fps:
        if all(lat.leq(y, x) for y in fps):
            return x
    raise NoFixpoint("no greatest fixed point; the operator cannot be monotone")


@dataclass
class TransitionSystem:
    states: Sequence[Hashable]
    transitions: Sequence[Tuple[Hashable, Hashable]]
    labels: Dict[str, FrozenSet[Hashable]] = field(default_factory=dict)

    def __post_init__(self):
        self.states = tuple(self.states)
        known = set(self.states)
        if len(known) != len(self.states):
            raise ValueError("duplicate states")
        self.transitions = [tuple(t) for t in self.transitions]
        for src, dst in self.transitions:
            if src not in known or dst not in known:
                raise ValueError(f"transition ({src!r}, {dst!r}) references an unknown state")
        self.labels = {k: frozenset(v) for k, v in self.labels.items()}
        for name, members in self.labels.items():
            if not members <= known:
                raise ValueError(f"label {name!r} names unknown states {sorted(map(str, members - known))}")

    def predecessors(self, targets: FrozenSet[Hashable]) -> FrozenSet[Hashable]:
        return frozenset(src for src, dst in self.transitions if dst in targets)


def mu_reachability(ts: TransitionSystem, target: str) -> FrozenSet[Hashable]:
    """Least fixed point of ``X -> target | pre(X)``: states that can reach ``target``.

    Computed by Kleene iteration from the empty set and, for at most 12
    states, cross-checked against :func:`lfp_bruteforce` on the powerset.
    """
    if target not in ts.labels:
        raise UnknownLabel(target)
    goal = ts.labels[target]
    current: FrozenSet[Hashable] = frozenset()
    while True:
        nxt = goal | ts.predecessors(current)
        if nxt == current:
            break
        current = nxt
    if len(ts.states) <= MAX_CROSSCHECK_STATES:
        lat = PowersetLattice(ts.states)
        op = Operator(lat, lambda X: goal | ts.predecessors(X), kind="monotone")
        brute = lfp_bruteforce(op, lat)
        if brute != current:
            raise AssertionError(f"Kleene result {sorted(map(str, current))} disagrees with "
                                 f"brute force {sorted(map(str, brute))}")
    return current


def grid(lo: float, hi: float, step: float) -> List[float]:
    """Evenly spaced 1-D carrier ``lo, lo + step, ..., hi`` for discretised metric checks."""
    count = int(round((hi - lo) / step))
    return [lo + i * step for i in range(count + 1)]
