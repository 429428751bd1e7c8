"""Builtin operator families.

Scenario files may only name these; Python callers can also wrap arbitrary
callables in :class:`~transfix.space.Operator` directly.
"""

from __future__ import annotations

from typing import Any, Dict, Hashable, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import SpaceMismatch
from .ordinal import as_ordinal
from .space import (CONTRACTION, GENERAL, MONOTONE, FiniteLattice, MetricSpace, Operator,
                    OrdinalChain, PowersetLattice)


def _matrix(A, dim: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A * np.eye(dim)
    if A.shape != (dim, dim):
        raise SpaceMismatch(f"matrix of shape {A.shape} does not act on dimension {dim}")
    return A


def _vector(b, dim: int) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim == 0:
        b = np.full(dim, float(b))
    if b.shape != (dim,):
        raise SpaceMismatch(f"vector of shape {b.shape} does not live in dimension {dim}")
    return b


def operator_norm(A: np.ndarray, distance: str) -> float:
    """Lipschitz constant of ``x -> A x`` for the space's distance."""
    return float(np.linalg.norm(A, 2 if distance == "euclidean" else np.inf))


# a map with norm 0 (constant map) is still declared with a positive factor
MIN_FACTOR = 1e-6


def contraction_factor(norm: float) -> float:
    return max(norm, MIN_FACTOR)


def affine(space: MetricSpace, A, b, kind: Optional[str] = None, factor: Optional[float] = None,
           name: str = "affine") -> Operator:
    """``x -> A x + b``; a contraction when the operator norm of ``A`` is below one.

    With ``kind=None`` the kind is inferred: contraction (with the exact norm
    as factor) if that norm is below one, general otherwise.
    """
    A = _matrix(A, space.dim)
    b = _vector(b, space.dim)
    norm = operator_norm(A, space.metric)
    if kind is None:
        kind = CONTRACTION if norm < 1.0 else GENERAL
    if kind == CONTRACTION and factor is None:
        factor = contraction_factor(norm)
    return Operator(space, lambda x: A @ x + b, kind=kind, factor=factor, name=name,
                    params={"family": "affine", "A": A.tolist(), "b": b.tolist()})


def _subset(space: PowersetLattice, items: Iterable[Hashable]) -> frozenset:
    if not isinstance(space, PowersetLattice):
        raise SpaceMismatch("set families need a powerset lattice")
    return space.coerce(items)


def union_with(space: PowersetLattice, items, name: str = "union") -> Operator:
    S = _subset(space, items)
    return Operator(space, lambda X: X | S, kind=MONOTONE, name=name,
                    params={"family": "union", "set": space.render(S)})


def intersect_with(space: PowersetLattice, items, name: str = "intersection") -> Operator:
    S = _subset(space, items)
    return Operator(space, lambda X: X & S, kind=MONOTONE, name=name,
                    params={"family": "intersection", "set": space.render(S)})


def complement(space: PowersetLattice, kind: str = GENERAL, name: str = "complement") -> Operator:
    top = _subset(space, space.base)
    return Operator(space, lambda X: top - X, kind=kind, name=name, params={"family": "complement"})


def constant(space, value, kind: Optional[str] = None, name: str = "constant") -> Operator:
    value = space.coerce(value)
    if kind is None:
        kind = MONOTONE if isinstance(space, (FiniteLattice, OrdinalChain)) else GENERAL
    if isinstance(space, MetricSpace):
        return Operator(space, lambda x: value.copy(), kind=kind, name=name,
                        params={"family": "constant", "value": value.tolist()})
    return Operator(space, lambda x: value, kind=kind, name=name,
                    params={"family": "constant", "value": space.render(value)})


def identity(space, kind: Optional[str] = None, name: str = "identity") -> Operator:
    if kind is None:
        kind = MONOTONE if isinstance(space, (FiniteLattice, OrdinalChain)) else GENERAL
    return Operator(space, lambda x: x, kind=kind, name=name, params={"family": "identity"})


def _relation(space: PowersetLattice, relation) -> Dict[Hashable, frozenset]:
    succ: Dict[Hashable, set] = {b: set() for b in space.base}
    for src, dst in relation:
        if src not in succ or dst not in succ:
            raise SpaceMismatch(f"edge ({src!r}, {dst!r}) leaves the base set")
        succ[src].add(dst)
    return {k: frozenset(v) for k, v in succ.items()}


def image(space: PowersetLattice, relation: Sequence[Tuple[Hashable, Hashable]], seed=(),
          name: str = "image") -> Operator:
    """``X -> seed | R[X]``, the one-step successors of ``X`` plus a seed set."""
    succ = _relation(space, relation)
    S = _subset(space, seed)

    def fn(X):
        out = set(S)
        for x in X:
            out |= succ[x]
        return frozenset(out)

    return Operator(space, fn, kind=MONOTONE, name=name,
                    params={"family": "image", "relation": [list(e) for e in relation],
                            "seed": space.render(S)})


def preimage(space: PowersetLattice, relation: Sequence[Tuple[Hashable, Hashable]], target=(),
             name: str = "preimage") -> Operator:
    """``X -> target | pre_R(X)``, whose least fixed point is backward reachability."""
    succ = _relation(space, relation)
    T = _subset(space, target)

    def fn(X):
        return T | frozenset(s for s, out in succ.items() if out & X)

    return Operator(space, fn, kind=MONOTONE, name=name,
                    params={"family": "preimage", "relation": [list(e) for e in relation],
                            "target": space.render(T)})


def horn(space: PowersetLattice, rules: Sequence[Tuple[Iterable[Hashable], Hashable]],
         within=None, name: str = "horn") -> Operator:
    """``X -> {c : (P, c) a rule with P subset of X}``, optionally intersected with ``within``.

    Every such map is monotone; random rule sets give random monotone operators.
    """
    parsed = [(_subset(space, premises), _subset(space, [concl])) for premises, concl in rules]
    W = _subset(space, space.base if within is None else within)

    def fn(X):
        out = frozenset()
        for premises, concl in parsed:
            if premises <= X:
                out |= concl
        return out & W

    return Operator(space, fn, kind=MONOTONE, name=name,
                    params={"family": "horn",
                            "rules": [[space.render(p), next(iter(c))] for p, c in parsed],
                            "within": space.render(W)})


def table(space: FiniteLattice, mapping: Mapping[Hashable, Hashable], kind: str = MONOTONE,
          name: str = "table") -> Operator:
    """An explicit element-to-element map on a finite lattice."""
    missing = [e for e in space.elements if e not in mapping]
    if missing:
        raise SpaceMismatch(f"table map is not total; missing {missing!r}")
    lookup = {k: space.parse_state(v) for k, v in mapping.items()}
    return Operator(space, lookup.__getitem__, kind=kind, name=name,
                    params={"family": "table", "map": {str(k): v for k, v in lookup.items()}})


def clamp_successor(space: OrdinalChain, name: str = "clamp-successor") -> Operator:
    """``alpha -> min(alpha + 1, bound)`` on an ordinal chain."""
    bound = space.bound

    def fn(a):
        nxt = a.plus_nat(1)
        return nxt if nxt <= bound else bound

    return Operator(space, fn, kind=MONOTONE, name=name, params={"family": "clamp-successor"})


FAMILIES = ("affine", "union", "intersection", "complement", "constant", "identity", "image",
            "preimage", "horn", "table", "clamp-successor")


def build_operator(space, decl: Dict[str, Any], name: str = "") -> Operator:
    """Construct a builtin-family operator from its declaration mapping."""
    family = decl["family"]
    kind = decl.get("kind")
    factor = decl.get("factor")
    if family == "affine":
        op = affine(space, decl["A"], decl.get("b", 0.0), kind=kind,
                    factor=None if factor is None else float(factor), name=name)
    elif family == "union":
        op = union_with(space, decl["set"], name=name)
    elif family == "intersection":
        op = intersect_with(space, decl["set"], name=name)
    elif family == "complement":
        op = complement(space, kind=kind or GENERAL, name=name)
    elif family == "constant":
        op = constant(space, _state_arg(space, decl["value"]), kind=kind, name=name)
    elif family == "identity":
        op = identity(space, kind=kind, name=name)
    elif family == "image":
        op = image(space, decl["relation"], decl.get("seed", ()), name=name)
    elif family == "preimage":
        op = preimage(space, decl["relation"], decl.get("target", ()), name=name)
    elif family == "horn":
        op = horn(space, decl["rules"], decl.get("within"), name=name)
    elif family == "table":
        op = table(space, decl["map"], kind=kind or MONOTONE, name=name)
    elif family == "clamp-successor":
        op = clamp_successor(space, name=name)
    else:
        raise ValueError(f"unknown operator family {family!r}")
    if kind is not None and op.kind != kind:
        raise ValueError(f"family {family!r} cannot declare kind {kind!r}")
    return op


def _state_arg(space, value):
    if isinstance(space, OrdinalChain):
        return as_ordinal(value)
    return value
