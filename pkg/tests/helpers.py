"""Random instance generators shared by the property tests and the acceptance suite."""

from __future__ import annotations

import random
from typing import List

import numpy as np
from hypothesis import strategies as st

from transfix.families import horn, intersect_with, union_with
from transfix.ordinal import ZERO, Ordinal
from transfix.space import PowersetLattice


def random_ordinal(rng: random.Random, depth: int = 2, max_terms: int = 3, max_coeff: int = 4) -> Ordinal:
    """A random ordinal whose exponent towers are at most ``depth`` levels high."""
    if depth == 0 or rng.random() < 0.25:
        return Ordinal.from_int(rng.randint(0, max_coeff * 3))
    exps = {random_ordinal(rng, depth - 1, max_terms, max_coeff) for _ in range(rng.randint(1, max_terms))}
    terms = tuple((e, rng.randint(1, max_coeff)) for e in sorted(exps, reverse=True))
    return Ordinal(terms)


def random_limit(rng: random.Random, depth: int = 2) -> Ordinal:
    while True:
        a = random_ordinal(rng, depth)
        if a.is_limit():
            return a


@st.composite
def ordinals(draw, depth: int = 2) -> Ordinal:
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return random_ordinal(random.Random(seed), depth)


@st.composite
def limit_ordinals(draw, depth: int = 2) -> Ordinal:
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return random_limit(random.Random(seed), depth)


def finite_exponent_coeffs(a: Ordinal) -> dict:
    """``{k: c}`` for an ordinal below ``w^w``; the input to the independent model below."""
    out = {}
    for exp, coeff in a.terms:
        assert exp.is_finite()
        out[int(exp)] = coeff
    return out


def model_compare(a: dict, b: dict) -> int:
    """Order of ordinals below ``w^w`` given as exponent->coefficient maps."""
    for k in sorted(set(a) | set(b), reverse=True):
        if a.get(k, 0) != b.get(k, 0):
            return -1 if a.get(k, 0) < b.get(k, 0) else 1
    return 0


def model_add(a: dict, b: dict) -> dict:
    """Ordinal sum on the ``w^w`` fragment: ``b``'s leading term absorbs everything of ``a`` below it."""
    if not b:
        return dict(a)
    lead = max(b)
    out = {k: c for k, c in a.items() if k > lead}
    out[lead] = a.get(lead, 0) + b[lead]
    out.update({k: c for k, c in b.items() if k < lead})
    return out


def random_monotone_op(rng: random.Random, lat: PowersetLattice):
    """A random monotone set map: a Horn rule set, a union or an intersection."""
    base = list(lat.base)
    pick = rng.random()
    if pick < 0.2:
        return union_with(lat, rng.sample(base, rng.randint(0, len(base))))
    if pick < 0.4:
        return intersect_with(lat, rng.sample(base, rng.randint(0, len(base))))
    rules = []
    for _ in range(rng.randint(1, 2 * len(base))):
        premises = rng.sample(base, rng.randint(0, min(3, len(base))))
        rules.append((premises, rng.choice(base)))
    within = rng.sample(base, rng.randint(1, len(base))) if rng.random() < 0.3 else None
    return horn(lat, rules, within)


def random_contraction(rng: np.random.Generator, n: int, max_norm: float = 0.9):
    """``(A, b)`` with spectral norm of ``A`` equal to a random value in ``[0.1, max_norm]``."""
    A = rng.normal(size=(n, n))
    A *= rng.uniform(0.1, max_norm) / np.linalg.norm(A, 2)
    b = rng.normal(scale=5.0, size=n)
    return A, b


def subsets(base: List[str]):
    return [frozenset(x for i, x in enumerate(base) if mask >> i & 1) for mask in range(1 << len(base))]
