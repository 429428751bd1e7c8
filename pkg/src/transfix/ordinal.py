"""Ordinals below epsilon-zero in Cantor normal form.

An :class:`Ordinal` is an immutable, hashable sum ``w^e1*c1 + ... + w^ek*ck``
with strictly decreasing exponents (themselves ordinals) and positive integer
coefficients. The module provides comparison, addition, multiplication by a
natural, the zero/successor/limit split, canonical fundamental sequences and a
text syntax (``w^w + w^2*3 + 5``) whose parser and printer round-trip.
"""

from __future__ import annotations

import enum
from typing import Iterator, NamedTuple, Optional, Tuple, Union

from .errors import NotALimit, OrdinalParseError

__all__ = [
    "Ordinal",
    "Kind",
    "Classification",
    "ZERO",
    "ONE",
    "OMEGA",
    "compare",
    "add",
    "nat_scale",
    "classify",
    "fundamental_seq",
    "parse_ordinal",
    "as_ordinal",
]

Term = Tuple["Ordinal", int]
OrdinalLike = Union["Ordinal", int, str]


class Ordinal:
    """An ordinal below epsilon-zero.

    Build values with :meth:`from_int`, :meth:`omega_power`, :func:`parse_ordinal`
    or arithmetic on the module constants; the raw constructor validates the
    term list and is mostly useful internally.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Tuple[Term, ...] = (), *, _trusted: bool = False):
        terms = tuple(terms)
        if not _trusted:
            for i, (exp, coeff) in enumerate(terms):
                if not isinstance(exp, Ordinal):
                    raise TypeError(f"exponent must be an Ordinal, got {type(exp).__name__}")
                if not isinstance(coeff, int) or isinstance(coeff, bool) or coeff < 1:
                    raise ValueError(f"coefficient must be a positive int, got {coeff!r}")
                if i and compare(terms[i - 1][0], exp) <= 0:
                    raise ValueError("exponents must be strictly decreasing")
        self._terms = terms
        self._hash = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_int(cls, n: int) -> "Ordinal":
        if n < 0:
            raise ValueError("ordinals are non-negative")
        if n == 0:
            return ZERO
        return cls(((ZERO, int(n)),), _trusted=True)

    @classmethod
    def omega_power(cls, exponent: OrdinalLike, coeff: int = 1) -> "Ordinal":
        """``w^exponent * coeff``."""
        if coeff < 0:
            raise ValueError("coefficient must be non-negative")
        if coeff == 0:
            return ZERO
        return cls(((as_ordinal(exponent), int(coeff)),), _trusted=True)

    # -- structure ----------------------------------------------------------

    @property
    def terms(self) -> Tuple[Term, ...]:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def is_finite(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and self._terms[0][0].is_zero())

    def is_successor(self) -> bool:
        return bool(self._terms) and self._terms[-1][0].is_zero()

    def is_limit(self) -> bool:
        return bool(self._terms) and not self._terms[-1][0].is_zero()

    @property
    def finite_part(self) -> int:
        """The trailing natural ``k`` in ``gamma + k`` with gamma zero or a limit."""
        if self.is_successor():
            return self._terms[-1][1]
        return 0

    @property
    def limit_part(self) -> "Ordinal":
        """``gamma`` in ``self = gamma + k``; zero or a limit ordinal."""
        if self.is_successor():
            return Ordinal(self._terms[:-1], _trusted=True)
        return self

    def leading_exponent(self) -> "Ordinal":
        return self._terms[0][0] if self._terms else ZERO

    def plus_nat(self, k: int) -> "Ordinal":
        """``self + k`` without going through general addition."""
        if k < 0:
            raise ValueError("k must be non-negative")
        if k == 0:
            return self
        if self.is_successor():
            return Ordinal(self._terms[:-1] + ((ZERO, self._terms[-1][1] + k),), _trusted=True)
        return Ordinal(self._terms + ((ZERO, k),), _trusted=True)

    def height(self) -> int:
        """Nesting depth of exponents; 0 for naturals."""
        if not self._terms or self.is_finite():
            return 0
        return 1 + max(exp.height() for exp, _ in self._terms)

    # -- python protocol ----------------------------------------------------

    def __int__(self) -> int:
        if not self.is_finite():
            raise ValueError(f"{self} is not finite")
        return self._terms[0][1] if self._terms else 0

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __hash__(self) -> int:
        if self._hash is None:
            # finite ordinals compare equal to ints, so hash like them
            self._hash = hash(int(self)) if self.is_finite() else hash(self._terms)
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int) and not isinstance(other, bool):
            return self.is_finite() and int(self) == other
        if not isinstance(other, Ordinal):
            return NotImplemented
        return self._terms == other._terms

    def __lt__(self, other: OrdinalLike) -> bool:
        return compare(self, as_ordinal(other)) < 0

    def __le__(self, other: OrdinalLike) -> bool:
        return compare(self, as_ordinal(other)) <= 0

    def __gt__(self, other: OrdinalLike) -> bool:
        return compare(self, as_ordinal(other)) > 0

    def __ge__(self, other: OrdinalLike) -> bool:
        return compare(self, as_ordinal(other)) >= 0

    def __add__(self, other: OrdinalLike) -> "Ordinal":
        return add(self, as_ordinal(other))

    def __radd__(self, other: int) -> "Ordinal":
        return add(as_ordinal(other), self)

    def __mul__(self, n: int) -> "Ordinal":
        if not isinstance(n, int):
            return NotImplemented
        return nat_scale(self, n)

    def __str__(self) -> str:
        return format_ordinal(self)

    def __repr__(self) -> str:
        return f"Ordinal('{self}')"

    def __reduce__(self):
        return (parse_ordinal, (str(self),))


ZERO = Ordinal((), _trusted=True)
ONE = Ordinal(((ZERO, 1),), _trusted=True)
OMEGA = Ordinal(((ONE, 1),), _trusted=True)


def as_ordinal(value: OrdinalLike) -> Ordinal:
    if isinstance(value, Ordinal):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not an ordinal")
    if isinstance(value, int):
        return Ordinal.from_int(value)
    if isinstance(value, str):
        return parse_ordinal(value)
    raise TypeError(f"cannot interpret {value!r} as an ordinal")


# -- arithmetic ---------------------------------------------------------------


def compare(a: Ordinal, b: Ordinal) -> int:
    """Three-way comparison: -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    if a is b:
        return 0
    for (ea, ca), (eb, cb) in zip(a._terms, b._terms):
        c = compare(ea, eb)
        if c:
            return c
        if ca != cb:
            return -1 if ca < cb else 1
    la, lb = len(a._terms), len(b._terms)
    return (la > lb) - (la < lb)


def add(a: Ordinal, b: Ordinal) -> Ordinal:
    """Ordinal sum ``a + b`` (not commutative: ``1 + w == w``)."""
    if b.is_zero():
        return a
    if a.is_zero():
        return b
    lead_exp, lead_coeff = b._terms[0]
    kept = []
    for exp, coeff in a._terms:
        c = compare(exp, lead_exp)
        if c > 0:
            kept.append((exp, coeff))
        elif c == 0:
            lead_coeff += coeff
            break
        else:
            break
    return Ordinal(tuple(kept) + ((lead_exp, lead_coeff),) + b._terms[1:], _trusted=True)


def nat_scale(a: Ordinal, n: int) -> Ordinal:
    """``a * n`` for a natural ``n``; only the leading coefficient scales."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0 or a.is_zero():
        return ZERO
    (exp, coeff), rest = a._terms[0], a._terms[1:]
    return Ordinal(((exp, coeff * n),) + rest, _trusted=True)


class Kind(enum.Enum):
    ZERO = "zero"
    SUCCESSOR = "successor"
    LIMIT = "limit"


class Classification(NamedTuple):
    kind: Kind
    pred: Optional[Ordinal] = None


def classify(a: Ordinal) -> Classification:
    if a.is_zero():
        return Classification(Kind.ZERO)
    if a.is_successor():
        *head, (_, k) = a._terms
        tail = ((ZERO, k - 1),) if k > 1 else ()
        return Classification(Kind.SUCCESSOR, Ordinal(tuple(head) + tail, _trusted=True))
    return Classification(Kind.LIMIT)


def fundamental_seq(lam: Ordinal, n: int) -> Ordinal:
    """The ``n``-th element of the canonical sequence converging to the limit ``lam``.

    Split ``lam = gamma + w^b``. If ``b = p + 1`` the element is
    ``gamma + w^p * n``; if ``b`` is itself a limit it is ``gamma + w^(b[n])``.
    """
    if not lam.is_limit():
        raise NotALimit(f"{lam} is not a limit ordinal")
    if n < 0:
        raise ValueError("n must be non-negative")
    *head, (b, c) = lam._terms
    gamma = Ordinal(tuple(head) + (((b, c - 1),) if c > 1 else ()), _trusted=True)
    cls = classify(b)
    if cls.kind is Kind.SUCCESSOR:
        step = nat_scale(Ordinal.omega_power(cls.pred), n)
    else:
        step = Ordinal.omega_power(fundamental_seq(b, n))
    return add(gamma, step)


def descend(a: Ordinal, choose) -> Iterator[Ordinal]:
    """Yield a strictly decreasing chain from ``a`` to zero.

    ``choose(limit)`` picks the fundamental-sequence index used at each limit.
    """
    while not a.is_zero():
        cls = classify(a)
        a = cls.pred if cls.kind is Kind.SUCCESSOR else fundamental_seq(a, choose(a))
        yield a


# -- text syntax --------------------------------------------------------------


def format_ordinal(a: Ordinal) -> str:
    if a.is_zero():
        return "0"
    parts = []
    for exp, coeff in a._terms:
        if exp.is_zero():
            parts.append(str(coeff))
            continue
        if exp == ONE:
            base = "w"
        elif exp.is_finite() or exp == OMEGA:
            base = f"w^{exp}"
        else:
            base = f"w^({exp})"
        parts.append(base if coeff == 1 else f"{base}*{coeff}")
    return " + ".join(parts)


class _Parser:
    # sum  := term ('+' term)*
    # term := atom ('*' nat)*
    # atom := nat | ('w' | 'ω') ('^' atom)? | '(' sum ')'

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> OrdinalParseError:
        return OrdinalParseError(f"{msg} at column {self.pos + 1} in {self.text!r}", column=self.pos + 1)

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Ordinal:
        value = self.sum()
        if self.peek():
            raise self.error(f"unexpected {self.peek()!r}")
        return value

    def sum(self) -> Ordinal:
        value = self.term()
        while self.peek() == "+":
            self.pos += 1
            value = add(value, self.term())
        return value

    def term(self) -> Ordinal:
        value = self.atom()
        while self.peek() == "*":
            self.pos += 1
            value = nat_scale(value, self.nat())
        return value

    def nat(self) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise self.error("expected a natural number")
        return int(self.text[start:self.pos])

    def atom(self) -> Ordinal:
        ch = self.peek()
        if ch.isdigit():
            return Ordinal.from_int(self.nat())
        if ch in ("w", "ω"):
            self.pos += 1
            if self.peek() == "^":
                self.pos += 1
                return Ordinal.omega_power(self.atom())
            return OMEGA
        if ch == "(":
            self.pos += 1
            value = self.sum()
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.pos += 1
            return value
        raise self.error("expected an ordinal" if ch else "unexpected end of input")


def parse_ordinal(text: Union[str, int]) -> Ordinal:
    """Parse the text syntax; the result is always in normal form."""
    if isinstance(text, int) and not isinstance(text, bool):
        return Ordinal.from_int(text)
    if not isinstance(text, str):
        raise OrdinalParseError(f"expected ordinal text, got {type(text).__name__}")
    return _Parser(text).parse()
