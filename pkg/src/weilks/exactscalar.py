"""Exact scalar arithmetic over Q and quadratic towers.

Values live in Q, Q(sqrt(D)) or a biquadratic tower Q(sqrt(D1), sqrt(D2));
coordinates are Fractions on the basis (1, sqrt(D1), sqrt(D2), sqrt(D1*D2)).
The complex embedding is fixed once: sqrt(D) is the positive real root for
D > 0, and i*sqrt(|D|) with positive imaginary part for D < 0.  Reports emit
this convention so every serialized value is unambiguous.

The module also provides the rational square-class and Hilbert-symbol
machinery that decides membership in norm groups of imaginary quadratic
fields.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from sympy import factorint, isprime

Rat = Fraction

SQRT_CONVENTION = "sqrt(D)>0 for D>0; sqrt(D)=+i*sqrt(|D|) for D<0"


class TowerError(ValueError):
    """Incompatible descriptors, too-deep towers, or invalid tower requests."""


def _as_rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def sqrt_decompose(n: int) -> tuple[int, int]:
    """Write n = g*g*r with r squarefree carrying the sign of n; return (g, r)."""
    if n == 0:
        return 0, 0
    g, r = 1, 1 if n > 0 else -1
    for p, e in factorint(abs(n)).items():
        g *= p ** (e // 2)
        if e % 2:
            r *= p
    return g, r


def squarefree_part(q) -> int:
    """Squarefree integer with the sign of q; q divided by it is a square."""
    q = _as_rat(q)
    if q == 0:
        raise ValueError("zero has no square class")
    return sqrt_decompose(q.numerator * q.denominator)[1]


@dataclass(frozen=True)
class SquareClass:
    """Class of a nonzero rational modulo nonzero rational squares."""

    representative: int

    @classmethod
    def of(cls, q) -> "SquareClass":
        return cls(squarefree_part(q))

    @property
    def is_trivial(self) -> bool:
        return self.representative == 1

    def __mul__(self, other: "SquareClass") -> "SquareClass":
        return SquareClass.of(Fraction(self.representative * other.representative))

    def __str__(self) -> str:
        return str(self.representative)


# -- tower descriptors -------------------------------------------------------

_DESC_KEY = lambda d: (abs(d), d)  # noqa: E731  - deterministic generator order


def _check_gen(d: int) -> None:
    if d in (0, 1) or squarefree_part(Fraction(d)) != d:
        raise TowerError(f"tower generator {d} must be squarefree and not 0 or 1")


def _support(gens: tuple[int, ...]) -> tuple[int, ...]:
    """All squarefree radicands representable in the tower, in slot order."""
    if len(gens) == 2:
        return (gens[0], gens[1], sqrt_decompose(gens[0] * gens[1])[1])
    return gens


def _slot3_factor(gens: tuple[int, int]) -> Fraction:
    """Convert the sqrt(D1)*sqrt(D2) slot to the canonical sqrt(sf(D1*D2)).

    Under the fixed embedding, sqrt(D1)*sqrt(D2) = s*g*sqrt(r) where
    D1*D2 = g*g*r with r squarefree and s = -1 exactly when both
    generators are negative (i*i = -1).
    """
    g, _ = sqrt_decompose(gens[0] * gens[1])
    s = -1 if (gens[0] < 0 and gens[1] < 0) else 1
    return Fraction(s * g)


def _canonical_pair(d1: int, d2: int) -> tuple[int, int]:
    """The canonical generating pair of Q(sqrt(d1), sqrt(d2)): the two smallest
    radicands of its support, so equal fields always share a descriptor."""
    sup = sorted({d1, d2, sqrt_decompose(d1 * d2)[1]}, key=_DESC_KEY)
    return (sup[0], sup[1])


def _join(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    need = sorted(set(_support(a)) | set(_support(b)), key=_DESC_KEY)
    if len(need) <= 1:
        return tuple(need)
    if len(need) == 2:
        return _canonical_pair(need[0], need[1])
    if len(need) == 3:
        d1, d2 = need[0], need[1]
        if set(need) == {d1, d2, sqrt_decompose(d1 * d2)[1]}:
            return (d1, d2)
    raise TowerError(f"radicands {need} need a tower deeper than two generators")


class TowerScalar:
    """Exact element of Q, Q(sqrt(D1)) or Q(sqrt(D1), sqrt(D2)).

    Stores four Fraction coordinates on (1, sqrt(D1), sqrt(D2), sqrt(D1*D2));
    unused slots are exact zero and the descriptor is always minimal for the
    element, so equal values compare equal across towers.
    """

    __slots__ = ("gens", "coords")

    def __init__(self, gens=(), coords=(Fraction(0),) * 4):
        gens = tuple(gens)
        for d in gens:
            _check_gen(d)
        if len(gens) == 2:
            if gens[0] == gens[1]:
                raise TowerError("tower generators must be distinct")
            if gens != _canonical_pair(*gens):
                raise TowerError(
                    f"descriptor {gens} is not canonical; use {_canonical_pair(*gens)}")
        c = tuple(_as_rat(x) for x in coords)
        if len(c) != 4:
            raise TowerError("expected 4 coordinates")
        # canonicalize: drop generators the element does not use
        if len(gens) == 2:
            used = (c[1] != 0, c[2] != 0, c[3] != 0)
            if sum(used) == 0:
                gens, c = (), (c[0], Fraction(0), Fraction(0), Fraction(0))
            elif sum(used) == 1:
                if used[0]:
                    gens, c = (gens[0],), (c[0], c[1], Fraction(0), Fraction(0))
                elif used[1]:
                    gens, c = (gens[1],), (c[0], c[2], Fraction(0), Fraction(0))
                else:
                    _, r = sqrt_decompose(gens[0] * gens[1])
                    f = _slot3_factor(gens)
                    gens, c = (r,), (c[0], c[3] * f, Fraction(0), Fraction(0))
        elif len(gens) == 1:
            if c[2] != 0 or c[3] != 0:
                raise TowerError("single-generator tower uses only two slots")
            if c[1] == 0:
                gens = ()
        else:
            if c[1] != 0 or c[2] != 0 or c[3] != 0:
                raise TowerError("rational value uses only the first slot")
        object.__setattr__(self, "gens", gens)
        object.__setattr__(self, "coords", c)

    # -- constructors --------------------------------------------------------

    @classmethod
    def rational(cls, q) -> "TowerScalar":
        return cls((), (_as_rat(q), Fraction(0), Fraction(0), Fraction(0)))

    @classmethod
    def sqrt(cls, q) -> "TowerScalar":
        """Exact square root of a rational under the fixed embedding."""
        q = _as_rat(q)
        if q == 0:
            return cls.rational(0)
        n = q.numerator * q.denominator
        g, r = sqrt_decompose(n)
        coeff = Fraction(g, q.denominator)
        if r == 1:
            return cls.rational(coeff)
        return cls((r,), (Fraction(0), coeff, Fraction(0), Fraction(0)))

    def __setattr__(self, name, value):
        raise AttributeError("TowerScalar is immutable")

    # -- embedding / coercion --------------------------------------------------

    def _embed(self, gens: tuple[int, ...]) -> tuple[Fraction, ...]:
        """Coordinates of self in the (larger) tower `gens`."""
        if self.gens == gens:
            return self.coords
        sup_new = _support(gens)
        out = [self.coords[0], Fraction(0), Fraction(0), Fraction(0)]
        for slot, r in enumerate(_support(self.gens), start=1):
            c = self.coords[slot]
            if c == 0:
                continue
            if len(self.gens) == 2 and slot == 3:
                c = c * _slot3_factor(self.gens)  # now a sqrt(r) coefficient
            j = sup_new.index(r) + 1
            if len(gens) == 2 and j == 3:
                c = c / _slot3_factor(gens)
            out[j] += c
        return tuple(out)

    @staticmethod
    def _coerce(x) -> "TowerScalar":
        if isinstance(x, TowerScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return TowerScalar.rational(x)
        return NotImplemented

    # -- ring operations -------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        gens = _join(self.gens, other.gens)
        a, b = self._embed(gens), other._embed(gens)
        return TowerScalar(gens, tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __neg__(self):
        return TowerScalar(self.gens, tuple(-x for x in self.coords))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.gens and not other.gens:
            return TowerScalar.rational(self.coords[0] * other.coords[0])
        gens = _join(self.gens, other.gens)
        c = self._embed(gens)
        d = other._embed(gens)
        if len(gens) == 1:
            d1 = gens[0]
            return TowerScalar(
                gens,
                (c[0] * d[0] + d1 * c[1] * d[1],
                 c[0] * d[1] + c[1] * d[0],
                 Fraction(0), Fraction(0)),
            )
        d1, d2 = gens
        e0 = c[0] * d[0] + d1 * c[1] * d[1] + d2 * c[2] * d[2] + d1 * d2 * c[3] * d[3]
        e1 = c[0] * d[1] + c[1] * d[0] + d2 * (c[2] * d[3] + c[3] * d[2])
        e2 = c[0] * d[2] + c[2] * d[0] + d1 * (c[1] * d[3] + c[3] * d[1])
        e3 = c[0] * d[3] + c[3] * d[0] + c[1] * d[2] + c[2] * d[1]
        return TowerScalar(gens, (e0, e1, e2, e3))

    __rmul__ = __mul__

    def inverse(self) -> "TowerScalar":
        if not self:
            raise ZeroDivisionError("inversion of zero tower scalar")
        if not self.gens:
            return TowerScalar.rational(1 / self.coords[0])
        if len(self.gens) == 1:
            a, b = self.coords[0], self.coords[1]
            n = a * a - self.gens[0] * b * b
            return TowerScalar(self.gens, (a / n, -b / n, Fraction(0), Fraction(0)))
        y = self * self.conj1()  # conj1-invariant, so canonical in Q(sqrt(D2)) or Q
        if y.is_rational:
            return self.conj1() * TowerScalar.rational(1 / y.as_fraction())
        ybar = y.conj1()
        n = (y * ybar).as_fraction()
        return self.conj1() * ybar * TowerScalar.rational(Fraction(1) / n)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = TowerScalar.rational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- conjugations ----------------------------------------------------------

    def conj1(self) -> "TowerScalar":
        """Automorphism flipping sqrt(D1) (and sqrt(D1*D2))."""
        c = self.coords
        return TowerScalar(self.gens, (c[0], -c[1], c[2], -c[3]))

    def conj2(self) -> "TowerScalar":
        """Automorphism flipping sqrt(D2) (and sqrt(D1*D2))."""
        if len(self.gens) < 2:
            return self
        c = self.coords
        return TowerScalar(self.gens, (c[0], c[1], -c[2], -c[3]))

    def conj_sqrt(self, d: int) -> "TowerScalar":
        """Conjugation of an element of Q(sqrt(d)) inside any tower.

        Requires the element to lie in Q(sqrt(d)); flips the sign of sqrt(d).
        """
        r = squarefree_part(Fraction(d))
        if not self.gens:
            return self
        if len(self.gens) == 1:
            if self.gens[0] != r:
                raise TowerError(f"element not in Q(sqrt({d}))")
            return self.conj1()
        raise TowerError(f"element not in Q(sqrt({d}))")

    # -- predicates / accessors -------------------------------------------------

    def __bool__(self) -> bool:
        return any(self.coords)

    @property
    def is_rational(self) -> bool:
        return not self.gens

    def as_fraction(self) -> Fraction:
        if self.gens:
            raise TowerError(f"{self} is not rational")
        return self.coords[0]

    def coefficient(self, radicand: int) -> Fraction:
        """Coefficient on sqrt(radicand) (squarefree); radicand 1 is the rational part."""
        if radicand == 1:
            return self.coords[0]
        sup = _support(self.gens)
        if radicand not in sup:
            return Fraction(0)
        slot = sup.index(radicand) + 1
        c = self.coords[slot]
        if len(self.gens) == 2 and slot == 3:
            c = c * _slot3_factor(self.gens)
        return c

    def real_sign(self) -> int:
        """Exact sign of a totally real value: -1, 0 or +1.

        Raises TowerError when a coordinate sits on an imaginary generator.
        Decided by recursive squaring-and-comparing, never approximately.
        """
        terms = [(r, self.coefficient(r)) for r in _support(self.gens)]
        for r, c in terms:
            if r < 0 and c != 0:
                raise TowerError(f"{self} has a component on imaginary sqrt({r})")
        active = sorted((t for t in terms if t[0] > 0 and t[1] != 0), key=_DESC_KEY)
        a0 = self.coords[0]
        if not active:
            return _sign(a0)
        if len(active) == 1:
            return _sign2(a0, active[0][1], active[0][0])
        # view as (a + b sqrt(p)) + (c + e sqrt(p)) sqrt(q) with p < q
        (p, b), (q, c) = active[0], active[1]
        e = Fraction(0)
        if len(active) == 3:
            rad_pq, c_pq = active[2]
            g, r = sqrt_decompose(p * q)
            if r != rad_pq:
                raise TowerError("inconsistent tower support")
            # c_pq * sqrt(r) = (c_pq / g) * sqrt(p) * sqrt(q)
            e = c_pq / g
        return _sign_pair((a0, b), (c, e), p, q)

    # -- hashing / comparison ----------------------------------------------------

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.gens == other.gens and self.coords == other.coords

    def __hash__(self):
        return hash((self.gens, self.coords))

    def __repr__(self) -> str:
        return f"TowerScalar({format_scalar(self)!r})"

    def __str__(self) -> str:
        return format_scalar(self)


def _sign(a: Fraction) -> int:
    return (a > 0) - (a < 0)


def _sign2(a: Fraction, b: Fraction, d: int) -> int:
    """Exact sign of a + b*sqrt(d) for squarefree d > 1."""
    if b == 0:
        return _sign(a)
    if a == 0:
        return _sign(b)
    sa, sb = _sign(a), _sign(b)
    if sa == sb:
        return sa
    return sa * _sign(a * a - b * b * d)


def _sign_pair(u, v, p, q) -> int:
    """Sign of u + v*sqrt(q) with u, v coordinate pairs over Q(sqrt(p))."""
    su = _sign2(u[0], u[1], p)
    sv = _sign2(v[0], v[1], p)
    if sv == 0:
        return su
    if su == 0:
        return sv
    if su == sv:
        return su
    # compare u^2 against q * v^2 inside Q(sqrt(p))
    u2 = (u[0] * u[0] + p * u[1] * u[1], 2 * u[0] * u[1])
    v2 = (v[0] * v[0] + p * v[1] * v[1], 2 * v[0] * v[1])
    w = (u2[0] - q * v2[0], u2[1] - q * v2[1])
    return su * _sign2(w[0], w[1], p)


def real_sign(x) -> int:
    """Module-level exact sign for totally real tower scalars and rationals."""
    if isinstance(x, (int, Fraction)):
        return _sign(_as_rat(x))
    return x.real_sign()


ZERO = TowerScalar.rational(0)
ONE = TowerScalar.rational(1)


# -- serialization -------------------------------------------------------------

_TERM_RE = re.compile(r"^(-?\d+(?:/\d+)?)(?:\*sqrt\((-?\d+)\))?$")


def _format_rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(x) -> str:
    """Decimal-free exact string, e.g. '1/2 + -3/4*sqrt(2)'.

    Radicands in the output are always squarefree, so strings round-trip
    bit-exactly through parse_scalar.
    """
    if isinstance(x, (int, Fraction)):
        return _format_rat(_as_rat(x))
    terms = []
    if x.coords[0] != 0:
        terms.append(_format_rat(x.coords[0]))
    for r in _support(x.gens):
        c = x.coefficient(r)
        if c != 0:
            terms.append(f"{_format_rat(c)}*sqrt({r})")
    return " + ".join(terms) if terms else "0"


def parse_scalar(s: str) -> TowerScalar:
    """Inverse of format_scalar; accepts non-squarefree radicands too."""
    out = TowerScalar.rational(0)
    for term in s.strip().split(" + "):
        m = _TERM_RE.match(term.strip())
        if not m:
            raise ValueError(f"cannot parse scalar term {term!r}")
        c = Fraction(m.group(1))
        if m.group(2) is None:
            out = out + TowerScalar.rational(c)
        else:
            rad = int(m.group(2))
            if rad == 0:
                raise ValueError("sqrt(0) is not a valid term")
            out = out + TowerScalar.rational(c) * TowerScalar.sqrt(rad)
    return out


# -- Hilbert symbols and norm classes -------------------------------------------

INF_PLACE = "inf"


def _legendre(u: int, p: int) -> int:
    t = pow(u % p, (p - 1) // 2, p)
    return 1 if t == 1 else -1


def hilbert_symbol(a, b, p=None) -> int:
    """Local Hilbert symbol (a, b)_p; p is a prime or None for the real place."""
    aq, bq = _as_rat(a), _as_rat(b)
    if aq == 0 or bq == 0:
        raise ValueError("Hilbert symbol needs nonzero arguments")
    sa, sb = squarefree_part(aq), squarefree_part(bq)
    if p is None or p == INF_PLACE:
        return -1 if (sa < 0 and sb < 0) else 1
    if not isinstance(p, int) or p < 2 or not isprime(p):
        raise ValueError(f"{p!r} is not a prime or the real place")
    alpha, u = (1, sa // p) if sa % p == 0 else (0, sa)
    beta, v = (1, sb // p) if sb % p == 0 else (0, sb)
    if p != 2:
        s = 1
        if alpha and beta and p % 4 == 3:
            s = -s
        if beta:
            s *= _legendre(u, p)
        if alpha:
            s *= _legendre(v, p)
        return s
    eps_u, eps_v = ((u - 1) // 2) % 2, ((v - 1) // 2) % 2
    omega_u, omega_v = ((u * u - 1) // 8) % 2, ((v * v - 1) // 8) % 2
    e = (eps_u * eps_v + alpha * omega_v + beta * omega_u) % 2
    return -1 if e else 1


def _odd_primes_of(n: int) -> set[int]:
    return {p for p in factorint(abs(n)) if p != 2}


def is_norm(a, d) -> tuple[bool, list[str]]:
    """Decide a in Nm(K*) for K = Q(sqrt(-d)), d > 0; also return obstructing places.

    Checks the Hilbert symbol (a, -d)_p at the real place, at 2 and at every
    odd prime dividing the square-free parts of a and d; by the product
    formula these are the only candidates.
    """
    aq, dq = _as_rat(a), _as_rat(d)
    if aq == 0:
        raise ValueError("norm test needs a nonzero argument")
    if dq <= 0:
        raise ValueError("d must be positive (imaginary quadratic field)")
    sa = squarefree_part(aq)
    sd = squarefree_part(-dq)
    places: list[object] = [None, 2]
    places += sorted(_odd_primes_of(sa) | _odd_primes_of(sd))
    obstructions = [
        (INF_PLACE if p is None else str(p))
        for p in places
        if hilbert_symbol(Fraction(sa), Fraction(sd), p) == -1
    ]
    return (not obstructions, obstructions)


def as_scalar(x) -> TowerScalar:
    """Coerce int, Fraction or TowerScalar to TowerScalar."""
    s = TowerScalar._coerce(x)
    if s is NotImplemented:
        raise TypeError(f"cannot treat {type(x).__name__} as an exact scalar")
    return s


def norm_class(a, d):
    """Reduce a modulo norms from Q(sqrt(-d)): +-1 when possible, else +-|sf(a)|."""
    aq = _as_rat(a)
    s = 1 if aq > 0 else -1
    ok, _ = is_norm(abs(aq), d)
    return s if ok else s * abs(squarefree_part(aq))
