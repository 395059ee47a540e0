"""Exact rational scalars and affine maps, with the two infinite sentinels."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

Scalar = Q
_RATIONAL = (Fraction, type(Q(0)))


def scalar(value):
    """Coerce ints, rationals and "p/q" strings to an exact scalar.

    Floats are refused on purpose: nothing in this package is allowed to
    round.
    """
    if type(value) is Q:
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (int,) + _RATIONAL):
        return Q(value)
    if isinstance(value, str):
        return Q(Fraction(value.strip()))
    raise TypeError(f"cannot make an exact scalar from {value!r}")


def format_scalar(x) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def point(values: Iterable) -> tuple:
    return tuple(scalar(v) for v in values)


class _Infinity:
    __slots__ = ("sign",)

    def __init__(self, sign: int):
        self.sign = sign

    def __repr__(self):
        return "+inf" if self.sign > 0 else "-inf"

    def __reduce__(self):
        return (_infinity, (self.sign,))

    def to_json(self) -> str:
        return repr(self)

    def __call__(self, x=()):
        return self


def _infinity(sign):
    return POS_INF if sign > 0 else NEG_INF


NEG_INF = _Infinity(-1)
POS_INF = _Infinity(+1)


@dataclass(frozen=True)
class AffineMap:
    """x -> coeffs . x + const, exact."""

    coeffs: tuple
    const: object = 0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(scalar(c) for c in self.coeffs))
        object.__setattr__(self, "const", scalar(self.const))

    @classmethod
    def constant(cls, value, arity: int = 0) -> AffineMap:
        return cls((0,) * arity, value)

    @classmethod
    def zero(cls, arity: int) -> AffineMap:
        return cls((0,) * arity, 0)

    @classmethod
    def coordinate(cls, i: int, arity: int) -> AffineMap:
        coeffs = [0] * arity
        coeffs[i] = 1
        return cls(tuple(coeffs), 0)

    @property
    def arity(self) -> int:
        return len(self.coeffs)

    def __call__(self, x: Sequence):
        if len(x) != len(self.coeffs):
            raise ValueError(f"arity mismatch: map has arity {self.arity}, point has {len(x)} coordinates")
        total = self.const
        for c, v in zip(self.coeffs, x):
            if c:
                total += c * v
        return total

    def __add__(self, other: AffineMap) -> AffineMap:
        if isinstance(other, (int,) + _RATIONAL):
            return AffineMap(self.coeffs, self.const + other)
        self._check(other)
        return AffineMap(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.const + other.const)

    def __sub__(self, other: AffineMap) -> AffineMap:
        if isinstance(other, (int,) + _RATIONAL):
            return AffineMap(self.coeffs, self.const - other)
        self._check(other)
        return AffineMap(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.const - other.const)

    def __neg__(self) -> AffineMap:
        return AffineMap(tuple(-a for a in self.coeffs), -self.const)

    def scale(self, k) -> AffineMap:
        k = scalar(k)
        return AffineMap(tuple(k * a for a in self.coeffs), k * self.const)

    def _check(self, other):
        if not isinstance(other, AffineMap):
            raise TypeError(f"expected AffineMap, got {type(other).__name__}")
        if other.arity != self.arity:
            raise ValueError(f"arity mismatch: {self.arity} vs {other.arity}")

    def is_zero(self) -> bool:
        return self.const == 0 and not any(self.coeffs)

    def is_constant(self) -> bool:
        return not any(self.coeffs)

    def pad(self, arity: int) -> AffineMap:
        """The same map viewed on R^arity, ignoring the extra trailing coordinates."""
        if arity < self.arity:
            raise ValueError("cannot pad to a smaller arity")
        return AffineMap(self.coeffs + (Q(0),) * (arity - self.arity), self.const)

    def compose(self, inner: Sequence[AffineMap]) -> AffineMap:
        """self o inner, where inner lists one affine map per input coordinate."""
        if len(inner) != self.arity:
            raise ValueError("composition arity mismatch")
        if not inner:
            return self
        out = AffineMap.constant(self.const, inner[0].arity)
        for c, m in zip(self.coeffs, inner):
            if c:
                out = out + m.scale(c)
        return out

    def to_json(self) -> dict:
        return {"coeffs": [format_scalar(c) for c in self.coeffs], "const": format_scalar(self.const)}

    @classmethod
    def from_json(cls, obj) -> AffineMap:
        return cls(tuple(scalar(c) for c in obj["coeffs"]), scalar(obj.get("const", 0)))

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{format_scalar(c)}*x{i + 1}")
        if self.const or not terms:
            terms.append(format_scalar(self.const))
        return " + ".join(terms)


ExtAffine = Union[AffineMap, _Infinity]


def is_infinite(f) -> bool:
    return isinstance(f, _Infinity)


def ext_to_json(f):
    return f.to_json()


def ext_from_json(obj):
    if obj == "-inf":
        return NEG_INF
    if obj == "+inf":
        return POS_INF
    return AffineMap.from_json(obj)


def evaluate(f: AffineMap, x: Sequence):
    return f(x)


def half_map(g: AffineMap) -> AffineMap:
    """g/2; lies between 0 and g wherever g is non-negative."""
    return g.scale(Q(1, 2))
