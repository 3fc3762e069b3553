"""Exact complex scalars with rational real and imaginary parts.

Expression prefactors must never round, so everything here is built on
fractions.Fraction. Phases coming out of antisymmetry bookkeeping are plain
integers +-1 and multiply in exactly.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

RationalLike = Union[int, Fraction, "CRational"]


class CRational:
    """A complex number with Fraction real and imaginary parts. Immutable."""

    __slots__ = ("re", "im", "_hash")

    def __init__(self, re: int | Fraction = 0, im: int | Fraction = 0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))
        object.__setattr__(self, "_hash", hash((self.re, self.im)))

    def __setattr__(self, name, value):
        raise AttributeError("CRational is immutable")

    @staticmethod
    def coerce(value: RationalLike) -> "CRational":
        if isinstance(value, CRational):
            return value
        return CRational(value)

    def __add__(self, other: RationalLike) -> "CRational":
        o = CRational.coerce(other)
        return CRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other: RationalLike) -> "CRational":
        o = CRational.coerce(other)
        return CRational(self.re - o.re, self.im - o.im)

    def __mul__(self, other: RationalLike) -> "CRational":
        o = CRational.coerce(other)
        return CRational(self.re * o.re - self.im * o.im,
                         self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other: RationalLike) -> "CRational":
        o = CRational.coerce(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero scalar")
        return CRational((self.re * o.re + self.im * o.im) / den,
                         (self.im * o.re - self.re * o.im) / den)

    def __neg__(self) -> "CRational":
        return CRational(-self.re, -self.im)

    def conjugate(self) -> "CRational":
        return CRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_one(self) -> bool:
        return self.re == 1 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if not isinstance(other, CRational):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return self._hash

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def sort_key(self):
        return (self.re, self.im)

    def __repr__(self) -> str:
        return f"CRational({self.re!r}, {self.im!r})"

    def __str__(self) -> str:
        """Render in the coefficient syntax the expression language accepts."""
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re} {sign} {abs(self.im)}i)"


ZERO = CRational(0)
ONE = CRational(1)
MINUS_ONE = CRational(-1)
