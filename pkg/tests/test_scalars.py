from fractions import Fraction

import pytest

from tenet.scalars import CRational


def test_arithmetic():
    a = CRational(Fraction(1, 2), Fraction(1, 3))
    b = CRational(2, -1)
    assert a + b == CRational(Fraction(5, 2), Fraction(-2, 3))
    assert a - a == CRational(0)
    assert (a * b).re == Fraction(1, 2) * 2 - Fraction(1, 3) * (-1)
    assert a * 2 == CRational(1, Fraction(2, 3))
    assert -a == CRational(Fraction(-1, 2), Fraction(-1, 3))


def test_division_exact():
    a = CRational(1, 1)
    b = CRational(1, -1)
    q = a / b
    assert q * b == a
    with pytest.raises(ZeroDivisionError):
        a / CRational(0)


def test_conjugate_and_predicates():
    a = CRational(Fraction(3, 4), 2)
    assert a.conjugate() == CRational(Fraction(3, 4), -2)
    assert CRational(0).is_zero()
    assert CRational(1).is_one()
    assert not a.is_real()
    assert CRational(7).is_real()


def test_int_comparison_and_hash():
    assert CRational(3) == 3
    assert CRational(3) == Fraction(3)
    assert CRational(3, 1) != 3
    assert hash(CRational(2)) == hash(CRational(2))


def test_str_forms():
    assert str(CRational(Fraction(-3, 4))) == "-3/4"
    assert str(CRational(0, 2)) == "2i"
    assert str(CRational(1, -2)) == "(1 - 2i)"


def test_immutable():
    a = CRational(1)
    with pytest.raises(AttributeError):
        a.re = Fraction(2)
