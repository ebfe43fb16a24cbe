import cmath
import math
from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmoment.chargroup import (
    build_group,
    characters,
    conductor,
    eval_char,
    euler_phi,
    factorize,
    gauss_sum,
    induced_primitive,
)


def brute_conductor(chi):
    """Smallest divisor d of q such that chi is constant on units congruent mod d."""
    q = chi.modulus
    units = [a for a in range(1, q + 1) if gcd(a, q) == 1]
    for d in sorted(x for x in range(1, q + 1) if q % x == 0):
        ok = all(abs(chi(a) - chi(b)) < 1e-12 for a in units for b in units if (a - b) % d == 0)
        if ok:
            return d
    return q


@pytest.mark.parametrize("q,orders", [(7, (6,)), (8, (2, 2)), (12, (2, 2)), (16, (2, 4)), (9, (6,))])
def test_component_orders(q, orders):
    table = build_group(q)
    assert tuple(sorted(table.orders)) == tuple(sorted(orders))
    assert int(np.prod(table.orders)) == table.phi == euler_phi(q)


@pytest.mark.parametrize("q,count", [(1, 1), (2, 1), (3, 2), (5, 4), (24, 8)])
def test_character_count_and_principal_first(q, count):
    chars = characters(build_group(q))
    assert len(chars) == count
    assert chars[0].is_principal
    assert sum(c.is_principal for c in chars) == 1
    vecs = [c.exponents for c in chars]
    assert vecs == sorted(vecs)
    assert len(set(vecs)) == len(vecs)


def test_trivial_evaluations():
    chi0 = characters(build_group(7))[0]
    assert eval_char(chi0, 3) == 1
    quad5 = [c for c in characters(build_group(5)) if c.exponents == (2,)][0]
    assert abs(eval_char(quad5, 2) - (-1)) < 1e-15
    for chi in characters(build_group(6)):
        assert eval_char(chi, 3) == 0


@pytest.mark.parametrize("q", [1, 2, 3, 8, 9, 12, 15, 16, 20, 27, 32, 45, 60])
def test_dlog_roundtrip(q):
    table = build_group(q)
    for a in range(q):
        if gcd(a, q) == 1:
            assert table.element(table.dlog(a)) == a % q
        else:
            assert table.dlog(a) is None


@pytest.mark.parametrize("q", [3, 5, 8, 9, 12, 16, 21, 24])
def test_orthogonality(q):
    chars = characters(build_group(q))
    phi = euler_phi(q)
    V = np.array([c.values for c in chars])  # (phi, q)
    S = V.T @ V.conj()
    for m in range(q):
        for n in range(q):
            expected = phi if (m == n and gcd(m * n, q) == 1) else 0
            assert abs(S[m, n] - expected) < 1e-10 * phi


@settings(max_examples=60, deadline=None)
@given(q=st.integers(1, 80), m=st.integers(-500, 500), n=st.integers(-500, 500))
def test_multiplicativity_and_support(q, m, n):
    for chi in characters(build_group(q)):
        assert abs(chi(m * n) - chi(m) * chi(n)) < 1e-12
        if gcd(m, q) == 1:
            assert abs(abs(chi(m)) - 1) < 1e-12
        else:
            assert chi(m) == 0


@pytest.mark.parametrize("q", [4, 8, 9, 12, 16, 20, 24, 25, 27, 32, 36, 45, 48])
def test_conductor_against_brute_force(q):
    for chi in characters(build_group(q)):
        c = conductor(chi)
        assert q % c == 0
        assert c == brute_conductor(chi)


def test_conductor_examples():
    assert conductor(characters(build_group(12))[0]) == 1
    assert all(conductor(c) == 5 for c in characters(build_group(5))[1:])
    cond3 = [c for c in characters(build_group(9)) if conductor(c) == 3]
    assert len(cond3) == 1


@pytest.mark.parametrize("q", [1, 6, 9, 12, 16, 18, 40, 63])
def test_induced_primitive(q):
    for chi in characters(build_group(q)):
        psi = induced_primitive(chi)
        assert psi.modulus == conductor(chi)
        assert conductor(psi) == psi.modulus
        for a in range(1, q + 1):
            if gcd(a, q) == 1:
                assert abs(chi(a) - psi(a)) < 1e-12


def test_conductor_three_mod_nine_induces_quadratic_mod_three():
    chi = [c for c in characters(build_group(9)) if conductor(c) == 3][0]
    psi = induced_primitive(chi)
    assert psi.modulus == 3 and not psi.is_principal
    assert psi(2) == pytest.approx(-1)


def test_principal_induces_modulus_one():
    psi = induced_primitive(characters(build_group(10))[0])
    assert psi.modulus == 1


def brute_gauss(chi):
    q = chi.modulus
    return sum(chi(a) * cmath.exp(2j * math.pi * a / q) for a in range(1, q + 1))


def test_gauss_sum_examples():
    quad5 = [c for c in characters(build_group(5)) if c.exponents == (2,)][0]
    assert abs(gauss_sum(quad5) - math.sqrt(5)) < 1e-12
    for chi in characters(build_group(9)):
        assert abs(gauss_sum(chi) - brute_gauss(chi)) < 1e-10


def test_gauss_sum_magnitude_primitive_up_to_200():
    for q in range(3, 201):
        for chi in characters(build_group(q))[1:]:
            if conductor(chi) == q:
                assert abs(abs(gauss_sum(chi)) - math.sqrt(q)) < 1e-9 * math.sqrt(q)


def test_factorize():
    assert factorize(360) == [(2, 3), (3, 2), (5, 1)]
