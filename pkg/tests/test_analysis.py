import logging
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmoment.analysis import (
    convexity_check,
    dksum_norm,
    imprimitive_factor_check,
    moment_mk,
    montgomery_scan,
    proof_parameters,
    scaling_scan,
    subharmonic_bound_check,
)
from lmoment.chargroup import build_group, characters, conductor, euler_phi
from lmoment.lfun import fe_residual, l_value
from lmoment.meanvalue import WeightSpec


def test_moment_q3_against_hurwitz():
    mpmath.mp.dps = 30
    L = (mpmath.zeta(0.5, mpmath.mpf(1) / 3) - mpmath.zeta(0.5, mpmath.mpf(2) / 3)) / mpmath.sqrt(3)
    rep = moment_mk(3, 1.0)
    assert rep.M_k == pytest.approx(float(L) ** 2, rel=1e-11)
    assert rep.phi == 2
    assert rep.ratio == pytest.approx(rep.M_k / (2 * math.log(3)), rel=1e-15)


@pytest.mark.parametrize("q", [7, 30, 101])
def test_moment_k_zero_and_small_k(q):
    rep0 = moment_mk(q, 0.0)
    assert np.all(rep0.per_character_moment == 1.0)
    assert rep0.M_k == euler_phi(q) - 1
    rep = moment_mk(q, 1e-7)
    assert rep.M_k == pytest.approx(euler_phi(q) - 1, rel=1e-5)


def test_moment_q5_two_paths():
    rep = moment_mk(5, 0.5)
    chars = characters(build_group(5))[1:]
    direct = []
    for chi in chars:
        assert fe_residual(chi, 0.5 + 0.5j) < 1e-8
        direct.append(abs(l_value(0.5, chi)))
    assert len(rep.per_character_moment) == 3
    np.testing.assert_allclose(rep.per_character_moment, direct, rtol=1e-12)
    assert rep.M_k == pytest.approx(sum(direct), rel=1e-12)


def test_moment_small_modulus_warns(caplog):
    with caplog.at_level(logging.WARNING):
        rep = moment_mk(2, 1.0)
    assert rep.M_k == 0.0 and len(rep.per_character_moment) == 0
    assert "q = 2" in caplog.text
    with pytest.raises(ValueError):
        moment_mk(5, -1.0)


def test_moment_invariants():
    rep = moment_mk(60, 0.75)
    assert rep.M_k == pytest.approx(float(np.sum(rep.per_character_moment)), rel=1e-14)
    assert rep.M_k > 0 and rep.ratio > 0
    assert rep.normalizer == pytest.approx(16 * math.log(60) ** 0.5625)
    assert rep.zeros == []


def test_scan_order_and_factor_four():
    res = scaling_scan([202, 101, 59, 118], 1.0)
    assert [r.q for r in res.rows] == [202, 101, 59, 118]
    by_q = {r.q: r.ratio for r in res.rows}
    for q in (101, 59):
        assert 0.25 <= by_q[q] / by_q[2 * q] <= 4
    s = res.summary()
    assert s["count"] == 4 and s["failed"] == 0
    assert s["min"] <= s["median"] <= s["max"]


def test_scan_failures_are_isolated_rows():
    res = scaling_scan([7, 2, 11], 0.5)
    assert [r.ok for r in res.rows] == [True, False, True]
    bad = res.rows[1]
    assert bad.M_k is None and bad.ratio is None and "q must be" in bad.error
    assert res.summary()["failed"] == 1


def test_scan_parallel_matches_sequential():
    qs = [13, 17, 19]
    a = scaling_scan(qs, 1.0, parallelism=1)
    b = scaling_scan(qs, 1.0, parallelism=2)
    assert [r.M_k for r in a.rows] == [r.M_k for r in b.rows]


def test_proof_parameters_examples():
    assert proof_parameters(101, 1.0, "GRH").delta == pytest.approx(0.1)
    p = proof_parameters(101, 0.5, "unconditional")
    assert p.delta == pytest.approx(0.05) and p.v == 2
    assert proof_parameters(101, 1.0, "GRH", 1.0).kappa == pytest.approx(1 / 0.2)
    with pytest.raises(ValueError):
        proof_parameters(101, 2.0, "GRH")
    with pytest.raises(ValueError):
        proof_parameters(101, 0.3, "unconditional")


@settings(max_examples=60, deadline=None)
@given(q=st.integers(3, 10**6), k=st.floats(0.01, 1.99), c=st.floats(0.1, 1e3))
def test_proof_parameters_invariants(q, k, c):
    p = proof_parameters(q, k, "GRH", c)
    delta = (2 - k) / 10
    kappa = max(1.0, math.log(2 * c)) / (2 * delta)
    sigma0 = 0.5 + kappa / math.log(q)
    R = min(kappa, 1 / delta) / math.log(q)
    assert p.delta == pytest.approx(delta, rel=1e-15)
    assert p.kappa == pytest.approx(kappa, rel=1e-15)
    assert p.sigma0 == pytest.approx(sigma0, rel=1e-15)
    assert p.disc_radius == pytest.approx(R, rel=1e-15)
    assert 1 - p.sigma0 <= 0.5 <= p.sigma0
    assert p.disc_radius <= p.sigma0 - 0.5 + 1e-15
    assert p.contraction_value == pytest.approx(c * q ** (-delta * (2 * sigma0 - 1)), rel=1e-12)


def test_convexity_endpoint_degeneracy():
    spec = WeightSpec(5, 0.15)
    chi = characters(build_group(5))[1]
    c = convexity_check("J", chi, 0.8, 0.8, 1.3, 1.0, 1, spec, quad_tol=1e-6)
    assert c.lhs == c.rhs and c.slack == 0.0


def test_convexity_j_mod7_character():
    spec = WeightSpec(7, 0.15)
    for chi in characters(build_group(7))[1:3]:
        c = convexity_check("J", chi, 0.5, 1.0, 1.5, 1.0, 1, spec, tol=1e-9, quad_tol=1e-8)
        assert c.slack >= -1e-9 * c.rhs


def test_convexity_aggregate_form_q7():
    spec = WeightSpec(7, 0.15)
    c = convexity_check("K", 7, 0.6, 0.9, 1.4, 1.0, 1, spec, tol=1e-9, quad_tol=1e-8)
    assert c.passed
    assert c.per_character_slack.shape == (5,)
    # Hoelder: the aggregate rhs dominates the sum of per-character rhs values
    assert c.rhs >= np.sum(c.per_character_rhs) * (1 - 1e-12)


def test_convexity_rejects_bad_order():
    spec = WeightSpec(5, 0.15)
    chi = characters(build_group(5))[1]
    with pytest.raises(ValueError):
        convexity_check("J", chi, 1.0, 0.8, 1.3, 1.0, 1, spec)


def test_subharmonic_mod5_and_floor():
    chi = characters(build_group(5))[1]
    c = subharmonic_bound_check(chi, 1.0, tol=1e-6)
    assert c.converged and c.passed
    assert c.slack >= -1e-6 * c.disc_average
    assert c.w_floor_ratio >= 1 - math.exp(-1) - 1e-12


def test_subharmonic_continuity_small_radius():
    chi = characters(build_group(5))[1]
    params = proof_parameters(5, 1.0)
    c = subharmonic_bound_check(chi, 1.0, params=params, radius=params.disc_radius / 8)
    assert c.disc_average == pytest.approx(c.point_value, rel=0.01)


def test_subharmonic_excess_shrinks_quadratically():
    # for k = 1 the mean of |f|^2 over a disc exceeds |f(0)|^2 by about R^2 |f'(0)|^2 / 2
    chi = characters(build_group(7))[2]
    excess = []
    for R in (0.04, 0.02):
        c = subharmonic_bound_check(chi, 1.0, q=7, radius=R, tol=1e-10)
        excess.append(c.disc_average - c.point_value)
    assert excess[0] / excess[1] == pytest.approx(4.0, rel=0.01)


def test_subharmonic_rejects_principal():
    with pytest.raises(ValueError):
        subharmonic_bound_check(characters(build_group(5))[0], 1.0)


def test_montgomery_monotone_and_counts():
    a = montgomery_scan(5, 2)
    b = montgomery_scan(5, 4)
    assert a.primitive_count == 3
    assert b.lhs >= a.lhs
    assert 1 / 3 <= a.ratio / b.ratio <= 3
    # mod 9 the primitive characters are those of conductor 9
    m = montgomery_scan(9, 2)
    assert m.primitive_count == sum(conductor(c) == 9 for c in characters(build_group(9)))
    with pytest.raises(ValueError):
        montgomery_scan(5, 1)


@pytest.mark.parametrize("q", [9, 12, 15, 20])
def test_imprimitive_factor(q):
    t = np.linspace(-20, 20, 401)
    for chi in characters(build_group(q))[1:]:
        if conductor(chi) != q:
            assert imprimitive_factor_check(chi, t) <= 1 + 1e-12


def test_dksum_norm():
    total, ratio = dksum_norm(1000, 1.0)
    assert total == pytest.approx(sum(1 / n for n in range(1, 1001)), rel=1e-13)
    assert abs(dksum_norm(10**6, 1.0)[1] - 1) < abs(ratio - 1)
    total2, ratio2 = dksum_norm(10**4, 2.0)
    assert 0 < ratio2 < 1
    prev = 0.0
    for q in (2, 10, 100, 1000):
        cur = dksum_norm(q, 0.5)[0]
        assert cur > prev
        prev = cur
