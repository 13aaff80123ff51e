"""Log-convexity, plasmon pairs, rigidity, and density of the pair family."""

import math

import numpy as np
import pytest

from calr import ValidationError, constant_profile, profile_from_expr, single_mode, solve_field
from calr.analysis import (
    density_residual,
    plasmon_medium,
    plasmon_pair,
    rigidity_check,
    three_spheres_check,
)


# --- three spheres ------------------------------------------------------------

def test_three_spheres_single_modes_achieve_equality():
    for l in range(1, 33):
        rep = three_spheres_check({l: 0.5, -l: 0.5}, (1.0, 2.0, 4.0))
        assert rep.passed
        assert rep.ratio == pytest.approx(1.0, abs=1e-10)


def test_three_spheres_multimode_is_convex():
    rng = np.random.default_rng(7)
    for _ in range(5):
        coeffs = {}
        for l in rng.integers(1, 40, size=20):
            coeffs[int(l)] = complex(rng.normal(), rng.normal())
        rep = three_spheres_check(coeffs, (1.0, 2.0, 4.0))
        assert rep.ratio <= 1.0 + 1e-10
        assert rep.passed


def test_three_spheres_single_mode_equality_at_any_radii():
    # one mode makes the log-norm linear in log r, so equality is exact even
    # off the geometric middle; two modes make it strictly convex
    rep = three_spheres_check({3: 1.0}, (1.0, 1.5, 4.0))
    assert rep.ratio == pytest.approx(1.0, abs=1e-12)
    rep = three_spheres_check({1: 1.0, 5: 1.0}, (1.0, 1.5, 4.0))
    assert rep.ratio < 1.0 - 1e-3
    assert rep.passed


def test_three_spheres_zero_field():
    rep = three_spheres_check({2: 0.0}, (1.0, 2.0, 4.0))
    assert rep.passed and rep.note == "zero field"


def test_three_spheres_on_solved_field(mn_cloak):
    u = solve_field(mn_cloak, single_mode(2, 1.0, 1.5, 2), 1e-3)
    rep = three_spheres_check(u, (0.01, 0.02, 0.04))
    assert rep.passed
    assert rep.ratio == pytest.approx(1.0, abs=1e-12)


def test_three_spheres_field_validation(mn_cloak):
    u = solve_field(mn_cloak, single_mode(2, 1.0, 1.5, 2), 1e-3)
    # radii spanning several material slabs are rejected
    with pytest.raises(ValidationError):
        three_spheres_check(u, (0.5, 2.0, 6.0))
    # the annulus field carries a decaying part: not harmonic through 0
    with pytest.raises(ValidationError):
        three_spheres_check(u, (1.05, 1.2, 1.4))
    with pytest.raises(ValidationError):
        three_spheres_check({1: 1.0}, (2.0, 1.0, 4.0))
    with pytest.raises(ValidationError):
        three_spheres_check({1: 1.0}, (1.0, 2.0))


# --- plasmon pairs ------------------------------------------------------------

def test_plasmon_medium_geometry():
    a = constant_profile(1.0, 1.0, 2.0)
    m = plasmon_medium(a)
    assert m.omega_radius == 4.0
    assert [(lay.lo, lay.hi) for lay in m.layers] == [(0.0, 1.0), (1.0, 2.0), (2.0, 4.0)]


def test_plasmon_pair_unit_profile_closed_forms():
    a = constant_profile(1.0, 1.0, 2.0)
    for l in range(1, 9):
        pp = plasmon_pair(a, l)
        for r in (1.0, 1.37, 1.8, 2.0):
            assert pp.v_value(r) == pytest.approx((r / 4.0) ** l, rel=1e-12)
            assert pp.w_value(r) == pytest.approx((4.0 / (4.0 * r)) ** l, rel=1e-12)
        assert pp.trace_match <= 1e-13
        assert pp.flux_match <= 1e-13


def test_plasmon_pair_monopole_companion():
    pp = plasmon_pair(constant_profile(1.0, 1.0, 2.0), 0)
    for r in (1.0, 1.37, 2.0):
        assert pp.w_value(r) == pytest.approx(math.log(r) / math.log(2.0), abs=1e-14)
    assert pp.trace_match <= 1e-13


@pytest.mark.parametrize("dim", [2, 3])
def test_plasmon_pair_identities_variable_profile(dim):
    wavy = profile_from_expr("2 + sin(r)", 1.0, 2.0)
    for l in range(1, 17):
        pp = plasmon_pair(wavy, l, dim)
        assert pp.trace_match <= 1e-11
        assert pp.flux_match <= 1e-11


def test_plasmon_pair_constant_scaling():
    # doubling the profile keeps the identities and the trace-only companion,
    # and doubles every flux-linear quantity
    pp = plasmon_pair(constant_profile(2.0, 1.0, 2.0), 3)
    assert pp.trace_match <= 1e-13 and pp.flux_match <= 1e-13
    pp0 = plasmon_pair(constant_profile(2.0, 1.0, 2.0), 0)
    assert pp0.w_value(1.37) == pytest.approx(math.log(1.37) / math.log(2.0), abs=1e-14)


def test_plasmon_pair_validation():
    with pytest.raises(ValidationError):
        plasmon_pair(constant_profile(1.0, 1.0, 2.0), -1)
    with pytest.raises(ValidationError):
        plasmon_medium(constant_profile(1.0, 0.0, 2.0))


# --- rigidity -------------------------------------------------------------------

def test_rigidity_unit_profile():
    rep = rigidity_check(constant_profile(1.0, 1.0, 2.0), range(1, 17))
    assert rep.all_nondegenerate
    assert rep.monopole_positive
    assert rep.monopole_flux == pytest.approx(2.0 * math.pi / math.log(2.0), rel=1e-12)


def test_rigidity_scales_with_profile():
    rep = rigidity_check(constant_profile(2.0, 1.0, 2.0), range(1, 5))
    assert rep.monopole_flux == pytest.approx(4.0 * math.pi / math.log(2.0), rel=1e-12)


def test_rigidity_variable_profile():
    wavy = profile_from_expr("2 + sin(r)", 1.0, 2.0)
    rep = rigidity_check(wavy, range(1, 17))
    assert rep.all_nondegenerate and rep.monopole_positive


def test_rigidity_fake_pair_is_caught():
    rep = rigidity_check(constant_profile(1.0, 1.0, 2.0), range(1, 5), fake=True)
    assert not rep.all_nondegenerate
    assert all(r.degenerate for r in rep.rows)


# --- density ---------------------------------------------------------------------

def test_density_residual_decreases_with_family_size():
    a = constant_profile(1.0, 1.0, 2.0)
    tgt = {l: math.exp(-0.4 * l) for l in range(1, 40)}
    res = [density_residual([tgt], a, family=1, m=m).residuals[0]
           for m in (8, 16, 32)]
    assert res[0] > res[1] > res[2]
    assert res[2] < 1e-4


def test_density_exact_member_has_zero_residual():
    a = constant_profile(1.0, 1.0, 2.0)
    rep = density_residual([{5: 1.0}], a, family=1, m=8)
    assert rep.residuals[0] == 0.0


def test_density_families():
    a = constant_profile(1.0, 1.0, 2.0)
    # flux family includes the constant density, so the monopole is matchable
    rep2 = density_residual([{0: 1.0, 2: 0.5}], a, family=2, m=4)
    assert rep2.residuals[0] == 0.0
    rep3 = density_residual([({1: 1.0, 2: 0.5}, {1: 0.2})], a, family=3, m=8)
    assert rep3.residuals[0] == 0.0
    assert rep3.condition >= 1.0
    assert rep3.degenerate_modes == ()


def test_density_tail_is_reported():
    a = constant_profile(1.0, 1.0, 2.0)
    rep = density_residual([{2: 1.0, 12: 1.0}], a, family=1, m=8)
    # only the l=12 term survives; residual = its weighted share
    w2 = (1 + 4) ** 0.5
    w12 = (1 + 144) ** 0.5
    assert rep.residuals[0] == pytest.approx(math.sqrt(w12 / (w2 + w12)), rel=1e-12)


def test_density_validation():
    a = constant_profile(1.0, 1.0, 2.0)
    with pytest.raises(ValidationError):
        density_residual([{1: 1.0}], a, family=4)
    with pytest.raises(ValidationError):
        density_residual([{1: 1.0}], a, family=1, m=0)
