"""Layered media: construction rules and complementary-geometry checks."""

import math

import numpy as np
import pytest

from calr import (
    Layer,
    LayeredMedium,
    ValidationError,
    build_doubly_complementary,
    constant_profile,
    profile_from_expr,
    unit_profile,
    verify_complementarity,
)


def test_constant_coefficient_radii_and_profiles(mn_cloak):
    cs = mn_cloak.complementary
    assert cs.r1 == pytest.approx(0.25, abs=0)
    assert cs.rc == pytest.approx(0.0625, abs=0)
    assert (cs.r2, cs.r3) == (1.0, 4.0)
    # every derived layer profile is identically 1
    for lay in mn_cloak.layers:
        for r in np.linspace(lay.lo + 1e-9, lay.hi - 1e-9, 7):
            assert float(lay.profile(r)) == pytest.approx(1.0, rel=1e-14)
    # exactly one plasmonic layer, sitting on (r1, r2)
    shells = [lay for lay in mn_cloak.layers if lay.plasmonic]
    assert len(shells) == 1
    assert (shells[0].lo, shells[0].hi) == (0.25, 1.0)


def test_constant_coefficient_complementarity_exact(mn_cloak):
    report = verify_complementarity(mn_cloak, tol=1e-12)
    assert report.passed
    assert max(report.max_shell_mismatch, report.max_core_mismatch) <= 1e-13


def test_variable_profile_complementarity(wavy_cloak):
    report = verify_complementarity(wavy_cloak, tol=1e-10)
    assert report.passed


def test_3d_build_verifies(mn_cloak_3d):
    report = verify_complementarity(mn_cloak_3d, tol=1e-10)
    assert report.passed
    # 3D Kelvin transport is not value-preserving: the shell profile carries
    # the (R^2/rho^2)^(d-2) Jacobian factor of the inversion in r = r2 = 1
    shell = mn_cloak_3d.shell
    r = 0.5
    assert float(shell.profile(r)) == pytest.approx(1.0 / r ** 2, rel=1e-12)


def test_broken_medium_fails_verification(mn_cloak):
    cs = mn_cloak.complementary
    layers = list(mn_cloak.layers)
    idx = next(i for i, lay in enumerate(layers) if lay.plasmonic)
    layers[idx] = Layer(layers[idx].lo, layers[idx].hi,
                        constant_profile(1.3, layers[idx].lo, layers[idx].hi),
                        plasmonic=True)
    broken = LayeredMedium(2, mn_cloak.omega_radius, tuple(layers), cs)
    report = verify_complementarity(broken, tol=1e-10)
    assert not report.passed
    assert report.max_shell_mismatch > 0.1


def test_layer_contiguity_enforced():
    with pytest.raises(ValidationError):
        LayeredMedium(2, 2.0, (
            Layer(0.0, 1.0, unit_profile(0.0, 1.0)),
            Layer(1.5, 2.0, unit_profile(1.5, 2.0)),
        ))


def test_innermost_layer_must_start_at_zero():
    with pytest.raises(ValidationError):
        LayeredMedium(2, 2.0, (Layer(0.5, 2.0, unit_profile(0.5, 2.0)),))


def test_outermost_layer_must_reach_boundary():
    with pytest.raises(ValidationError):
        LayeredMedium(2, 3.0, (Layer(0.0, 2.0, unit_profile(0.0, 2.0)),))


def test_build_rejects_bad_radii():
    a = constant_profile(1.0, 1.0, 4.0)
    with pytest.raises(ValidationError):
        build_doubly_complementary(a, 4.0, 1.0, 8.0, 2)
    with pytest.raises(ValidationError):
        # omega radius inside the annulus
        build_doubly_complementary(a, 1.0, 4.0, 3.0, 2)


def test_geometry_identities(wavy_cloak):
    cs = wavy_cloak.complementary
    assert cs.r1 == pytest.approx(cs.r2 ** 2 / cs.r3, rel=1e-15)
    assert cs.rc == pytest.approx(cs.r1 ** 2 / cs.r2, rel=1e-15)
    # interfaces appear in increasing order and match the structure radii
    assert wavy_cloak.interfaces == pytest.approx((cs.rc, cs.r1, cs.r2, cs.r3))


def test_sigma_factor(mn_cloak):
    shell = mn_cloak.shell
    assert shell.sigma_factor(1e-3) == complex(-1.0, 1e-3)
    outer = mn_cloak.layers[-1]
    assert outer.sigma_factor(1e-3) == 1.0


def test_a_lookup_matches_layers(wavy_cloak):
    for lay in wavy_cloak.layers:
        r = 0.5 * (lay.lo + lay.hi)
        assert float(wavy_cloak.a(r)) == pytest.approx(float(lay.profile(r)), rel=1e-14)
