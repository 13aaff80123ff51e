"""Power sweeps, the blow-up classifier, extendability, critical radius."""

import math

import numpy as np
import pytest

from calr import (
    SweepRow,
    ValidationError,
    classify,
    critical_radius,
    delta_half_h1_variation,
    delta_sweep,
    dichotomy_agreement,
    explicit_spectrum,
    extendability_test,
    far_field_report,
    geometric_spectrum,
    normalize,
    shell_window,
    solve_field,
    single_mode,
)
from calr.errors import NormalizationError
from calr.resonance import farfield_difference, ppp_ratios
from calr.solver import source_norm

DELTAS = [float(x) for x in np.logspace(-3, -9, 13)]


@pytest.fixture(scope="module")
def blowup_sweep(mn_cloak):
    src = geometric_spectrum(0.9, 80, 1.5)
    return delta_sweep(mn_cloak, src, DELTAS), src


@pytest.fixture(scope="module")
def bounded_sweep(mn_cloak):
    src = geometric_spectrum(0.6, 80, 1.5)
    return delta_sweep(mn_cloak, src, DELTAS), src


def synthetic_rows(deltas, powers, u_h1=None):
    nan = math.nan
    rows = []
    for i, (d, p) in enumerate(zip(deltas, powers)):
        rows.append(SweepRow(d, p, nan, nan, nan, nan,
                             u_h1_omega=nan if u_h1 is None else u_h1[i]))
    return rows


# --- normalization ----------------------------------------------------------

def test_normalize_fixes_scaled_shell_energy(mn_cloak):
    delta = 1e-4
    src = geometric_spectrum(0.8, 30, 1.5)
    c, v = normalize(src, mn_cloak, delta)
    lo, hi = shell_window(mn_cloak)
    assert math.sqrt(delta) * v.h1_energy(lo, hi, include_l2=False) == pytest.approx(1.0, rel=1e-11)
    # c reproduces the raw field's scaling
    u = solve_field(mn_cloak, src, delta)
    assert v.radial_value(3, 2.0) == pytest.approx(c * u.radial_value(3, 2.0), rel=1e-13)


def test_normalize_rejects_invisible_source(mn_cloak):
    src = single_mode(2, 1.0, 1.5, 2).scaled(0.0)
    with pytest.raises(NormalizationError):
        normalize(src, mn_cloak, 1e-4)


# --- classifier on synthetic curves ----------------------------------------

def test_classify_synthetic_blowup_slope():
    deltas = [float(x) for x in np.logspace(-2, -10, 17)]
    v = classify(synthetic_rows(deltas, [d ** -0.5 for d in deltas]))
    assert v.is_blowup and v.arm == "slope"
    assert v.slope == pytest.approx(-0.5, abs=1e-6)
    assert v.goodness == pytest.approx(1.0, abs=1e-9)


def test_classify_synthetic_bounded_plateau():
    deltas = [float(x) for x in np.logspace(-2, -10, 17)]
    v = classify(synthetic_rows(deltas, [3.0] * len(deltas)))
    assert v.is_bounded and v.arm == "plateau"
    assert abs(v.slope) <= 1e-12 and v.variation == 0.0


def test_classify_synthetic_decay_arm():
    deltas = [float(x) for x in np.logspace(-2, -10, 17)]
    v = classify(synthetic_rows(deltas, [d ** 0.4 for d in deltas]))
    assert v.is_bounded and v.arm == "decay"
    assert v.slope == pytest.approx(0.4, abs=1e-6)


def test_classify_synthetic_log_curve_indeterminate():
    deltas = [float(x) for x in np.logspace(-2, -10, 17)]
    v = classify(synthetic_rows(deltas, [1.0 / math.log(1.0 / d) for d in deltas]))
    assert v.label == "Indeterminate"


def test_classify_scaling_invariance():
    deltas = [float(x) for x in np.logspace(-2, -10, 17)]
    powers = [d ** -0.5 for d in deltas]
    a = classify(synthetic_rows(deltas, powers))
    b = classify(synthetic_rows(deltas, [7.3 * p for p in powers]))
    assert a.label == b.label
    assert a.slope == pytest.approx(b.slope, abs=1e-12)


def test_classify_needs_rows_and_decades():
    deltas = [1e-2, 1e-3, 1e-4, 1e-5]
    with pytest.raises(ValidationError):
        classify(synthetic_rows(deltas, [1.0] * 4))
    deltas = [float(x) for x in np.logspace(-2, -4, 9)]
    with pytest.raises(ValidationError):
        classify(synthetic_rows(deltas, [1.0] * 9))


def test_classify_ignores_invalid_rows():
    deltas = [float(x) for x in np.logspace(-2, -10, 17)]
    rows = synthetic_rows(deltas, [d ** -0.5 for d in deltas])
    rows[3].valid = False
    rows[7].power = math.nan
    v = classify(rows)
    assert v.is_blowup


# --- sweeps on the constant-coefficient cloak -------------------------------

def test_sweep_blowup_case(blowup_sweep):
    rows, _ = blowup_sweep
    assert all(r.valid for r in rows)
    v = classify(rows)
    assert v.is_blowup and v.slope < -0.1
    rep = far_field_report(rows)
    assert rep.v_monotone_decreasing
    assert rep.v_total_ratio > 10.0
    agr = dichotomy_agreement(v, rep)
    assert agr.applicable and agr.agrees


def test_sweep_bounded_case(bounded_sweep):
    rows, _ = bounded_sweep
    v = classify(rows)
    assert v.is_bounded and v.arm == "decay"
    rep = far_field_report(rows)
    assert rep.u_cauchy
    agr = dichotomy_agreement(v, rep)
    assert agr.applicable and agr.agrees


def test_sweep_rows_carry_monotone_c_delta(blowup_sweep):
    rows, _ = blowup_sweep
    # blow-up pushes the normalization constant to zero with delta
    cs = [r.c_delta for r in rows]
    assert all(b < a for a, b in zip(cs, cs[1:]))


def test_ppp_ratio_stays_bounded(blowup_sweep, bounded_sweep):
    for rows, src in (blowup_sweep, bounded_sweep):
        ratios = ppp_ratios(rows, source_norm(src))
        assert all(math.isfinite(x) and x > 0.0 for x in ratios)
        assert max(ratios) <= 1.1 * min(ratios)


def test_delta_half_variation_mechanics():
    deltas = [float(x) for x in np.logspace(-2, -10, 17)]
    rows = synthetic_rows(deltas, [1.0] * 17, u_h1=[4.0 / d for d in deltas])
    assert delta_half_h1_variation(rows) == pytest.approx(0.0, abs=1e-12)
    rows = synthetic_rows(deltas, [1.0] * 17, u_h1=[4.0] * 17)
    assert delta_half_h1_variation(rows) == pytest.approx(99.0, rel=1e-9)


def test_sweep_validation(mn_cloak):
    src = geometric_spectrum(0.8, 10, 1.5)
    with pytest.raises(ValidationError):
        delta_sweep(mn_cloak, src, [])
    with pytest.raises(ValidationError):
        delta_sweep(mn_cloak, src, [1e-3, 1e-2])
    with pytest.raises(ValidationError):
        delta_sweep(mn_cloak, src, [2.0, 1e-3])


def test_sweep_marks_failed_rows(mn_cloak):
    src = geometric_spectrum(0.8, 10, 1.5).scaled(0.0)
    rows = delta_sweep(mn_cloak, src, [1e-2, 1e-3, 1e-4])
    assert all(not r.valid for r in rows)
    assert all("shell" in r.reason for r in rows)
    with pytest.raises(ValidationError):
        classify(rows)


def test_farfield_difference_needs_coefficients():
    deltas = [1e-2, 1e-3]
    rows = synthetic_rows(deltas, [1.0, 1.0])
    with pytest.raises(ValidationError):
        farfield_difference(rows[0], rows[1])


# --- extendability ----------------------------------------------------------

def test_extendability_geometric_radius(mn_cloak):
    rep = extendability_test(geometric_spectrum(0.5, 60, 1.5), mn_cloak)
    assert rep.divergent and not rep.indeterminate
    assert rep.r_max == pytest.approx(3.0, rel=0.02)
    rep = extendability_test(geometric_spectrum(0.9, 60, 1.5), mn_cloak)
    assert rep.divergent
    assert rep.r_max == pytest.approx(1.0 / 0.6, rel=0.02)


def test_extendability_scale_invariance(mn_cloak):
    src = geometric_spectrum(0.5, 60, 1.5)
    a = extendability_test(src, mn_cloak)
    b = extendability_test(src.scaled(2.0), mn_cloak)
    assert b.r_max == a.r_max
    assert b.mode_energies[5][1] == pytest.approx(4.0 * a.mode_energies[5][1], rel=1e-12)


def test_extendability_ambiguous_band(mn_cloak):
    # growth ratio within the ambiguity window around 1 stays unresolved
    rep = extendability_test(geometric_spectrum(0.375, 60, 1.5), mn_cloak)
    assert rep.indeterminate
    assert abs(rep.ratio - 1.0) <= 0.04


def test_extendability_finite_band(mn_cloak):
    rep = extendability_test(explicit_spectrum({1: 1.0, 4: 0.5}, 1.5), mn_cloak)
    assert not rep.divergent and rep.r_max == math.inf
    assert "finite band" in rep.notes
    assert sorted(rep.series_coefficients) == [1, 4]


def test_extendability_series_coefficients_cover_modes(mn_cloak):
    src = geometric_spectrum(0.6, 20, 1.5)
    rep = extendability_test(src, mn_cloak)
    assert sorted(rep.series_coefficients) == list(range(1, 21))


def test_extendability_validation(mn_cloak):
    with pytest.raises(ValidationError):
        extendability_test(geometric_spectrum(0.5, 20, 0.5), mn_cloak)
    with pytest.raises(ValidationError):
        extendability_test(geometric_spectrum(0.5, 20, 1.5), mn_cloak, R=100.0)


# --- critical radius --------------------------------------------------------

def test_critical_radius_identity_annulus_exact(mn_cloak):
    res = critical_radius(mn_cloak)
    assert res.method == "exact"
    assert float(res) == math.sqrt(1.0 * 4.0)


def test_critical_radius_constant_profile_bisection(const2_cloak):
    # scaling the annulus coefficient keeps the harmonics, so the threshold
    # stays at sqrt(r2*r3); the finite-delta estimator cannot see the slow
    # blow-up just beyond the threshold and lands a little low
    res = critical_radius(const2_cloak)
    assert res.method == "bisection"
    assert float(res) == pytest.approx(2.0, rel=0.12)
    lo, hi = res.bracket
    assert lo < hi


def test_critical_radius_needs_complementary_metadata(mn_shell):
    with pytest.raises(ValidationError):
        critical_radius(mn_shell)
