"""Per-mode fundamental pairs and their energy integrals."""

import math

import numpy as np
import pytest

from calr import (
    SolverError,
    constant_profile,
    fundamental_pair,
    power_profile,
    profile_from_expr,
)
from calr.radial import make_basis

from oracles import (
    OdeSlabBasis,
    euler_exponents,
    gauss_solve,
    mode_energy_quadrature,
    power_exponents,
)


@pytest.mark.parametrize("dim,l", [(2, 1), (2, 7), (3, 1), (3, 7)])
def test_constant_profile_reproduces_exponent_table(dim, l):
    a = constant_profile(2.0, 1.0, 3.0)
    pair = fundamental_pair(a, l, (1.0, 3.0), dim)
    kp, km = power_exponents(l, dim)
    for r in (1.2, 2.0, 2.9):
        assert pair.phi_plus(r) / pair.phi_plus(1.5) == pytest.approx(
            (r / 1.5) ** kp, rel=1e-13)
        assert pair.phi_minus(r) / pair.phi_minus(1.5) == pytest.approx(
            (r / 1.5) ** km, rel=1e-13)


def test_monopole_pair_2d():
    a = constant_profile(1.0, 0.5, 2.0)
    pair = fundamental_pair(a, 0, (0.5, 2.0), 2)
    # phi+ constant, phi- logarithmic
    assert pair.phi_plus(1.7) == pytest.approx(pair.phi_plus(0.6), rel=1e-14)
    ratio = ((pair.phi_minus(1.8) - pair.phi_minus(0.9))
             / (pair.phi_minus(1.2) - pair.phi_minus(0.6)))
    assert ratio == pytest.approx(math.log(2.0) / math.log(2.0), rel=1e-12)


def test_wronskian_constant_in_r():
    a = profile_from_expr("2 + sin(r)", 1.0, 4.0)
    pair = fundamental_pair(a, 3, (1.0, 4.0), 2)
    w = [complex(pair.wronskian(r)) for r in (1.1, 2.0, 3.7)]
    assert abs(w[1] - w[0]) <= 1e-10 * abs(w[0])
    assert abs(w[2] - w[0]) <= 1e-10 * abs(w[0])


def test_power_profile_euler_exponents():
    # a(r) = r^2, l = 1, d = 2 has exact solutions r^(-1 +- sqrt(2))
    kp, km = euler_exponents(2.0, 1)
    a = power_profile(1.0, 2.0, 0.5, 2.0)
    pair = fundamental_pair(a, 1, (0.5, 2.0), 2)
    for fn in (pair.phi_plus, pair.phi_minus):
        # two-point fit in the exact solution space, third point must follow
        A = [[0.5 ** kp, 0.5 ** km], [2.0 ** kp, 2.0 ** km]]
        b = [fn(0.5), fn(2.0)]
        c1, c2 = gauss_solve(A, b)
        mid = c1 * 1.3 ** kp + c2 * 1.3 ** km
        assert complex(fn(1.3)) == pytest.approx(mid, rel=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_variable_profile_pair_matches_independent_integrator(dim):
    a = profile_from_expr("2 + sin(r)", 1.0, 4.0)
    l = 5
    pair = fundamental_pair(a, l, (1.0, 4.0), dim)
    # each element checked by Cauchy-data propagation in its stable direction:
    # growing branch forward from lo, decaying branch backward from hi
    fwd = OdeSlabBasis(a, l, dim, 1.0, 4.0, start="lo")
    bwd = OdeSlabBasis(a, l, dim, 1.0, 4.0, start="hi")
    cases = [(pair.phi_plus, pair.dphi_plus, fwd, 1.0),
             (pair.phi_minus, pair.dphi_minus, bwd, 4.0)]
    for fn, dfn, oracle, anchor in cases:
        u0 = float(fn(anchor))
        q0 = float(a(anchor)) * anchor ** (dim - 1) * float(dfn(anchor))
        for r in (1.0, 1.7, 2.9, 4.0):
            want = u0 * oracle.value(0, r) + q0 * oracle.value(1, r)
            got = float(fn(r))
            assert got == pytest.approx(want, rel=2e-9)


@pytest.mark.parametrize("l,dim", [(0, 2), (1, 2), (4, 2), (0, 3), (3, 3)])
def test_gram_gradient_energy_matches_quadrature(l, dim):
    a = constant_profile(1.0, 1.0, 2.5)
    basis = make_basis(a, l, 1.0, 2.5, dim)
    for j in range(2):
        u = lambda r: float(basis.value(j, r))
        du = lambda r: float(basis.deriv(j, r))
        Gg, Gl = basis.gram(1.0, 2.5, weighted=False)
        want_g = mode_energy_quadrature(u, du, l, dim, 1.0, 2.5)
        want_l = mode_energy_quadrature(u, du, l, dim, 1.0, 2.5, include_l2=True) - want_g
        got_g = float(Gg[j, j].real)
        got_l = float(Gl[j, j].real)
        assert got_g == pytest.approx(want_g, rel=1e-10, abs=1e-12)
        assert got_l == pytest.approx(want_l, rel=1e-10)


def test_gram_weighted_variable_profile_vs_quadrature():
    a = profile_from_expr("2 + sin(r)", 1.0, 4.0)
    basis = make_basis(a, 2, 1.0, 4.0, 2)
    Gg, Gl = basis.gram(1.3, 3.1, weighted=True)
    coeffs = np.array([0.7, -0.2])
    u = lambda r: coeffs[0] * float(basis.value(0, r)) + coeffs[1] * float(basis.value(1, r))
    du = lambda r: coeffs[0] * float(basis.deriv(0, r)) + coeffs[1] * float(basis.deriv(1, r))
    want = mode_energy_quadrature(u, du, 2, 2, 1.3, 3.1, weight=lambda r: float(a(r)))
    got = float((coeffs @ Gg @ coeffs).real)
    assert got == pytest.approx(want, rel=1e-9)


def test_gram_cross_term_cancellation():
    # energy of (c,d) = (1,1) equals energy(1,0) + energy(0,1) for l >= 1
    a = constant_profile(1.0, 1.0, 2.0)
    basis = make_basis(a, 3, 1.0, 2.0, 2)
    Gg, _ = basis.gram(1.0, 2.0, weighted=False)
    v11 = np.array([1.0, 1.0])
    e11 = float((v11 @ Gg @ v11).real)
    assert e11 == pytest.approx(float(Gg[0, 0].real) + float(Gg[1, 1].real), rel=1e-12)
    assert abs(Gg[0, 1]) <= 1e-12 * e11


def test_ball_slab_single_element():
    a = constant_profile(1.0, 0.0, 1.0)
    basis = make_basis(a, 4, 0.0, 1.0, 2, ball=True)
    # the admissible element is regular at the origin
    assert float(basis.value(0, 0.5)) / float(basis.value(0, 1.0)) == pytest.approx(
        0.5 ** 4, rel=1e-13)
    Gg, Gl = basis.gram(0.0, 1.0, weighted=False)
    assert math.isfinite(float(Gg[0, 0].real))
    assert float(Gg[1, 1].real) == 0.0


def test_unrepresentable_mode_rejected():
    # the integrated (non-power) path refuses exponent spans beyond doubles
    a = profile_from_expr("2 + sin(r)", 1e-6, 1.0)
    with pytest.raises(SolverError):
        make_basis(a, 80, 1e-6, 1.0, 2)
