"""Per-mode radial fundamental solutions and their energy integrals.

Separating variables in div(a(|x|) grad u) = 0 reduces each angular mode to

    (a(r) r^(d-1) u')' = a(r) l(l+d-2) r^(d-3) u.

Each layer contributes a two-dimensional solution space spanned by a growing
solution phi+ and a decaying solution phi-.  Power-law profiles a = alpha r^p
admit exact power (or log) solutions; everything else is integrated with a
high-order ODE method in log-radius, marching each branch in its direction of
growth so both keep pointwise relative accuracy.

All energy integrals are evaluated in endpoint-scaled form so that mode
indices in the hundreds stay inside double-precision range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SolverError, ValidationError
from .profiles import RadialProfile

# Largest allowed exponent span l*ln(hi/lo); beyond this the growing branch
# overflows doubles and the mode cannot be represented in one slab.
_MAX_LOG_GROWTH = 600.0

_ODE_RTOL = 1e-13
_ODE_ATOL = 1e-300


def angular_factor(dim: int) -> float:
    """Surface integral of |Y|^2 for one angular mode: 2*pi for e^(i l t) in 2D,
    1 for orthonormal spherical harmonics in 3D."""
    if dim == 2:
        return 2.0 * math.pi
    if dim == 3:
        return 1.0
    raise ValidationError(f"dim must be 2 or 3, got {dim}")


def mu_of(l: int, dim: int) -> float:
    """Angular eigenvalue l(l+d-2)."""
    return float(l * (l + dim - 2))


def power_integral(lo: float, hi: float, m: float, scale: float = 1.0) -> float:
    """Integral of scale*r^m over [lo, hi], stable for large |m|.

    Factored around the endpoint where r^(m+1) is largest, so the result
    underflows gracefully instead of overflowing when exponents are extreme.
    """
    if hi < lo:
        raise ValidationError(f"empty integration window [{lo}, {hi}]")
    if lo == hi or scale == 0.0:
        return 0.0
    mp1 = m + 1.0
    if lo == 0.0:
        if mp1 <= 0.0:
            raise ValidationError(f"r^{m} is not integrable down to 0")
        return scale * math.exp(mp1 * math.log(hi)) / mp1
    if mp1 == 0.0:
        return scale * math.log(hi / lo)
    llo, lhi = math.log(lo), math.log(hi)
    if mp1 * lhi >= mp1 * llo:
        piv, oth = lhi, llo
    else:
        piv, oth = llo, lhi
    amp = math.exp(mp1 * piv)
    rest = -math.expm1(mp1 * (oth - piv))  # 1 - (other/pivot)^(m+1), in [0, 1]
    val = amp * rest / mp1
    if piv == llo:
        val = -val
    return scale * val


def powlog_integral(lo: float, hi: float, m: float, j: int, ref: float) -> float:
    """Integral of r^m * ln(r/ref)^j over [lo, hi] for j in {0, 1, 2}.

    Only the monopole branches need this (small exponents); implemented via
    t = ln(r/ref) and closed antiderivatives of e^(at) t^j.
    """
    if j == 0:
        return power_integral(lo, hi, m)
    if j not in (1, 2):
        raise ValidationError(f"log power j must be 0, 1 or 2, got {j}")
    if hi < lo:
        raise ValidationError(f"empty integration window [{lo}, {hi}]")
    if lo == hi:
        return 0.0
    if lo <= 0.0:
        raise ValidationError("log-weighted integral requires lo > 0")
    a = m + 1.0
    t0, t1 = math.log(lo / ref), math.log(hi / ref)
    tmax = max(abs(t0), abs(t1))
    if abs(a) * tmax < 1e-6:
        # Nearly pure polynomial in t; expand e^(at) to second order.
        def prim(t):
            return (
                t ** (j + 1) / (j + 1)
                + a * t ** (j + 2) / (j + 2)
                + a * a * t ** (j + 3) / (2 * (j + 3))
            )
    elif j == 1:
        def prim(t):
            return math.exp(a * t) * (t / a - 1.0 / a ** 2)
    else:
        def prim(t):
            return math.exp(a * t) * (t * t / a - 2.0 * t / a ** 2 + 2.0 / a ** 3)
    return ref ** a * (prim(t1) - prim(t0))


@dataclass(frozen=True)
class _PTerm:
    """One power term sgn * exp(lamp) * r^k of a radial basis function."""

    lamp: float
    sgn: float
    k: float


def _terms_value(terms, r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for t in terms:
        out = out + t.sgn * np.exp(t.lamp + t.k * np.log(r))
    return out


def _terms_deriv(terms, r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for t in terms:
        if t.k != 0.0:
            out = out + t.sgn * t.k * np.exp(t.lamp + (t.k - 1.0) * np.log(r))
    return out


def _window_power_integral(lamp: float, k: float, m_extra: float, lo: float, hi: float) -> float:
    """exp(lamp) * integral of r^(k + m_extra) over [lo, hi], log-stabilized."""
    m = k + m_extra
    mp1 = m + 1.0
    if lo == 0.0:
        if mp1 <= 0.0:
            raise ValidationError(f"r^{m} is not integrable down to 0")
        return math.exp(lamp + mp1 * math.log(hi)) / mp1
    P = hi if mp1 >= 0.0 else lo
    amp = lamp + mp1 * math.log(P)
    if amp > 700.0:
        raise SolverError(f"energy integral overflows double range (log amplitude {amp:.1f})")
    return math.exp(amp) * power_integral(lo / P, hi / P, m)


class RadialBasis:
    """Common interface: two independent per-mode radial solutions plus their
    fluxes q = a r^(d-1) u' and windowed energy Gram matrices."""

    profile: RadialProfile
    l: int
    dim: int
    lo: float
    hi: float

    def value(self, j: int, r):
        raise NotImplementedError

    def flux(self, j: int, r):
        raise NotImplementedError

    def deriv(self, j: int, r):
        r = np.asarray(r, dtype=float)
        return self.flux(j, r) / (self.profile(r) * r ** (self.dim - 1))

    def gram(self, lo: float, hi: float, weighted: bool):
        """(G_grad, G_l2): 2x2 real matrices so that for u = c*phi+ + d*phi-,

        integral over the annulus of w(r)|grad u|^2  = [c,d]^H G_grad [c,d]
        integral of w(r)|u|^2                        = [c,d]^H G_l2  [c,d]

        with w = a(r) if weighted else 1, including the angular factor.
        """
        raise NotImplementedError


class PowerBasis(RadialBasis):
    """Exact solutions for a = alpha r^p.

    With s = p + d - 2 the exponents are k_pm = (-s +- sqrt(s^2 + 4 mu))/2,
    and k+ k- = -mu makes the gradient cross terms vanish identically.
    Normalization: phi+(hi) = 1, phi-(lo) = 1 (l >= 1), so every stored
    amplitude stays O(1) regardless of l.
    """

    def __init__(self, profile: RadialProfile, l: int, lo: float, hi: float, dim: int,
                 ball: bool = False):
        if not profile.is_power:
            raise ValidationError("PowerBasis requires a power-law profile")
        if l < 0:
            raise ValidationError("radial mode index must be >= 0")
        self.profile = profile
        self.l = int(l)
        self.dim = int(dim)
        self.lo = float(lo)
        self.hi = float(hi)
        self.ball = bool(ball)
        self.alpha = float(profile.coef)
        self.p = float(profile.exponent)
        self.mu = mu_of(self.l, self.dim)
        self.s = self.p + self.dim - 2.0
        disc = math.sqrt(self.s * self.s + 4.0 * self.mu)
        self.kplus = 0.5 * (-self.s + disc)
        self.kminus = 0.5 * (-self.s - disc)
        self.ln_minus = False
        # Scale radii: phi+ = (r/B)^{k+}; phi- = (r/A)^{k-}.
        self._B = self.hi
        self._A = self.hi if ball else self.lo
        if self.l == 0:
            self.kplus = 0.0
            if self.s == 0.0:
                self.ln_minus = True  # phi- = ln(r/B), flux identically alpha
            # s != 0: phi- = (r^{-s} - B^{-s}) / (A^{-s} - B^{-s}), phi-(A)=1, phi-(B)=0
        self._gram_cache: dict = {}

    def _terms(self, j: int):
        if j == 0:
            if self.l == 0:
                return [_PTerm(0.0, 1.0, 0.0)]
            return [_PTerm(-self.kplus * math.log(self._B), 1.0, self.kplus)]
        if self.l == 0:
            if self.ln_minus:
                raise ValidationError("log branch has no power-term form")
            DA = self._A ** (-self.s) - self._B ** (-self.s)
            return [
                _PTerm(-math.log(abs(DA)), math.copysign(1.0, DA), -self.s),
                _PTerm(-self.s * math.log(self._B) - math.log(abs(DA)),
                       -math.copysign(1.0, DA), 0.0),
            ]
        return [_PTerm(-self.kminus * math.log(self._A), 1.0, self.kminus)]

    def value(self, j: int, r):
        r = np.asarray(r, dtype=float)
        if j == 1 and self.ln_minus:
            return np.log(r / self._B)
        if j == 0 and self.l == 0:
            return np.ones_like(r)
        if j == 0 and self.kplus > 0.0:
            # log(0) -> -inf -> exp(-inf) = 0 covers r = 0 in the innermost slab
            with np.errstate(divide="ignore"):
                return np.exp(self.kplus * (np.log(r) - math.log(self._B)))
        return _terms_value(self._terms(j), r)

    def deriv(self, j: int, r):
        r = np.asarray(r, dtype=float)
        if j == 1 and self.ln_minus:
            return 1.0 / r
        if j == 0 and self.l == 0:
            return np.zeros_like(r)
        return _terms_deriv(self._terms(j), r)

    def flux(self, j: int, r):
        r = np.asarray(r, dtype=float)
        if j == 1 and self.ln_minus:
            return np.full_like(r, self.alpha)
        return self.alpha * r ** (self.p + self.dim - 1) * self.deriv(j, r)

    def gram(self, lo: float, hi: float, weighted: bool):
        key = (lo, hi, weighted)
        hit = self._gram_cache.get(key)
        if hit is not None:
            return hit
        if not self.ball and not (self.lo * (1 - 1e-12) <= lo <= hi <= self.hi * (1 + 1e-12)):
            raise ValidationError("gram window outside basis interval")
        d = self.dim
        ang = angular_factor(d)
        beta, we = (self.alpha, self.p) if weighted else (1.0, 0.0)
        Gg = np.zeros((2, 2))
        Gl = np.zeros((2, 2))
        term_sets = []
        for j in (0, 1):
            if j == 1 and self.ln_minus:
                term_sets.append(None)
            else:
                term_sets.append(self._terms(j))
        for i in (0, 1):
            for j in (i, 1):
                if self.ball and (i == 1 or j == 1):
                    continue  # decaying element carries no weight in the ball
                if term_sets[i] is None or term_sets[j] is None:
                    gg, gl = self._log_branch_entries(i, j, lo, hi, beta, we)
                else:
                    gg = 0.0
                    gl = 0.0
                    for ti in term_sets[i]:
                        for tj in term_sets[j]:
                            sg = ti.sgn * tj.sgn
                            lamp = ti.lamp + tj.lamp
                            cg = ti.k * tj.k + self.mu
                            if cg != 0.0:
                                gg += sg * cg * _window_power_integral(
                                    lamp, ti.k + tj.k, we + d - 3, lo, hi)
                            gl += sg * _window_power_integral(
                                lamp, ti.k + tj.k, we + d - 1, lo, hi)
                Gg[i, j] = Gg[j, i] = ang * beta * gg
                Gl[i, j] = Gl[j, i] = ang * beta * gl
        out = (Gg, Gl)
        self._gram_cache[key] = out
        return out

    def _log_branch_entries(self, i, j, lo, hi, beta, we):
        # Entries involving phi- = ln(r/B) in the l = 0, s = 0 case.
        d = self.dim
        B = self._B
        if i == 0 and j == 1:
            # phi+ = 1: gradient cross vanishes (phi+' = 0, mu = 0)
            gg = 0.0
            gl = powlog_integral(lo, hi, we + d - 1, 1, B)
        else:
            gg = power_integral(lo, hi, we + d - 3)  # |1/r|^2 r^{we+d-1}
            gl = powlog_integral(lo, hi, we + d - 1, 2, B)
        return gg, gl


class OdeBasis(RadialBasis):
    """Numerically integrated fundamental pair for a general elliptic profile.

    State y = [u, q] with q = a r^(d-1) u' in t = ln r:
        du/dt = q e^((2-d)t) / a(e^t),   dq/dt = mu a(e^t) e^((d-2)t) u.
    phi+ is marched outward and phi- inward, each in its direction of growth,
    so the dominant branch is tracked with relative accuracy; the conserved
    cross-flux u1 q2 - u2 q1 is monitored as an integration diagnostic.
    """

    def __init__(self, profile: RadialProfile, l: int, lo: float, hi: float, dim: int):
        if lo <= 0.0:
            raise ValidationError("ODE basis requires lo > 0 (non-power profile in a ball)")
        self.profile = profile
        self.l = int(l)
        self.dim = int(dim)
        self.lo = float(lo)
        self.hi = float(hi)
        self.mu = mu_of(self.l, self.dim)
        if self.l * math.log(self.hi / self.lo) > _MAX_LOG_GROWTH:
            raise SolverError(
                f"mode {l} spans e^{self.l * math.log(self.hi / self.lo):.0f} growth "
                f"across [{lo}, {hi}]; not representable in double precision")
        self._gram_cache: dict = {}
        self._solve()

    def _rhs(self, t, y):
        r = math.exp(t)
        a = float(self.profile(r))
        u, q = y
        d = self.dim
        return [q * math.exp((2 - d) * t) / a, self.mu * a * math.exp((d - 2) * t) * u]

    def _march(self, t0, t1, y0):
        # An explicit first step keeps the step-size heuristic away from the
        # 0/0 it hits when the initial state starts at the tiny atol floor.
        sol = solve_ivp(self._rhs, (t0, t1), y0, method="DOP853",
                        rtol=_ODE_RTOL, atol=_ODE_ATOL, dense_output=True,
                        first_step=abs(t1 - t0) * 1e-3)
        if not sol.success:
            raise SolverError(f"fundamental-pair integration failed for mode {self.l}: {sol.message}")
        return sol

    def _solve(self):
        d = self.dim
        tA, tB = math.log(self.lo), math.log(self.hi)
        aA = float(self.profile(self.lo))
        aB = float(self.profile(self.hi))
        l = self.l
        if l >= 1:
            self._sol_plus = self._march(tA, tB, [1.0, l * aA * self.lo ** (d - 2)])
            uB = self._sol_plus.sol(tB)[0]
            if uB == 0.0 or not math.isfinite(uB):
                raise SolverError(f"growing branch degenerate for mode {l}")
            self._scale_plus = 1.0 / uB
            kdec = -l if d == 2 else -(l + 1)
            self._sol_minus = self._march(tB, tA, [1.0, kdec * aB * self.hi ** (d - 2)])
            uA = self._sol_minus.sol(tA)[0]
            if uA == 0.0 or not math.isfinite(uA):
                raise SolverError(f"decaying branch degenerate for mode {l}")
            self._scale_minus = 1.0 / uA
        else:
            # phi+ = 1 exactly; phi- from zero value at hi with unit-type flux.
            self._sol_plus = None
            self._scale_plus = 1.0
            self._sol_minus = self._march(tB, tA, [0.0, aB * self.hi ** (d - 2)])
            self._scale_minus = 1.0
        self._check_wronskian()

    def _pair_at(self, j: int, t):
        if j == 0:
            if self._sol_plus is None:
                return np.ones_like(t), np.zeros_like(t)
            y = self._sol_plus.sol(t) * self._scale_plus
            return y[0], y[1]
        y = self._sol_minus.sol(t) * self._scale_minus
        return y[0], y[1]

    def _check_wronskian(self):
        ts = np.array([math.log(self.lo), 0.5 * (math.log(self.lo) + math.log(self.hi)),
                       math.log(self.hi)])
        up, qp = self._pair_at(0, ts)
        um, qm = self._pair_at(1, ts)
        w = up * qm - um * qp
        ref = abs(w[0])
        if ref == 0.0:
            raise SolverError(f"fundamental pair degenerate for mode {self.l}")
        drift = float(np.max(np.abs(w - w[0]))) / ref
        if drift > 1e-11:
            raise SolverError(
                f"flux-Wronskian drift {drift:.2e} for mode {self.l}; integration unreliable")

    def value(self, j: int, r):
        t = np.log(np.asarray(r, dtype=float))
        t = np.clip(t, math.log(self.lo), math.log(self.hi))
        return self._pair_at(j, t)[0]

    def flux(self, j: int, r):
        t = np.log(np.asarray(r, dtype=float))
        t = np.clip(t, math.log(self.lo), math.log(self.hi))
        return self._pair_at(j, t)[1]

    def gram(self, lo: float, hi: float, weighted: bool):
        key = (lo, hi, weighted)
        hit = self._gram_cache.get(key)
        if hit is not None:
            return hit
        if not (self.lo * (1 - 1e-12) <= lo <= hi <= self.hi * (1 + 1e-12)):
            raise ValidationError("gram window outside basis interval")
        d = self.dim
        ang = angular_factor(d)
        n = max(48, self.l + 24)
        x, wq = np.polynomial.legendre.leggauss(n)
        t0, t1 = math.log(lo), math.log(hi)
        t = 0.5 * (t1 - t0) * x + 0.5 * (t1 + t0)
        wq = wq * 0.5 * (t1 - t0)
        r = np.exp(t)
        a = np.asarray(self.profile(r), dtype=float)
        w = a if weighted else np.ones_like(r)
        vals = []
        ders = []
        for j in (0, 1):
            u, q = self._pair_at(j, t)
            vals.append(u)
            ders.append(q / (a * r ** (d - 1)))
        meas = wq * r ** d  # r^{d-1} dr = r^d dt
        Gg = np.zeros((2, 2))
        Gl = np.zeros((2, 2))
        for i in (0, 1):
            for j in (i, 1):
                grad = w * (ders[i] * ders[j] + self.mu * vals[i] * vals[j] / r ** 2)
                Gg[i, j] = Gg[j, i] = ang * float(np.sum(meas * grad))
                Gl[i, j] = Gl[j, i] = ang * float(np.sum(meas * w * vals[i] * vals[j]))
        out = (Gg, Gl)
        self._gram_cache[key] = out
        return out


def make_basis(profile: RadialProfile, l: int, lo: float, hi: float, dim: int,
               cache: dict | None = None, ball: bool = False) -> RadialBasis:
    """Fundamental pair for one (profile window, mode) with optional caching.

    The cache key includes the profile object itself (profiles hash by
    identity and are immutable), so media can share one dict across sweeps.
    """
    if cache is not None:
        key = (profile, l, lo, hi, dim, ball)
        b = cache.get(key)
        if b is not None:
            return b
    if profile.is_power:
        b = PowerBasis(profile, l, lo, hi, dim, ball=ball)
    else:
        if ball:
            raise ValidationError(
                "innermost layer must carry a power-law profile for exact regularity at 0")
        b = OdeBasis(profile, l, lo, hi, dim)
    if cache is not None:
        cache[key] = b
    return b


class FundamentalPair:
    """Public wrapper: (phi+, phi-) on an interval, phi+ normalized to 1 at
    the geometric midpoint, with derivative accessors and a Wronskian check."""

    def __init__(self, profile: RadialProfile, l: int, lo: float, hi: float, dim: int):
        if not (0.0 < lo < hi):
            raise ValidationError(f"need 0 < lo < hi, got [{lo}, {hi}]")
        profile.validate_elliptic()
        self._basis = make_basis(profile, l, lo, hi, dim)
        self.l = int(l)
        self.dim = int(dim)
        self.lo = float(lo)
        self.hi = float(hi)
        self.r_mid = math.sqrt(lo * hi)
        vp = float(self._basis.value(0, self.r_mid))
        vm = float(self._basis.value(1, self.r_mid))
        if vp == 0.0:
            raise SolverError("growing branch vanishes at the midpoint")
        self._sp = 1.0 / vp
        self._sm = 1.0 / vm if (vm != 0.0 and math.isfinite(vm)) else 1.0

    def phi_plus(self, r):
        return self._sp * self._basis.value(0, r)

    def phi_minus(self, r):
        return self._sm * self._basis.value(1, r)

    def dphi_plus(self, r):
        return self._sp * self._basis.deriv(0, r)

    def dphi_minus(self, r):
        return self._sm * self._basis.deriv(1, r)

    def wronskian(self, r):
        """phi+ q- - phi- q+ with q = a r^(d-1) phi'; constant in r."""
        r = np.asarray(r, dtype=float)
        return (self._sp * self._basis.value(0, r) * self._sm * self._basis.flux(1, r)
                - self._sm * self._basis.value(1, r) * self._sp * self._basis.flux(0, r))


def fundamental_pair(a: RadialProfile, l: int, interval: tuple[float, float],
                     dim: int) -> FundamentalPair:
    """Two independent solutions of the per-mode radial equation on the interval."""
    lo, hi = interval
    return FundamentalPair(a, l, float(lo), float(hi), dim)
