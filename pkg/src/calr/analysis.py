"""Cross-checks that sit beside the solver rather than inside it: the
log-convexity (three spheres) inequality for harmonic pieces, reflected
plasmon pairs on an annulus, density of the pair family against smooth
boundary data, and the Cauchy-data rigidity of the pair.

These run on exact per-mode quantities, so each check either holds to
round-off or fails structurally; none of them depend on the loss parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .maps import KelvinMap, pushforward
from .medium import Layer, LayeredMedium
from .profiles import RadialProfile, constant_profile
from .radial import PowerBasis
from .singularity import _LN, _power_raw
from .solver import Field, LayerGrid, ModeSystem
from .spectra import radial_index


# --- three spheres -----------------------------------------------------------

@dataclass(frozen=True)
class ThreeSpheresReport:
    radii: tuple
    alpha: float
    norms: tuple
    ratio: float
    tol: float
    passed: bool
    note: str = ""


def _harmonic_coefficients(u, radii) -> dict:
    """Growing-mode coefficients, either given directly or pulled out of a
    solved field whose slab around the radii is a constant-coefficient region."""
    if isinstance(u, dict):
        return {k: complex(v) for k, v in u.items()}
    if not isinstance(u, Field):
        raise ValidationError("expected a Field or a mode-coefficient dict")
    idx = {u.grid.slab_index_at(float(r)) for r in radii}
    if len(idx) != 1:
        raise ValidationError(
            "three-spheres radii must lie in a single material slab")
    j = idx.pop()
    slab = u.grid.slabs[j]
    if not slab.profile.is_constant:
        raise ValidationError("three-spheres check needs a harmonic region")
    out = {}
    rmin = min(float(r) for r in radii)
    rmax = max(float(r) for r in radii)
    for key in u.coeffs:
        basis = u.grid.basis(j, radial_index(key))
        if not isinstance(basis, PowerBasis):
            raise ValidationError(f"mode {key}: region is not power-law")
        raw = _power_raw(basis, u.coeffs[key][j])
        grow = 0.0 + 0.0j
        dmag = 0.0
        l = radial_index(key)
        for coef, k in raw:
            if k == _LN:
                dmag += abs(coef) * max(abs(math.log(rmin)),
                                        abs(math.log(rmax)))
            elif abs(k - l) <= 1e-9 * (1 + l):
                grow = coef
            else:
                kk = float(k)
                dmag += abs(coef) * max(rmin ** kk, rmax ** kk)
        gmag = abs(grow) * rmin ** l
        if dmag > 1e-12 * max(gmag, dmag):
            raise ValidationError(
                f"mode {key}: decaying part is not negligible "
                f"({dmag:.2e} against {gmag:.2e}); the field is not harmonic "
                "through the origin here")
        out[key] = grow
    return out


def _surface_norm(coeffs: dict, R: float, dim: int) -> float:
    area = 2.0 * math.pi * R if dim == 2 else R * R
    tot = 0.0
    for key, a in coeffs.items():
        l = radial_index(key)
        tot += abs(a) ** 2 * R ** (2 * l)
    return math.sqrt(area * tot)


def three_spheres_check(u, radii, dim: int = 2,
                        tol: float = 1e-10) -> ThreeSpheresReport:
    """Surface L2 norms at three radii against the log-convexity bound
    ||u||_{R2} <= ||u||_{R1}^alpha ||u||_{R3}^(1-alpha)."""
    if len(radii) != 3:
        raise ValidationError("need exactly three radii")
    r1, r2, r3 = (float(r) for r in radii)
    if not (0.0 < r1 < r2 < r3):
        raise ValidationError(f"radii must increase, got {radii}")
    if isinstance(u, Field):
        dim = u.dim
    coeffs = _harmonic_coefficients(u, radii)
    alpha = math.log(r3 / r2) / math.log(r3 / r1)
    n1, n2, n3 = (_surface_norm(coeffs, r, dim) for r in (r1, r2, r3))
    if n2 == 0.0:
        return ThreeSpheresReport((r1, r2, r3), alpha, (n1, n2, n3), 0.0,
                                  tol, True, note="zero field")
    ratio = n2 / (n1 ** alpha * n3 ** (1.0 - alpha))
    return ThreeSpheresReport((r1, r2, r3), alpha, (n1, n2, n3), ratio,
                              tol, ratio <= 1.0 + tol)


# --- plasmon pairs -----------------------------------------------------------

def plasmon_medium(a: RadialProfile, dim: int = 2) -> LayeredMedium:
    """Unit core, the given annulus, and its inversion image stacked outside:
    the reflecting-complementary sandwich the pair construction lives on."""
    R1, R2 = a.lo, a.hi
    if not (0.0 < R1 < R2):
        raise ValidationError(f"profile window ({R1}, {R2}) is not an annulus")
    R3 = R2 * R2 / R1
    outer = pushforward(a, KelvinMap(R2), dim)
    layers = (Layer(0.0, R1, constant_profile(1.0, 0.0, R1)),
              Layer(R1, R2, a),
              Layer(R2, R3, outer))
    return LayeredMedium(dim, R3, layers)


@dataclass(frozen=True)
class PlasmonPair:
    """v solves the boundary-driven problem on the sandwich; w is the
    inversion transport of its outer-layer restriction back onto the annulus.
    Fixed-circle identities: w = v and the fluxes are opposite at R2."""
    l: int
    dim: int
    radii: tuple          # (R1, R2, R3)
    medium: LayeredMedium
    v_field: Field
    w_cd: np.ndarray      # annulus-basis coefficients of the l = 0 companion
    trace_match: float
    flux_match: float

    def v_value(self, r: float) -> complex:
        return self.v_field.radial_value(self._key, r)

    def v_flux(self, r: float) -> complex:
        return self.v_field.radial_flux(self._key, r, signed=False)

    def w_value(self, r: float) -> complex:
        R1, R2, _ = self.radii
        if not (R1 * (1 - 1e-12) <= r <= R2 * (1 + 1e-12)):
            raise ValidationError(f"w lives on ({R1}, {R2}), got r={r}")
        if self.l == 0:
            b = self._annulus_basis()
            return self.w_cd[0] * float(b.value(0, r)) \
                + self.w_cd[1] * float(b.value(1, r))
        return self.v_field.radial_value(self._key, R2 * R2 / r)

    def w_flux(self, r: float) -> complex:
        R1, R2, _ = self.radii
        if not (R1 * (1 - 1e-12) <= r <= R2 * (1 + 1e-12)):
            raise ValidationError(f"w lives on ({R1}, {R2}), got r={r}")
        if self.l == 0:
            b = self._annulus_basis()
            return self.w_cd[0] * float(b.flux(0, r)) \
                + self.w_cd[1] * float(b.flux(1, r))
        return -self.v_field.radial_flux(self._key, R2 * R2 / r, signed=False)

    @property
    def _key(self):
        return self.l if self.dim == 2 else (self.l, 0)

    def _annulus_basis(self):
        return self.v_field.grid.basis(1, 0)


def plasmon_pair(a: RadialProfile, l: int, dim: int = 2) -> PlasmonPair:
    if l < 0:
        raise ValidationError(f"mode degree must be >= 0, got {l}")
    m = plasmon_medium(a, dim)
    R1, R2 = a.lo, a.hi
    R3 = m.omega_radius
    grid = LayerGrid(m, None)
    sys = ModeSystem(grid, l, 0.0, boundary_value=1.0)
    packed = sys.solve(0.0)
    key = l if dim == 2 else (l, 0)
    v = Field(m, None, 0.0, grid, {key: packed})
    w_cd = np.zeros(2)
    if l == 0:
        # companion vanishing at the inner edge, trace one at the outer edge
        b = grid.basis(1, 0)
        M = np.array([[float(b.value(0, R1)), float(b.value(1, R1))],
                      [float(b.value(0, R2)), float(b.value(1, R2))]])
        w_cd = np.linalg.solve(M, np.array([0.0, 1.0]))
    pair = PlasmonPair(l, dim, (R1, R2, R3), m, v, w_cd, 0.0, 0.0)
    vr = pair.v_value(R2)
    wr = pair.w_value(R2)
    tm = abs(wr - vr) / max(abs(vr), abs(wr), 1e-300)
    if l == 0:
        fm = 0.0
    else:
        qv = pair.v_flux(R2)
        qw = pair.w_flux(R2)
        fm = abs(qw + qv) / max(abs(qv), abs(qw), 1e-300)
    object.__setattr__(pair, "trace_match", tm)
    object.__setattr__(pair, "flux_match", fm)
    return pair


# --- rigidity ----------------------------------------------------------------

@dataclass(frozen=True)
class RigidityRow:
    l: int
    dirichlet_det: float
    neumann_det: float
    cauchy_det: float
    degenerate: bool


@dataclass(frozen=True)
class RigidityReport:
    rows: tuple
    monopole_flux: float
    monopole_positive: bool
    all_nondegenerate: bool
    tol: float


def rigidity_check(a: RadialProfile, modes, dim: int = 2, fake: bool = False,
                   tol: float = 1e-12) -> RigidityReport:
    """Nondegeneracy of the pair's Cauchy data at the inner circle.

    Per mode: the trace difference v - w, the flux sum, and the 2x2
    determinant of [values; fluxes] are all normalized and must stay away
    from zero.  fake=True swaps w for v's own restriction, which must be
    caught (the dets collapse); it exists to prove the check can fail.
    """
    rows = []
    for l in sorted(set(int(x) for x in modes)):
        if l == 0:
            continue
        pp = plasmon_pair(a, l, dim)
        R1 = pp.radii[0]
        v, qv = pp.v_value(R1), pp.v_flux(R1)
        if fake:
            w, qw = v, qv
        else:
            w, qw = pp.w_value(R1), pp.w_flux(R1)
        dd = abs(v - w) / max(abs(v), abs(w), 1e-300)
        nd = abs(qv + qw) / max(abs(qv), abs(qw), 1e-300)
        cd = abs(v * qw - w * qv) / max(abs(v * qw), abs(w * qv), 1e-300)
        rows.append(RigidityRow(l, dd, nd, cd,
                                degenerate=min(dd, cd) < tol))
    pp0 = plasmon_pair(a, 0, dim)
    R1 = pp0.radii[0]
    ang = 2.0 * math.pi if dim == 2 else 4.0 * math.pi
    mono = ang * float(np.real(pp0.w_flux(R1)))
    return RigidityReport(tuple(rows), mono, mono > 0.0,
                          all(not r.degenerate for r in rows), tol)


# --- density of the pair family ---------------------------------------------

@dataclass(frozen=True)
class DensityReport:
    family: int
    m: int
    residuals: tuple          # relative residual per target
    target_norms: tuple
    condition: float          # conditioning of the matched system
    degenerate_modes: tuple


def _h_half_sq(l: int, g, s: float) -> float:
    return (1.0 + l * l) ** s * abs(g) ** 2


def density_residual(targets, a: RadialProfile, family: int = 1, m: int = 16,
                     dim: int = 2) -> DensityReport:
    """Relative tail left after matching boundary data on the inner circle
    with the first m plasmon-pair elements.

    family 1 approximates traces with {v_l - w_l} in H^{1/2}; family 2
    approximates densities with {1} and the flux sums in H^{-1/2}; family 3
    matches (trace, flux) jointly with per-mode 2x2 solves.  Every element
    carries one angular mode, so matching is per-mode and the residual is
    exactly the weighted tail; it can only shrink as m grows.
    """
    if family not in (1, 2, 3):
        raise ValidationError(f"family must be 1, 2 or 3, got {family}")
    if m < 1:
        raise ValidationError(f"need m >= 1, got {m}")
    R1 = a.lo
    area = 2.0 * math.pi * R1 if dim == 2 else R1 * R1
    pairs = {l: plasmon_pair(a, l, dim) for l in range(0, m + 1)}
    degenerate = []
    # per-mode matchability and element size
    elem = {}
    for l in range(0, m + 1):
        pp = pairs[l]
        if family == 1:
            if l == 0:
                continue
            e = pp.v_value(R1) - pp.w_value(R1)
            if abs(e) < 1e-14:
                degenerate.append(l)
                continue
            elem[l] = abs(e)
        elif family == 2:
            if l == 0:
                elem[l] = 1.0
                continue
            q = (pp.v_flux(R1) + pp.w_flux(R1)) / R1 ** (dim - 1)
            if abs(q) < 1e-14:
                degenerate.append(l)
                continue
            elem[l] = abs(q)
        else:
            v, qv = pp.v_value(R1), pp.v_flux(R1) / R1 ** (dim - 1)
            w, qw = pp.w_value(R1), pp.w_flux(R1) / R1 ** (dim - 1)
            M = np.array([[v, w], [qv, qw]], dtype=complex)
            c = np.linalg.cond(M)
            if not np.isfinite(c) or c > 1e14:
                degenerate.append(l)
                continue
            elem[l] = c
    cond = 1.0
    if elem:
        vals = [v for v in elem.values() if v > 0]
        cond = (max(elem.values()) if family == 3
                else max(vals) / min(vals))
    matchable = set(elem)
    s_trace, s_flux = 0.5, -0.5
    residuals = []
    norms = []
    for tgt in targets:
        if family == 3:
            tr, fl = tgt
            tot = sum(_h_half_sq(radial_index(k), g, s_trace)
                      for k, g in tr.items())
            tot += sum(_h_half_sq(radial_index(k), g, s_flux)
                       for k, g in fl.items())
            tail = sum(_h_half_sq(radial_index(k), g, s_trace)
                       for k, g in tr.items()
                       if radial_index(k) not in matchable)
            tail += sum(_h_half_sq(radial_index(k), g, s_flux)
                        for k, g in fl.items()
                        if radial_index(k) not in matchable)
        else:
            s = s_trace if family == 1 else s_flux
            tot = sum(_h_half_sq(radial_index(k), g, s) for k, g in tgt.items())
            tail = sum(_h_half_sq(radial_index(k), g, s) for k, g in tgt.items()
                       if radial_index(k) not in matchable)
        tnorm = math.sqrt(area * tot)
        norms.append(tnorm)
        residuals.append(math.sqrt(area * tail) / tnorm if tnorm > 0 else 0.0)
    return DensityReport(family, m, tuple(residuals), tuple(norms),
                         float(cond), tuple(degenerate))
