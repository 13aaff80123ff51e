"""Exact per-mode solution of div(s_delta a grad u) = f in layered radial media.

The source is a flux-jump distribution on the circle/sphere r = r0.  Each
angular mode reduces to a small linear system: one coefficient for the
innermost ball (regularity at the origin) plus a (c, d) pair per remaining
slab, coupled by trace continuity and flux jump conditions at every
interface, closed by a Dirichlet condition at the domain boundary.

Bases are endpoint-normalized, which keeps the transfer matrices O(1) except
for genuine resonance denominators; rows are equilibrated before solving and
residuals are verified after.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, ValidationError
from .medium import Layer, LayeredMedium
from .radial import RadialBasis, angular_factor, make_basis, mu_of
from .spectra import ModeSpectrum, radial_index

try:  # SciPy >= 1.15
    from scipy.special import sph_harm_y as _sph_harm_y

    def _spherical_harmonic(l: int, k: int, theta: float, phi: float) -> complex:
        return complex(_sph_harm_y(l, k, theta, phi))
except ImportError:  # pragma: no cover - depends on installed SciPy
    from scipy.special import sph_harm as _sph_harm

    def _spherical_harmonic(l: int, k: int, theta: float, phi: float) -> complex:
        return complex(_sph_harm(k, l, phi, theta))

_RESIDUAL_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class Slab:
    lo: float
    hi: float
    profile: object
    plasmonic: bool
    layer_index: int
    is_ball: bool

    def sigma_factor(self, delta: float) -> complex:
        return complex(-1.0, delta) if self.plasmonic else complex(1.0, 0.0)


def _same_material(a: Layer, b: Layer) -> bool:
    if a.plasmonic != b.plasmonic:
        return False
    pa, pb = a.profile, b.profile
    if pa is pb:
        return True
    return (pa.is_power and pb.is_power
            and pa.coef == pb.coef and pa.exponent == pb.exponent)


class LayerGrid:
    """Layers split (if needed) at the source radius, with basis caching."""

    def __init__(self, medium: LayeredMedium, source_radius: float | None = None):
        self.medium = medium
        self.source_radius = source_radius
        slabs = []
        source_if = None
        if source_radius is not None:
            r0 = float(source_radius)
            if not (0.0 < r0 < medium.omega_radius):
                raise ValidationError(
                    f"source radius {r0} outside (0, {medium.omega_radius})")
        for idx, lay in enumerate(medium.layers):
            cut = None
            if source_radius is not None:
                r0 = float(source_radius)
                if math.isclose(r0, lay.hi, rel_tol=1e-12) and idx < len(medium.layers) - 1:
                    nxt = medium.layers[idx + 1]
                    if not _same_material(lay, nxt):
                        raise ValidationError(
                            f"source radius {r0} sits on a material interface")
                    cut = "mark"
                elif lay.lo < r0 < lay.hi and not math.isclose(r0, lay.lo, rel_tol=1e-12):
                    cut = r0
            if cut is None or cut == "mark":
                slabs.append(Slab(lay.lo, lay.hi, lay.profile, lay.plasmonic, idx,
                                  is_ball=(lay.lo == 0.0)))
                if cut == "mark":
                    source_if = len(slabs) - 1
            else:
                slabs.append(Slab(lay.lo, cut, lay.profile, lay.plasmonic, idx,
                                  is_ball=(lay.lo == 0.0)))
                source_if = len(slabs) - 1
                slabs.append(Slab(cut, lay.hi, lay.profile, lay.plasmonic, idx,
                                  is_ball=False))
        if source_radius is not None and source_if is None:
            raise ValidationError(
                f"source radius {source_radius} did not land inside any layer")
        self.slabs = tuple(slabs)
        self.source_interface = source_if

    @property
    def n_unknowns(self) -> int:
        return 2 * len(self.slabs) - 1

    def basis(self, slab_index: int, l: int) -> RadialBasis:
        s = self.slabs[slab_index]
        return make_basis(s.profile, l, s.lo, s.hi, self.medium.dim,
                          cache=self.medium.pair_cache, ball=s.is_ball)

    def slab_index_at(self, r: float, side: str = "inner") -> int:
        if not (0.0 <= r <= self.medium.omega_radius * (1 + 1e-12)):
            raise ValidationError(f"radius {r} outside the domain")
        for i, s in enumerate(self.slabs):
            if r < s.hi or i == len(self.slabs) - 1:
                if side == "outer" and math.isclose(r, s.hi, rel_tol=1e-12) \
                        and i < len(self.slabs) - 1:
                    return i + 1
                if side == "inner" and i > 0 and s.lo > 0.0 \
                        and math.isclose(r, s.lo, rel_tol=1e-12):
                    return i - 1
                return i
        return len(self.slabs) - 1

    def prewarm(self, radial_indices) -> None:
        """Build all bases up front so parallel sweeps only read the cache."""
        for l in radial_indices:
            for j in range(len(self.slabs)):
                self.basis(j, l)


class ModeSystem:
    """Assembled transfer system for one radial degree at one delta."""

    def __init__(self, grid: LayerGrid, l: int, delta: float,
                 boundary_value: complex = 0.0):
        if delta < 0.0:
            raise ValidationError(f"delta must be >= 0, got {delta}")
        self.grid = grid
        self.l = int(l)
        self.delta = float(delta)
        self.boundary_value = complex(boundary_value)
        self.resonance_singular = (delta == 0.0
                                   and any(s.plasmonic for s in grid.slabs))
        self._assemble()

    def _col_slice(self, j: int):
        # slab 0 contributes one column (phi+ only), others two
        return (0, 1) if j == 0 else (2 * j - 1, 2 * j + 1)

    def _assemble(self):
        grid = self.grid
        slabs = grid.slabs
        n = grid.n_unknowns
        dim = grid.medium.dim
        A = np.zeros((n, n), dtype=complex)
        b_src = np.zeros(n, dtype=complex)
        b_bv = np.zeros(n, dtype=complex)
        bases = [grid.basis(j, self.l) for j in range(len(slabs))]
        self.bases = bases
        row = 0
        for i in range(len(slabs) - 1):
            R = slabs[i].hi
            sl, sr = slabs[i], slabs[i + 1]
            cl0, cl1 = self._col_slice(i)
            cr0, cr1 = self._col_slice(i + 1)
            bl, br = bases[i], bases[i + 1]
            # trace continuity
            for c, j in zip(range(cl0, cl1), range(2)):
                A[row, c] += complex(float(bl.value(j, R)))
            for c, j in zip(range(cr0, cr1), range(2)):
                A[row, c] -= complex(float(br.value(j, R)))
            row += 1
            # flux jump: outer minus inner equals the source density there
            sig_l = sl.sigma_factor(self.delta)
            sig_r = sr.sigma_factor(self.delta)
            for c, j in zip(range(cr0, cr1), range(2)):
                A[row, c] += sig_r * float(br.flux(j, R))
            for c, j in zip(range(cl0, cl1), range(2)):
                A[row, c] -= sig_l * float(bl.flux(j, R))
            if grid.source_interface == i:
                b_src[row] = R ** (dim - 1)
            row += 1
        # Dirichlet closure at the outer boundary
        R = slabs[-1].hi
        c0, c1 = self._col_slice(len(slabs) - 1)
        blast = bases[-1]
        for c, j in zip(range(c0, c1), range(2)):
            A[row, c] = complex(float(blast.value(j, R)))
        b_bv[row] = 1.0
        row += 1
        assert row == n
        # row equilibration
        scale = np.max(np.abs(A), axis=1)
        scale[scale == 0.0] = 1.0
        self.matrix = A
        self.row_scale = scale
        self._A_eq = A / scale[:, None]
        self._b_src_eq = b_src / scale
        self._b_bv_eq = b_bv / scale
        self._unit_solutions = None

    def condition(self) -> float:
        return float(np.linalg.cond(self._A_eq))

    def _solve_units(self):
        if self._unit_solutions is None:
            if self.resonance_singular:
                raise SolverError(
                    f"mode {self.l}: system is resonance-singular at delta = 0; "
                    "solve requires delta > 0")
            rhs = np.stack([self._b_src_eq, self._b_bv_eq], axis=1)
            try:
                sols = np.linalg.solve(self._A_eq, rhs)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"mode {self.l}: singular transfer system ({exc})")
            self._unit_solutions = (sols[:, 0], sols[:, 1])
        return self._unit_solutions

    def solve(self, g: complex = 1.0) -> np.ndarray:
        """Coefficients (c_j, d_j) per slab for flux-jump amplitude g plus the
        assembled boundary value; the innermost d is identically zero."""
        xs, xb = self._solve_units()
        x = complex(g) * xs + self.boundary_value * xb
        return self._pack(x)

    def _pack(self, x: np.ndarray) -> np.ndarray:
        nslab = len(self.grid.slabs)
        out = np.zeros((nslab, 2), dtype=complex)
        out[0, 0] = x[0]
        for j in range(1, nslab):
            c0, c1 = self._col_slice(j)
            out[j, 0] = x[c0]
            out[j, 1] = x[c0 + 1]
        return out

    def residual(self, coeffs: np.ndarray, g: complex = 1.0) -> float:
        """Max interface mismatch relative to the local solution scale."""
        x = np.zeros(self.grid.n_unknowns, dtype=complex)
        x[0] = coeffs[0, 0]
        for j in range(1, len(self.grid.slabs)):
            c0, _ = self._col_slice(j)
            x[c0] = coeffs[j, 0]
            x[c0 + 1] = coeffs[j, 1]
        b = complex(g) * self._b_src_eq + self.boundary_value * self._b_bv_eq
        num = np.abs(self._A_eq @ x - b)
        den = np.abs(self._A_eq) @ np.abs(x) + np.abs(b)
        den[den == 0.0] = 1.0
        return float(np.max(num / den))


def assemble_mode_system(m: LayeredMedium, src: ModeSpectrum | None, l: int,
                         delta: float, boundary_value: complex = 0.0,
                         grid: LayerGrid | None = None) -> ModeSystem:
    """Transfer system for radial degree l; src supplies the source radius
    (None places no source and the system is driven by boundary_value)."""
    if grid is None:
        grid = LayerGrid(m, src.source_radius if src is not None else None)
    return ModeSystem(grid, l, delta, boundary_value)


class Field:
    """Solved multi-mode field: per-slab (c, d) coefficient pairs per mode key."""

    def __init__(self, medium: LayeredMedium, spectrum: ModeSpectrum | None,
                 delta: float, grid: LayerGrid, coeffs: dict,
                 max_residual: float = 0.0):
        self.medium = medium
        self.spectrum = spectrum
        self.delta = float(delta)
        self.grid = grid
        self.coeffs = coeffs
        self.max_residual = float(max_residual)

    @property
    def dim(self) -> int:
        return self.medium.dim

    def keys(self):
        return self.coeffs.keys()

    def scaled(self, factor: complex) -> "Field":
        sc = {k: v * factor for k, v in self.coeffs.items()}
        spec = self.spectrum.scaled(factor) if self.spectrum is not None else None
        return Field(self.medium, spec, self.delta, self.grid, sc, self.max_residual)

    def _basis(self, slab_index: int, key) -> RadialBasis:
        return self.grid.basis(slab_index, radial_index(key))

    def radial_value(self, key, r: float, side: str = "inner") -> complex:
        j = self.grid.slab_index_at(r, side)
        c, d = self.coeffs[key][j]
        b = self._basis(j, key)
        val = c * float(b.value(0, r))
        if not self.grid.slabs[j].is_ball:
            val += d * float(b.value(1, r))
        return val

    def radial_flux(self, key, r: float, side: str = "inner",
                    signed: bool = True) -> complex:
        """q = s a r^(d-1) du/dr of one mode's radial part (s included if signed)."""
        j = self.grid.slab_index_at(r, side)
        c, d = self.coeffs[key][j]
        b = self._basis(j, key)
        val = c * float(b.flux(0, r))
        if not self.grid.slabs[j].is_ball:
            val += d * float(b.flux(1, r))
        if signed:
            val *= self.grid.slabs[j].sigma_factor(self.delta)
        return val

    def evaluate(self, x) -> complex:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValidationError(f"point must have {self.dim} coordinates")
        r = float(np.linalg.norm(x))
        if r > self.medium.omega_radius * (1 + 1e-12):
            raise ValidationError(f"point radius {r} outside the domain")
        total = 0.0 + 0.0j
        if r == 0.0:
            for key, cs in self.coeffs.items():
                if radial_index(key) == 0:
                    amp = cs[0, 0]  # phi+ = 1 at the origin
                    total += amp * (1.0 if self.dim == 2
                                    else _spherical_harmonic(0, 0, 0.0, 0.0))
            return total
        if self.dim == 2:
            theta = math.atan2(x[1], x[0])
            for key in self.coeffs:
                total += self.radial_value(key, r) * cmath.exp(1j * key * theta)
        else:
            theta = math.acos(max(-1.0, min(1.0, x[2] / r)))
            phi = math.atan2(x[1], x[0])
            for key in self.coeffs:
                l, k = key
                total += self.radial_value(key, r) * _spherical_harmonic(l, k, theta, phi)
        return total

    def _windows(self, lo: float, hi: float):
        for j, s in enumerate(self.grid.slabs):
            wlo, whi = max(lo, s.lo), min(hi, s.hi)
            if whi > wlo * (1 + 1e-15) or (wlo == 0.0 and whi > 0.0):
                yield j, wlo, whi

    def h1_energy(self, lo: float, hi: float, include_l2: bool = False,
                  weight: str = "none") -> float | complex:
        """Sum over modes of the windowed radial energy.

        weight: "none" for plain |grad u|^2 (+ |u|^2), "coefficient" for the
        a(r)-weighted version, "sigma" for the complex s_delta a weighting.
        """
        if not (0.0 <= lo <= hi <= self.medium.omega_radius * (1 + 1e-12)):
            raise ValidationError(f"energy window [{lo}, {hi}] outside the domain")
        use_sigma = weight == "sigma"
        weighted = weight in ("coefficient", "sigma")
        if weight not in ("none", "coefficient", "sigma"):
            raise ValidationError(f"unknown weight {weight!r}")
        total: complex = 0.0
        for j, wlo, whi in self._windows(lo, hi):
            basis_cache = {}
            sig = self.grid.slabs[j].sigma_factor(self.delta) if use_sigma else 1.0
            for key, cs in self.coeffs.items():
                l = radial_index(key)
                b = basis_cache.get(l)
                if b is None:
                    b = self._basis(j, key)
                    basis_cache[l] = b
                Gg, Gl = b.gram(wlo, whi, weighted)
                v = cs[j]
                e = v.conj() @ Gg @ v
                if include_l2:
                    e = e + v.conj() @ Gl @ v
                total += sig * e
        return total if use_sigma else float(total.real)

    def trace_coefficients(self, R: float, side: str = "inner") -> dict:
        return {key: self.radial_value(key, R, side) for key in self.coeffs}

    def flux_coefficients(self, R: float, side: str = "inner",
                          signed: bool = True) -> dict:
        return {key: self.radial_flux(key, R, side, signed) for key in self.coeffs}

    def trace_norm(self, R: float, s: float) -> float:
        return trace_norm_from_coeffs(self.trace_coefficients(R), R, s, self.dim)

    def source_pairing(self) -> complex:
        """<f, conj(u)> = surface integral of the source density times conj(u)."""
        if self.spectrum is None:
            raise ValidationError("field has no source spectrum")
        r0 = self.spectrum.source_radius
        area = angular_factor(self.dim) * r0 ** (self.dim - 1)
        tot = 0.0 + 0.0j
        for key, g in self.spectrum.entries:
            if key in self.coeffs:
                tot += g * np.conj(self.radial_value(key, r0))
        return area * tot

    def energy_identity_residual(self) -> float:
        """Relative defect in  integral(s_delta a |grad u|^2) = -<f, conj(u)>."""
        lhs = self.h1_energy(0.0, self.medium.omega_radius, weight="sigma")
        rhs = -self.source_pairing()
        den = max(abs(lhs), abs(rhs), 1e-300)
        return abs(lhs - rhs) / den


def trace_norm_from_coeffs(coeffs: dict, R: float, s: float, dim: int) -> float:
    """H^s norm on the circle/sphere of radius R from mode coefficients:
    area factor (2 pi R or R^2) times sum (1+l^2)^s |g|^2, then sqrt."""
    if s not in (0.5, -0.5, 0.0):
        raise ValidationError(f"trace norm defined for s in {{1/2, 0, -1/2}}, got {s}")
    area = 2.0 * math.pi * R if dim == 2 else R * R
    tot = 0.0
    for key, g in coeffs.items():
        l = radial_index(key)
        tot += (1.0 + l * l) ** s * abs(g) ** 2
    return math.sqrt(area * tot)


def source_norm(spectrum: ModeSpectrum, s: float = -0.5) -> float:
    """Sobolev norm of the source density on its own circle/sphere."""
    return trace_norm_from_coeffs(dict(spectrum.entries), spectrum.source_radius,
                                  s, spectrum.dim)


def solve_field(m: LayeredMedium, src: ModeSpectrum, delta: float,
                L: int | None = None) -> Field:
    """Solve div(s_delta a grad u) = f for the circle source, mode by mode."""
    if not (0.0 < delta <= 1.0):
        raise ValidationError(f"delta must lie in (0, 1], got {delta}")
    if src.dim != m.dim:
        raise ValidationError("source and medium dimensions differ")
    spec = src if L is None else src.truncated(L)
    grid = LayerGrid(m, spec.source_radius)
    coeffs: dict = {}
    worst = 0.0
    for l, members in sorted(spec.radial_groups().items()):
        sys = ModeSystem(grid, l, delta)
        unit = sys.solve(1.0)
        res = sys.residual(unit, 1.0)
        worst = max(worst, res)
        if res > _RESIDUAL_TOL:
            raise SolverError(
                f"mode {l}: interface residual {res:.2e} exceeds {_RESIDUAL_TOL:.0e}")
        for key, g in members:
            coeffs[key] = unit * complex(g)
    return Field(m, spec, delta, grid, coeffs, worst)
