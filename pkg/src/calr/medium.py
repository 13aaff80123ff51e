"""Radially layered media with an optional plasmonic (negative-index) shell.

A medium is a contiguous stack of annular layers covering (0, R_Omega), each
carrying a positive radial profile; the shell layer additionally carries the
complex multiplier s_delta = -1 + i*delta in all flux conditions.

build_doubly_complementary assembles the cloaking structure: given the
annulus profile a on [r2, r3], the shell on [r1, r2] (r1 = r2^2/r3) is the
Kelvin(r2) transport of a, and the core annulus on [r1^2/r2, r1] is the
transport of a under the composed reflection, a pure dilation.  With those
choices the shell is simultaneously complementary to the outer annulus and
to the core ring, which is what makes the cloaking argument run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .maps import ComposedMap, DilationMap, KelvinMap, compose, pushforward
from .profiles import RadialProfile, constant_profile

_UNIT_LABEL = "unit"


def unit_profile(lo: float, hi: float) -> RadialProfile:
    return constant_profile(1.0, lo, hi)


@dataclass(frozen=True, eq=False)
class Layer:
    """One annular layer [lo, hi] with positive profile; the plasmonic flag
    selects the s_delta = -1 + i*delta multiplier in flux conditions."""

    lo: float
    hi: float
    profile: RadialProfile
    plasmonic: bool = False

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi):
            raise ValidationError(f"bad layer bounds [{self.lo}, {self.hi}]")
        pad = 1e-9 * self.hi
        if self.lo + pad < self.profile.lo or self.hi - pad > self.profile.hi:
            raise ValidationError(
                f"profile domain [{self.profile.lo}, {self.profile.hi}] does not cover "
                f"layer [{self.lo}, {self.hi}]")

    def sigma_factor(self, delta: float) -> complex:
        return complex(-1.0, delta) if self.plasmonic else complex(1.0, 0.0)


@dataclass(frozen=True)
class ComplementaryStructure:
    """Bookkeeping for a doubly complementary build: the four radii, the
    annulus profile, and the two reflections."""

    rc: float
    r1: float
    r2: float
    r3: float
    annulus: RadialProfile
    shell_map: KelvinMap       # fixes r2; shell <-> outer annulus
    core_map: DilationMap      # (G o F)^(-1): outer annulus -> core ring
    outer_map: KelvinMap       # G = Kelvin(r3); composition with shell_map gives core_map


@dataclass(frozen=True, eq=False)
class LayeredMedium:
    dim: int
    omega_radius: float
    layers: tuple
    complementary: ComplementaryStructure | None = None
    pair_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValidationError(f"dim must be 2 or 3, got {self.dim}")
        if not self.layers:
            raise ValidationError("medium needs at least one layer")
        if self.layers[0].lo != 0.0:
            raise ValidationError("innermost layer must start at r = 0")
        prev = None
        for lay in self.layers:
            if prev is not None and not math.isclose(lay.lo, prev.hi, rel_tol=1e-12):
                raise ValidationError(
                    f"layers not contiguous at r = {prev.hi} vs {lay.lo}")
            prev = lay
        if not math.isclose(self.layers[-1].hi, self.omega_radius, rel_tol=1e-12):
            raise ValidationError("outermost layer must end at the domain radius")
        if not self.layers[0].profile.is_power:
            raise ValidationError(
                "innermost layer must carry a power-law profile (regularity at the origin)")
        for lay in self.layers:
            lay.profile.validate_elliptic()

    @property
    def interfaces(self) -> tuple:
        return tuple(lay.hi for lay in self.layers[:-1])

    @property
    def shell(self) -> Layer | None:
        for lay in self.layers:
            if lay.plasmonic:
                return lay
        return None

    @property
    def shell_bounds(self) -> tuple[float, float]:
        sh = self.shell
        if sh is None:
            raise ValidationError("medium has no plasmonic shell")
        return sh.lo, sh.hi

    def layer_at(self, r: float) -> Layer:
        if not (0.0 <= r <= self.omega_radius):
            raise ValidationError(f"radius {r} outside domain (0, {self.omega_radius})")
        for lay in self.layers:
            if r <= lay.hi or lay is self.layers[-1]:
                return lay
        return self.layers[-1]

    def a(self, r):
        """Positive profile magnitude at radius r (scalar or array)."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r_arr)
        for i, ri in enumerate(r_arr):
            out[i] = float(self.layer_at(float(ri)).profile(float(ri)))
        return out[0] if np.isscalar(r) or np.asarray(r).ndim == 0 else out

    def sigma(self, r, delta: float):
        """Complex coefficient s_delta(r) * a(r)."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty(r_arr.shape, dtype=complex)
        for i, ri in enumerate(r_arr):
            lay = self.layer_at(float(ri))
            out[i] = lay.sigma_factor(delta) * float(lay.profile(float(ri)))
        return out[0] if np.isscalar(r) or np.asarray(r).ndim == 0 else out

    def with_positive_shell(self) -> "LayeredMedium":
        """Same geometry with every plasmonic flag cleared (sign sanity runs)."""
        lays = tuple(replace(l, plasmonic=False) if l.plasmonic else l for l in self.layers)
        return LayeredMedium(self.dim, self.omega_radius, lays, self.complementary)


def s_delta(medium: LayeredMedium, delta: float):
    """The coefficient function r -> s_delta(r) a(r) as a callable."""
    def fn(r):
        return medium.sigma(r, delta)
    return fn


def build_doubly_complementary(a: RadialProfile, r2: float, r3: float,
                               omega_radius: float, dim: int) -> LayeredMedium:
    """Assemble the cloaking medium: identity core ball, transported core ring
    on [r1^2/r2, r1], plasmonic shell on [r1, r2], the given annulus profile on
    [r2, r3], identity out to the domain boundary."""
    if not (0.0 < r2 < r3 < omega_radius):
        raise ValidationError(f"need 0 < r2 < r3 < R, got {r2}, {r3}, {omega_radius}")
    a = a.rewindow(r2, r3)
    a.validate_elliptic()
    r1 = r2 * r2 / r3
    rc = r1 * r1 / r2  # = r2^3 / r3^2
    F = KelvinMap(r2)
    G = KelvinMap(r3)
    # (G o F)(x) = (r3^2/r2^2) x maps the core ring onto the annulus; its
    # inverse, a contraction, transports a onto the core ring.
    GF_inv = DilationMap(r2 * r2 / (r3 * r3))
    shell_profile = pushforward(a, F, dim)
    core_profile = pushforward(a, GF_inv, dim)
    layers = (
        Layer(0.0, rc, unit_profile(0.0, rc)),
        Layer(rc, r1, core_profile),
        Layer(r1, r2, shell_profile, plasmonic=True),
        Layer(r2, r3, a),
        Layer(r3, omega_radius, unit_profile(r3, omega_radius)),
    )
    comp = ComplementaryStructure(rc=rc, r1=r1, r2=r2, r3=r3, annulus=a,
                                  shell_map=F, core_map=GF_inv, outer_map=G)
    return LayeredMedium(dim, omega_radius, layers, comp)


@dataclass(frozen=True)
class ComplementarityReport:
    passed: bool
    tol: float
    max_shell_mismatch: float
    max_core_mismatch: float
    sample_count: int
    details: str = ""


def verify_complementarity(m: LayeredMedium, sample_count: int = 256,
                           tol: float = 1e-10) -> ComplementarityReport:
    """Check |F_* A - A| and |(G o F)_* A - A| on the annulus by sampling.

    The shell profile is pushed forward through the Kelvin reflection and the
    core-ring profile through the expansion, both compared against the annulus
    profile at geometrically spaced radii.
    """
    comp = m.complementary
    if comp is None:
        raise ValidationError("medium does not carry a doubly complementary structure")
    shell_layer = m.shell
    if shell_layer is None:
        raise ValidationError("medium has no plasmonic shell to verify")
    core_layer = m.layer_at(0.5 * (comp.rc + comp.r1))
    annulus = m.layer_at(math.sqrt(comp.r2 * comp.r3)).profile

    rho = np.geomspace(comp.r2 * (1 + 1e-12), comp.r3 * (1 - 1e-12), sample_count)
    target = np.asarray(annulus(rho), dtype=float)
    scale = float(np.max(np.abs(target)))

    pushed_shell = pushforward(shell_layer.profile, comp.shell_map, m.dim)
    shell_vals = np.asarray(pushed_shell(rho), dtype=float)
    # The core ring maps onto the annulus under the expansion (G o F).
    GF = DilationMap(1.0 / comp.core_map.factor)
    pushed_core = pushforward(core_layer.profile, GF, m.dim)
    core_vals = np.asarray(pushed_core(rho), dtype=float)

    err_shell = float(np.max(np.abs(shell_vals - target))) / scale
    err_core = float(np.max(np.abs(core_vals - target))) / scale
    passed = err_shell <= tol and err_core <= tol
    detail = "" if passed else (
        f"shell mismatch {err_shell:.3e}, core mismatch {err_core:.3e} exceed tol {tol:.1e}")
    return ComplementarityReport(passed, tol, err_shell, err_core, sample_count, detail)
