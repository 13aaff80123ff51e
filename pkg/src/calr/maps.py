"""Radial changes of variables and their action on conductivity profiles.

Two primitive maps cover everything needed for complementary layered media:
inversion in a sphere (Kelvin transform) and dilation about the origin.  Both
send radial profiles to radial profiles, and power-law profiles to power-law
profiles, which keeps the transported coefficients exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .profiles import RadialProfile, power_profile, profile_from_callable


@dataclass(frozen=True)
class KelvinMap:
    """Inversion r -> radius**2 / r.  Involutive; reverses interval orientation."""

    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValidationError(f"Kelvin radius must be positive and finite, got {self.radius}")

    def forward(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0):
            raise ValidationError("Kelvin map is undefined at r <= 0")
        out = self.radius ** 2 / r
        return float(out) if out.ndim == 0 else out

    def inverse(self, r):
        # Involution: the inverse map is the map itself.
        return self.forward(r)

    def point(self, x):
        x = np.asarray(x, dtype=float)
        n2 = float(np.dot(x, x))
        if n2 == 0.0:
            raise ValidationError("Kelvin map is undefined at the origin")
        return self.radius ** 2 * x / n2

    def image_interval(self, lo: float, hi: float) -> tuple[float, float]:
        # Orientation reverses: [lo, hi] -> [R^2/hi, R^2/lo].
        return self.radius ** 2 / hi, self.radius ** 2 / lo

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = -self.radius ** 2 / r ** 2
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DilationMap:
    """Scaling r -> factor * r about the origin."""

    factor: float

    def __post_init__(self) -> None:
        if not (self.factor > 0.0 and math.isfinite(self.factor)):
            raise ValidationError(f"Dilation factor must be positive and finite, got {self.factor}")

    def forward(self, r):
        r = np.asarray(r, dtype=float)
        out = self.factor * r
        return float(out) if out.ndim == 0 else out

    def inverse(self, r):
        r = np.asarray(r, dtype=float)
        out = r / self.factor
        return float(out) if out.ndim == 0 else out

    def point(self, x):
        x = np.asarray(x, dtype=float)
        return self.factor * x

    def image_interval(self, lo: float, hi: float) -> tuple[float, float]:
        return self.factor * lo, self.factor * hi

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, self.factor)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ComposedMap:
    """Composition of radial maps, applied left to right: parts[1](parts[0](r))."""

    parts: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValidationError("ComposedMap needs at least one part")

    def forward(self, r):
        for m in self.parts:
            r = m.forward(r)
        return r

    def inverse(self, r):
        for m in reversed(self.parts):
            r = m.inverse(r)
        return r

    def image_interval(self, lo: float, hi: float) -> tuple[float, float]:
        for m in self.parts:
            lo, hi = m.image_interval(lo, hi)
        return lo, hi


RadialMap = KelvinMap | DilationMap | ComposedMap


def kelvin_map(x, R: float):
    """Image of the point (or radius) x under inversion in the sphere of radius R."""
    m = KelvinMap(R)
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return m.forward(float(x))
    return m.point(x)


def compose(*maps: RadialMap) -> ComposedMap:
    """Flatten the given maps (applied left to right) into a single ComposedMap."""
    parts: list = []
    for m in maps:
        if isinstance(m, ComposedMap):
            parts.extend(m.parts)
        else:
            parts.append(m)
    return ComposedMap(tuple(parts))


def _pushforward_one(profile: RadialProfile, mapping, dim: int) -> RadialProfile:
    lo2, hi2 = mapping.image_interval(profile.lo, profile.hi)
    d = dim
    if isinstance(mapping, KelvinMap):
        R = mapping.radius
        if profile.is_power:
            e = profile.exponent
            # (F_* a)(rho) = (R^2/rho^2)^(d-2) a(R^2/rho) picks up the Jacobian
            # of the inversion; a power law stays a power law.
            coef = profile.coef * R ** (2.0 * e + 2.0 * (d - 2))
            return power_profile(coef, -e - 2.0 * (d - 2), lo2, hi2)

        base = profile

        def fn(rho, _b=base, _R=R, _d=d):
            return (_R ** 2 / rho ** 2) ** (_d - 2) * _b(_R ** 2 / rho)

        return profile_from_callable(fn, lo2, hi2, label=f"kelvin[{R:g}]*{base.label or base.kind}")

    if isinstance(mapping, DilationMap):
        lam = mapping.factor
        if profile.is_power:
            e = profile.exponent
            # (G_* a)(rho) = lam^(2-d) a(rho/lam); for a = c r^e this is
            # c lam^(2-d-e) rho^e.
            coef = profile.coef * lam ** (2.0 - d - e)
            return power_profile(coef, e, lo2, hi2)

        base = profile

        def fn(rho, _b=base, _lam=lam, _d=d):
            return _lam ** (2 - _d) * _b(rho / _lam)

        return profile_from_callable(fn, lo2, hi2, label=f"dilate[{lam:g}]*{base.label or base.kind}")

    raise ValidationError(f"Cannot push forward through {type(mapping).__name__}")


def pushforward(profile: RadialProfile, mapping: RadialMap, dim: int) -> RadialProfile:
    """Transport a radial conductivity profile through a radial change of variables.

    Uses the quasistatic pushforward (F_* a)(y) = a(x) |det DF(x)| / (F'(x))^2
    restricted to radial maps, for which it reduces to a one-line formula in
    each case.  Composition folds left to right, matching ComposedMap.forward.
    """
    if dim not in (2, 3):
        raise ValidationError(f"dim must be 2 or 3, got {dim}")
    if isinstance(mapping, ComposedMap):
        out = profile
        for m in mapping.parts:
            out = _pushforward_one(out, m, dim)
        return out
    return _pushforward_one(profile, mapping, dim)
