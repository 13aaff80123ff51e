"""Sources concentrated on a circle or sphere, stored as mode coefficients.

A spectrum fixes the source radius r0 and a finite table of angular mode
coefficients g: the source acts as the flux-jump distribution
[sigma a du/dr](r0) = g_mode on each mode.  2D keys are signed integers
(e^(i l theta)); 3D keys are (l, k) with |k| <= l (orthonormal harmonics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

TAIL_GEOMETRIC = "geometric"
TAIL_FINITE = "finite"


def radial_index(key) -> int:
    """Degree of the radial equation a mode key couples to."""
    if isinstance(key, tuple):
        return int(key[0])
    return abs(int(key))


def _validate_key(key, dim: int):
    if dim == 2:
        if isinstance(key, tuple):
            raise ValidationError(f"2D mode keys are signed integers, got {key!r}")
        return int(key)
    if not (isinstance(key, tuple) and len(key) == 2):
        raise ValidationError(f"3D mode keys are (l, k) pairs, got {key!r}")
    l, k = int(key[0]), int(key[1])
    if l < 0 or abs(k) > l:
        raise ValidationError(f"3D mode key needs 0 <= |k| <= l, got {key!r}")
    return (l, k)


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Immutable source description: radius, coefficient table, tail metadata.

    tail = "geometric" marks a table that stands for an infinite geometric
    family truncated at the cutoff (ratio in tail_ratio); "finite" marks a
    genuinely finite band.  Extendability logic branches on this.
    """

    dim: int
    source_radius: float
    entries: tuple  # sorted tuple of (key, complex coefficient)
    tail: str = TAIL_FINITE
    tail_ratio: float | None = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValidationError(f"dim must be 2 or 3, got {self.dim}")
        if not (self.source_radius > 0.0 and math.isfinite(self.source_radius)):
            raise ValidationError(f"source radius must be positive, got {self.source_radius}")
        if self.tail not in (TAIL_GEOMETRIC, TAIL_FINITE):
            raise ValidationError(f"unknown tail kind {self.tail!r}")
        seen = set()
        energy = 0.0
        for key, g in self.entries:
            k = _validate_key(key, self.dim)
            if k in seen:
                raise ValidationError(f"duplicate mode key {key!r}")
            seen.add(k)
            g = complex(g)
            if not (math.isfinite(g.real) and math.isfinite(g.imag)):
                raise ValidationError(f"non-finite coefficient at mode {key!r}")
            energy += (1 + radial_index(k)) * abs(g) ** 2
        if not math.isfinite(energy):
            raise ValidationError("spectrum has non-finite mode energy")

    @property
    def coefficients(self) -> dict:
        return dict(self.entries)

    @property
    def cutoff(self) -> int:
        return max((radial_index(k) for k, _ in self.entries), default=0)

    def radial_groups(self) -> dict:
        """Group mode keys by the radial degree they share a solve with."""
        groups: dict = {}
        for key, g in self.entries:
            groups.setdefault(radial_index(key), []).append((key, g))
        return groups

    def scaled(self, factor: complex) -> "ModeSpectrum":
        ents = tuple((k, complex(g) * factor) for k, g in self.entries)
        return ModeSpectrum(self.dim, self.source_radius, ents, self.tail, self.tail_ratio)

    def truncated(self, max_radial: int) -> "ModeSpectrum":
        ents = tuple((k, g) for k, g in self.entries if radial_index(k) <= max_radial)
        return ModeSpectrum(self.dim, self.source_radius, ents, self.tail, self.tail_ratio)


def _sorted_entries(table: dict) -> tuple:
    def sort_key(item):
        k = item[0]
        return (radial_index(k),) + ((k,) if not isinstance(k, tuple) else tuple(k))
    return tuple(sorted(((k, complex(v)) for k, v in table.items()), key=sort_key))


def explicit_spectrum(coefficients, source_radius: float, dim: int = 2) -> ModeSpectrum:
    """Finite-band source.  A plain list maps to modes l = 1..len(list); a dict
    maps keys directly (signed l in 2D, (l, k) in 3D)."""
    if isinstance(coefficients, dict):
        table = dict(coefficients)
    else:
        table = {}
        for i, c in enumerate(coefficients, start=1):
            key = i if dim == 2 else (i, 0)
            table[key] = complex(c)
    return ModeSpectrum(dim, float(source_radius), _sorted_entries(table), TAIL_FINITE)


def geometric_spectrum(t: float, max_mode: int, source_radius: float,
                       dim: int = 2) -> ModeSpectrum:
    """g_l = t^l for l = 1..max_mode; stands for the full geometric family."""
    if not (0.0 < t < 1.0):
        raise ValidationError(f"geometric ratio must lie in (0,1), got {t}")
    if max_mode < 1:
        raise ValidationError("geometric spectrum needs max_mode >= 1")
    table = {}
    for l in range(1, max_mode + 1):
        key = l if dim == 2 else (l, 0)
        table[key] = complex(t ** l)
    return ModeSpectrum(dim, float(source_radius), _sorted_entries(table),
                        TAIL_GEOMETRIC, tail_ratio=float(t))


def single_mode(key, g, source_radius: float, dim: int = 2) -> ModeSpectrum:
    return explicit_spectrum({key: complex(g)}, source_radius, dim)
