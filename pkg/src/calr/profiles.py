"""Radial coefficient profiles a(r) for isotropic layered media.

A profile is a positive scalar function of the radius on a closed interval.
Profiles of the form coef * r**exponent ("power" kind, constants included as
exponent 0) are kept symbolic because every transformation used here (Kelvin
inversion, dilation) maps power laws to power laws; everything else is a
plain evaluator.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError

_DOMAIN_SLACK = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class RadialProfile:
    """Positive radial coefficient on [lo, hi].

    Parameters
    ----------
    lo, hi : float
        Closed interval of validity, 0 < lo < hi.
    kind : str
        "power" (coef * r**exponent), "expr" (sympy expression of r) or
        "callable".
    coef, exponent : float
        Parameters of the power form; ignored for other kinds.
    expr : str, optional
        Source text of the expression, kept for serialization.
    fn : callable, optional
        Vectorized evaluator for non-power kinds.
    smoothness : str
        Informational smoothness marker; the shell construction expects C3
        on the closed annulus.
    """

    lo: float
    hi: float
    kind: str = "power"
    coef: float = 1.0
    exponent: float = 0.0
    expr: Optional[str] = None
    fn: Optional[Callable] = None
    smoothness: str = "C3"
    label: str = ""

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi) or not math.isfinite(self.hi):
            raise ValidationError(
                f"profile interval must satisfy 0 <= lo < hi, got [{self.lo}, {self.hi}]"
            )
        if self.kind not in ("power", "expr", "callable"):
            raise ValidationError(f"unknown profile kind {self.kind!r}")
        if self.kind == "power":
            if not (math.isfinite(self.coef) and self.coef > 0.0):
                raise ValidationError("power profile needs a positive finite coefficient")
            if not math.isfinite(self.exponent):
                raise ValidationError("power profile needs a finite exponent")
            if self.lo == 0.0 and self.exponent < 0.0:
                raise ValidationError(
                    "a negative power is singular at r = 0; use lo > 0")
        elif self.fn is None:
            raise ValidationError(f"{self.kind} profile needs an evaluator")

    # -- evaluation ---------------------------------------------------------

    def __call__(self, r):
        scalar = np.isscalar(r)
        rr = np.asarray(r, dtype=float)
        lo = self.lo * (1.0 - _DOMAIN_SLACK)
        hi = self.hi * (1.0 + _DOMAIN_SLACK)
        if np.any(rr < lo) or np.any(rr > hi):
            bad = rr[(rr < lo) | (rr > hi)]
            raise ValidationError(
                f"radius {float(np.ravel(bad)[0]):g} outside profile domain "
                f"[{self.lo:g}, {self.hi:g}]"
            )
        if self.kind == "power":
            if self.exponent == 0.0:
                out = np.full_like(rr, self.coef)
            else:
                out = self.coef * rr ** self.exponent
        else:
            out = np.asarray(self.fn(rr), dtype=float)
            out = np.broadcast_to(out, rr.shape).copy()
        return float(out) if scalar else out

    # -- structure ----------------------------------------------------------

    @property
    def is_power(self) -> bool:
        return self.kind == "power"

    @property
    def is_constant(self) -> bool:
        return self.kind == "power" and self.exponent == 0.0

    def rewindow(self, lo: float, hi: float) -> "RadialProfile":
        """Same coefficient law restricted to a subinterval."""
        if lo < self.lo * (1.0 - _DOMAIN_SLACK) or hi > self.hi * (1.0 + _DOMAIN_SLACK):
            raise ValidationError(
                f"[{lo:g}, {hi:g}] is not inside profile domain [{self.lo:g}, {self.hi:g}]"
            )
        return dataclasses.replace(self, lo=lo, hi=hi)

    # -- diagnostics --------------------------------------------------------

    def ellipticity_bounds(self, samples: int = 2048) -> tuple:
        """(min, max) of a over the interval, sampled densely plus endpoints."""
        r = np.linspace(self.lo, self.hi, samples)
        vals = self(r)
        return float(np.min(vals)), float(np.max(vals))

    def validate_elliptic(self, samples: int = 2048) -> float:
        """Return the ellipticity constant Lambda = max(sup a, 1/inf a).

        Raises if the sampled profile is not strictly positive and finite.
        """
        amin, amax = self.ellipticity_bounds(samples)
        if not (math.isfinite(amin) and math.isfinite(amax)) or amin <= 0.0:
            raise ValidationError(
                f"profile is not uniformly elliptic on [{self.lo:g}, {self.hi:g}]: "
                f"range [{amin:g}, {amax:g}]"
            )
        return max(amax, 1.0 / amin)

    def chebyshev(self, degree: int = 64):
        """Chebyshev interpolant of the profile on its interval (tabulation
        helper for plotting and for inspecting composed pull-backs)."""
        from numpy.polynomial.chebyshev import Chebyshev

        return Chebyshev.interpolate(lambda r: self(r), degree, domain=[self.lo, self.hi])

    def table(self, n: int = 129):
        r = np.linspace(self.lo, self.hi, n)
        return r, self(r)

    def __repr__(self):
        if self.is_constant:
            core = f"{self.coef:g}"
        elif self.is_power:
            core = f"{self.coef:g}*r^{self.exponent:g}"
        else:
            core = self.expr or self.label or self.kind
        return f"RadialProfile({core} on [{self.lo:g}, {self.hi:g}])"


def constant_profile(value: float, lo: float, hi: float) -> RadialProfile:
    return RadialProfile(lo=lo, hi=hi, kind="power", coef=float(value), exponent=0.0)


def power_profile(coef: float, exponent: float, lo: float, hi: float) -> RadialProfile:
    return RadialProfile(lo=lo, hi=hi, kind="power", coef=float(coef), exponent=float(exponent))


def profile_from_callable(fn: Callable, lo: float, hi: float, label: str = "") -> RadialProfile:
    return RadialProfile(lo=lo, hi=hi, kind="callable", fn=fn, label=label)


def profile_from_expr(text: str, lo: float, hi: float) -> RadialProfile:
    """Parse an expression of r, e.g. "2 + sin(r)".

    Monomials c*r**p (constants included) are detected symbolically and
    routed to the exact power representation; anything else becomes a
    vectorized numpy evaluator.
    """
    import sympy

    r = sympy.Symbol("r", positive=True)
    try:
        e = sympy.sympify(text, locals={"r": r})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValidationError(f"cannot parse profile expression {text!r}: {exc}") from None
    extra = e.free_symbols - {r}
    if extra:
        raise ValidationError(f"profile expression uses unknown symbols {sorted(map(str, extra))}")

    # Monomial iff the logarithmic derivative r*e'/e is a constant.
    try:
        p = sympy.simplify(r * sympy.diff(e, r) / e)
        if p.is_Number:
            pf = float(p)
            cf = float(sympy.simplify(e / r ** p).subs(r, 1.0))
            return RadialProfile(lo=lo, hi=hi, kind="power", coef=cf, exponent=pf, expr=text)
    except (TypeError, ValueError):
        pass

    fn = sympy.lambdify(r, e, modules="numpy")
    prof = RadialProfile(lo=lo, hi=hi, kind="expr", expr=text, fn=fn)
    prof.validate_elliptic(512)
    return prof
