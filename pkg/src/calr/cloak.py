"""End-to-end cloaking runs: build the layered structure, predict the
outcome from the source's extension radius, then confirm it with a loss
sweep and the far-field dichotomy.

The prediction and the measurement come from independent code paths (series
marching against per-mode solves), so agreement between them is evidence,
not bookkeeping.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ValidationError, VerificationFailure
from .medium import LayeredMedium, build_doubly_complementary, verify_complementarity
from .profiles import RadialProfile
from .resonance import (
    DEFAULT_POLICY,
    AgreementReport,
    ClassifierPolicy,
    CriticalRadiusResult,
    FarFieldReport,
    Verdict,
    classify,
    critical_radius,
    delta_sweep,
    dichotomy_agreement,
    extendability_test,
    far_field_report,
)
from .spectra import ModeSpectrum


def build_cloak(a: RadialProfile, r2: float, r3: float, omega_radius: float,
                dim: int = 2, tol: float = 1e-10) -> LayeredMedium:
    """Doubly complementary structure, accepted only after the reflected
    profiles are re-checked against the annulus by sampling."""
    m = build_doubly_complementary(a, r2, r3, omega_radius, dim)
    report = verify_complementarity(m, tol=tol)
    if not report.passed:
        raise VerificationFailure(
            f"complementarity check failed: shell mismatch "
            f"{report.max_shell_mismatch:.3e}, core mismatch "
            f"{report.max_core_mismatch:.3e} (tol {tol:g})")
    return m


def cloak_summary(m: LayeredMedium) -> dict:
    """Canonical description of the built structure; depends only on the
    geometry and profile, never on any source."""
    comp = m.complementary
    if comp is None:
        raise ValidationError("medium is not a built cloak")
    ann = comp.annulus
    profile = {"kind": "constant", "value": ann.coef} if ann.is_constant else \
        ({"kind": "power", "coef": ann.coef, "exponent": ann.exponent}
         if ann.is_power else {"kind": "callable", "label": ann.label})
    return {
        "dimension": m.dim,
        "omega_radius": m.omega_radius,
        "radii": {"rc": comp.rc, "r1": comp.r1, "r2": comp.r2, "r3": comp.r3},
        "profile": profile,
        "layers": [{"lo": lay.lo, "hi": lay.hi, "plasmonic": lay.plasmonic}
                   for lay in m.layers],
    }


@dataclass(frozen=True)
class CloakReport:
    summary: dict
    critical: CriticalRadiusResult
    r_max: float
    prediction: str
    verdict: Verdict
    far: FarFieldReport
    agreement: AgreementReport
    consistent: bool
    deltas: tuple
    powers: tuple
    notes: tuple
    sweep_rows: tuple = ()

    def to_dict(self) -> dict:
        return {
            "summary": self.summary,
            "critical_radius": {"value": self.critical.value,
                                "method": self.critical.method},
            "extension_radius": self.r_max,
            "prediction": self.prediction,
            "verdict": self.verdict.to_dict(),
            "far_field": {
                "window": list(self.far.window),
                "v_monotone_decreasing": self.far.v_monotone_decreasing,
                "v_total_ratio": self.far.v_total_ratio,
                "u_cauchy": self.far.u_cauchy,
            },
            "agreement": {"applicable": self.agreement.applicable,
                          "agrees": self.agreement.agrees,
                          "detail": self.agreement.detail},
            "consistent": self.consistent,
            "curves": {"delta": list(self.deltas), "power": list(self.powers)},
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def cloak_demo(m: LayeredMedium, src: ModeSpectrum, deltas=None,
               L: int | None = None, threads: int | None = None,
               strict: bool = False,
               policy: ClassifierPolicy = DEFAULT_POLICY) -> CloakReport:
    """Predict cloaking from the extension radius, then measure it.

    The source is cloaked exactly when its potential stops extending before
    the critical radius; the sweep must then show dissipated power blowing
    up and the normalized far field dying, and the opposite on the other
    side.  strict=True turns any mismatch or indeterminate outcome into an
    error instead of a note.
    """
    comp = m.complementary
    if comp is None:
        raise ValidationError("cloak_demo needs a built cloak medium")
    notes = []
    crit = critical_radius(m, threads=threads, policy=policy)
    ext = extendability_test(src, m)
    r_max = ext.r_max
    if ext.indeterminate:
        prediction = "ambiguous"
        notes.append("extension-series growth ratio sits in the ambiguity band")
    else:
        prediction = "BlowUp" if r_max < crit.value else "Bounded"
        if math.isfinite(r_max) and abs(r_max - crit.value) <= 0.02 * crit.value:
            notes.append(f"extension radius {r_max:.4g} sits within 2% of the "
                         f"critical radius {crit.value:.4g}")
    sweep = delta_sweep(m, src, delta_list=deltas, L=L, threads=threads)
    verdict = classify(sweep, policy)
    far = far_field_report(sweep, policy)
    agreement = dichotomy_agreement(verdict, far, policy)
    consistent = True
    if verdict.label == "Indeterminate":
        notes.append("power sweep classification is indeterminate")
    elif prediction != "ambiguous":
        consistent = prediction == verdict.label
        if not consistent:
            notes.append(f"prediction {prediction} disagrees with measured "
                         f"{verdict.label}")
    if not agreement.agrees:
        consistent = False
        notes.append(f"far-field dichotomy failed: {agreement.detail}")
    if strict and (not consistent or prediction == "ambiguous"
                   or verdict.label == "Indeterminate"):
        raise VerificationFailure("; ".join(notes) or "inconsistent cloak run")
    valid = sorted((r for r in sweep if r.valid), key=lambda r: -r.delta)
    all_rows = tuple(sorted(sweep, key=lambda r: -r.delta))
    return CloakReport(cloak_summary(m), crit, r_max, prediction, verdict,
                       far, agreement, consistent,
                       tuple(r.delta for r in valid),
                       tuple(r.power for r in valid), tuple(notes), all_rows)
