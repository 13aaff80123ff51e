"""Power sweeps in the loss parameter and the blow-up/boundedness verdict.

The resonance diagnostics all reduce to one scalar curve: the dissipated
power E_delta = delta * (shell gradient energy) as delta decreases.  A
log-log slope fit with monotonicity guards classifies the curve as BlowUp,
Bounded, or Indeterminate; the far-field norms of the raw and normalized
fields provide the independent side of the dichotomy.

The extendability test predicts the verdict from the source alone: it
continues the source data outward with zero Cauchy data on the shell
boundary and fits the geometric growth rate of the per-mode energies, which
yields the maximal extension radius.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import NormalizationError, SolverError, ValidationError
from .medium import LayeredMedium
from .radial import make_basis
from .solver import Field, LayerGrid, solve_field, source_norm
from .spectra import TAIL_FINITE, ModeSpectrum, geometric_spectrum, radial_index

CSV_COLUMNS = ("delta", "power", "shell_energy", "u_farfield_h1",
               "v_farfield_h1", "c_delta")

DEFAULT_DELTAS = tuple(float(d) for d in np.logspace(-2, -10, 17))

BLOW_UP = "BlowUp"
BOUNDED = "Bounded"
INDETERMINATE = "Indeterminate"


def shell_window(m: LayeredMedium) -> tuple[float, float]:
    """Annulus over which the power integral is taken."""
    sh = m.shell
    if sh is not None:
        return sh.lo, sh.hi
    if m.complementary is not None:
        return m.complementary.r1, m.complementary.r2
    raise ValidationError("medium has neither a plasmonic shell nor shell metadata")


def far_field_window(m: LayeredMedium, margin: float = 0.1) -> tuple[float, float]:
    """Annulus (anchor*(1+margin), R) used for far-field norms; the margin
    keeps the window clear of trace-layer artifacts at the last interface."""
    if not m.interfaces:
        raise ValidationError("medium has no internal interface")
    lo = (1.0 + margin) * max(m.interfaces)
    if lo >= m.omega_radius:
        raise ValidationError("far-field margin leaves an empty window")
    return lo, m.omega_radius


def power(f: Field, m: LayeredMedium | None = None,
          delta: float | None = None) -> float:
    """Dissipated power: delta times the gradient-only shell energy."""
    m = f.medium if m is None else m
    delta = f.delta if delta is None else float(delta)
    lo, hi = shell_window(m)
    return delta * f.h1_energy(lo, hi, include_l2=False)


def normalize_field(u: Field) -> tuple[float, Field]:
    """Normalization constant and v = c*u with sqrt(delta)*shell-grad-energy(v)=1."""
    lo, hi = shell_window(u.medium)
    eg = u.h1_energy(lo, hi, include_l2=False)
    if not math.isfinite(eg) or eg <= 0.0:
        raise NormalizationError(
            "zero shell gradient energy: source invisible to the shell at this cutoff")
    c = (math.sqrt(u.delta) * eg) ** -0.5
    return c, u.scaled(c)


def normalize(src: ModeSpectrum, m: LayeredMedium, delta: float,
              L: int | None = None) -> tuple[float, Field]:
    return normalize_field(solve_field(m, src, delta, L))


@dataclass
class SweepRow:
    delta: float
    power: float
    shell_energy: float
    u_farfield_h1: float
    v_farfield_h1: float
    c_delta: float
    valid: bool = True
    reason: str = ""
    u_h1_omega: float = math.nan
    far_coeffs: dict | None = None
    grid: LayerGrid | None = None
    far_window: tuple | None = None

    def csv_values(self) -> tuple:
        return (self.delta, self.power, self.shell_energy,
                self.u_farfield_h1, self.v_farfield_h1, self.c_delta)


def _invalid_row(delta: float, reason: str) -> SweepRow:
    nan = math.nan
    return SweepRow(delta, nan, nan, nan, nan, nan, valid=False, reason=reason)


def _sweep_row(m: LayeredMedium, spec: ModeSpectrum, delta: float,
               shell: tuple, farw: tuple) -> SweepRow:
    try:
        f = solve_field(m, spec, delta)
        eg = f.h1_energy(shell[0], shell[1], include_l2=False)
        if not math.isfinite(eg) or eg <= 0.0:
            raise NormalizationError("zero shell gradient energy")
        pw = delta * eg
        shell_h1 = f.h1_energy(shell[0], shell[1], include_l2=True)
        c = (math.sqrt(delta) * eg) ** -0.5
        ufar = math.sqrt(f.h1_energy(farw[0], farw[1], include_l2=True))
        u_h1 = f.h1_energy(0.0, m.omega_radius, include_l2=True)
        far_coeffs: dict = {}
        for j, s in enumerate(f.grid.slabs):
            if s.hi > farw[0] * (1 + 1e-15) and s.lo < farw[1]:
                far_coeffs[j] = {k: v[j].copy() for k, v in f.coeffs.items()}
        return SweepRow(delta, pw, shell_h1, ufar, c * ufar, c,
                        u_h1_omega=u_h1, far_coeffs=far_coeffs,
                        grid=f.grid, far_window=farw)
    except (ValidationError, SolverError) as exc:
        return _invalid_row(delta, str(exc))


def _thread_count(requested: int | None, njobs: int) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("CALR_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1, njobs))


def delta_sweep(m: LayeredMedium, src: ModeSpectrum, delta_list=None,
                L: int | None = None, threads: int | None = None) -> list[SweepRow]:
    """One SweepRow per delta, descending; per-delta failures yield invalid rows."""
    deltas = [float(d) for d in (DEFAULT_DELTAS if delta_list is None else delta_list)]
    if not deltas:
        raise ValidationError("empty delta list")
    for d in deltas:
        if not (0.0 < d < 1.0):
            raise ValidationError(f"sweep delta {d} outside (0, 1)")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValidationError("delta list must be strictly descending")
    spec = src if L is None else src.truncated(L)
    shell = shell_window(m)
    farw = far_field_window(m)
    # build every basis once up front; workers then only read caches
    grid = LayerGrid(m, spec.source_radius)
    grid.prewarm(sorted(spec.radial_groups()))
    nthreads = _thread_count(threads, len(deltas))
    if nthreads == 1:
        return [_sweep_row(m, spec, d, shell, farw) for d in deltas]
    with ThreadPoolExecutor(max_workers=nthreads) as ex:
        return list(ex.map(lambda d: _sweep_row(m, spec, d, shell, farw), deltas))


@dataclass(frozen=True)
class ClassifierPolicy:
    """Finite-delta thresholds for the verdict; artifact policy, configurable."""
    slope_blowup: float = -0.1
    slope_bounded: float = 0.05
    variation_tol: float = 0.10
    jitter: float = 0.02
    decay_slope: float = 0.1
    min_rows: int = 5
    min_decades: float = 4.0
    far_jitter: float = 0.05
    far_total_ratio: float = 10.0
    cauchy_ratio: float = 0.5


DEFAULT_POLICY = ClassifierPolicy()


@dataclass(frozen=True)
class Verdict:
    label: str
    slope: float
    goodness: float
    variation: float
    rows: tuple
    arm: str = ""

    @property
    def is_blowup(self) -> bool:
        return self.label == BLOW_UP

    @property
    def is_bounded(self) -> bool:
        return self.label == BOUNDED

    def to_dict(self) -> dict:
        return {"class": self.label, "slope": self.slope,
                "goodness": self.goodness, "variation": self.variation,
                "rows_used": len(self.rows), "arm": self.arm}


def _valid_rows(rows) -> list:
    out = [r for r in rows if r.valid and math.isfinite(r.power) and r.power > 0.0]
    return sorted(out, key=lambda r: -r.delta)


def _fit_loglog(xs, ys) -> tuple[float, float]:
    x = np.log10(np.asarray(xs))
    y = np.log10(np.asarray(ys))
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    goodness = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), goodness


def classify(sweep, policy: ClassifierPolicy = DEFAULT_POLICY) -> Verdict:
    """Slope-and-monotonicity verdict on the power curve.

    BlowUp: fitted tail slope <= slope_blowup and the tail increases as delta
    decreases.  Bounded: either a flat tail with small variation over the last
    two decades, or a cleanly decaying power curve (all-positive media and
    beyond-critical sources drive E to 0 with delta).  Everything else is
    Indeterminate; borderline oscillatory cases are deliberately not forced.
    """
    rows = _valid_rows(sweep)
    if len(rows) < policy.min_rows:
        raise ValidationError(
            f"classifier needs >= {policy.min_rows} valid rows, got {len(rows)}")
    decades = math.log10(rows[0].delta / rows[-1].delta)
    if decades < policy.min_decades - 1e-9:
        raise ValidationError(
            f"classifier needs >= {policy.min_decades} decades, got {decades:.2f}")
    tail = rows[len(rows) // 2:]
    slope, goodness = _fit_loglog([r.delta for r in tail], [r.power for r in tail])
    dmin = rows[-1].delta
    recent = [r.power for r in rows if r.delta <= dmin * 100.0 * (1 + 1e-9)]
    variation = max(recent) / min(recent) - 1.0
    jit = policy.jitter
    mono_inc = all(b.power >= a.power * (1 - jit) for a, b in zip(tail, tail[1:]))
    mono_dec = all(b.power <= a.power * (1 + jit) for a, b in zip(tail, tail[1:]))
    if slope <= policy.slope_blowup and mono_inc:
        return Verdict(BLOW_UP, slope, goodness, variation, tuple(tail), "slope")
    if abs(slope) <= policy.slope_bounded and variation <= policy.variation_tol:
        return Verdict(BOUNDED, slope, goodness, variation, tuple(tail), "plateau")
    if slope >= policy.decay_slope and mono_dec:
        return Verdict(BOUNDED, slope, goodness, variation, tuple(tail), "decay")
    return Verdict(INDETERMINATE, slope, goodness, variation, tuple(tail), "")


def farfield_difference(row_a: SweepRow, row_b: SweepRow) -> float:
    """H1 norm of u_a - u_b over the far window, from shared-basis coefficients."""
    if row_a.far_coeffs is None or row_b.far_coeffs is None:
        raise ValidationError("rows carry no far-field coefficients")
    lo, hi = row_a.far_window
    grid = row_a.grid
    total = 0.0
    for j in sorted(set(row_a.far_coeffs) | set(row_b.far_coeffs)):
        ca = row_a.far_coeffs.get(j, {})
        cb = row_b.far_coeffs.get(j, {})
        s = grid.slabs[j]
        wlo, whi = max(lo, s.lo), min(hi, s.hi)
        if whi <= wlo:
            continue
        grams = {}
        zero = np.zeros(2, dtype=complex)
        for key in set(ca) | set(cb):
            l = radial_index(key)
            if l not in grams:
                b = grid.basis(j, l)
                Gg, Gl = b.gram(wlo, whi, False)
                grams[l] = Gg + Gl
            dv = ca.get(key, zero) - cb.get(key, zero)
            total += float((dv.conj() @ grams[l] @ dv).real)
    return math.sqrt(max(total, 0.0))


@dataclass(frozen=True)
class FarFieldReport:
    window: tuple
    deltas: tuple
    u_norms: tuple
    v_norms: tuple
    v_monotone_decreasing: bool
    v_total_ratio: float
    u_differences: tuple
    u_cauchy: bool


def far_field_report(sweep, policy: ClassifierPolicy = DEFAULT_POLICY) -> FarFieldReport:
    rows = _valid_rows(sweep)
    if len(rows) < 2:
        raise ValidationError("far-field report needs at least two valid rows")
    tail = rows[len(rows) // 2:]
    jit = policy.far_jitter
    v_mono = all(b.v_farfield_h1 <= a.v_farfield_h1 * (1 + jit)
                 for a, b in zip(tail, tail[1:]))
    v_first, v_last = rows[0].v_farfield_h1, rows[-1].v_farfield_h1
    v_ratio = math.inf if v_last == 0.0 else v_first / v_last
    diffs = tuple(farfield_difference(a, b) for a, b in zip(tail, tail[1:]))
    floor = 1e-14 * max(r.u_farfield_h1 for r in rows)
    cauchy = all(b <= policy.cauchy_ratio * a or b <= floor
                 for a, b in zip(diffs, diffs[1:])) if len(diffs) >= 2 else False
    return FarFieldReport(rows[0].far_window, tuple(r.delta for r in rows),
                          tuple(r.u_farfield_h1 for r in rows),
                          tuple(r.v_farfield_h1 for r in rows),
                          v_mono, v_ratio, diffs, cauchy)


@dataclass(frozen=True)
class AgreementReport:
    applicable: bool
    agrees: bool
    detail: str


def dichotomy_agreement(verdict: Verdict, report: FarFieldReport,
                        policy: ClassifierPolicy = DEFAULT_POLICY) -> AgreementReport:
    """Power verdict against the far-field verdict: BlowUp must pair with a
    decaying normalized far field, Bounded with a Cauchy raw far field."""
    if verdict.label == BLOW_UP:
        ok = report.v_monotone_decreasing and report.v_total_ratio >= policy.far_total_ratio
        return AgreementReport(True, ok,
                               f"v far monotone={report.v_monotone_decreasing}, "
                               f"total ratio={report.v_total_ratio:.3g}")
    if verdict.label == BOUNDED:
        return AgreementReport(True, report.u_cauchy,
                               f"u far Cauchy={report.u_cauchy}")
    return AgreementReport(False, True, "verdict indeterminate: no claim to check")


def delta_half_h1_variation(sweep, decades: float = 4.0) -> float:
    """Spread of sqrt(delta)*|u|_H1(Omega) over the last given decades."""
    rows = _valid_rows(sweep)
    vals = [math.sqrt(r.delta * r.u_h1_omega) for r in rows
            if r.delta <= rows[-1].delta * 10.0 ** decades * (1 + 1e-9)
            and math.isfinite(r.u_h1_omega)]
    if len(vals) < 2:
        raise ValidationError("not enough rows in the requested decade range")
    return max(vals) / min(vals) - 1.0


def ppp_ratios(sweep, source_sq: float) -> list[float]:
    """Per-row ratio (full H1 energy on Omega) / (shell grad energy + |f|^2);
    the energy inequality says these stay bounded across a sweep."""
    rows = _valid_rows(sweep)
    out = []
    for r in rows:
        shell_grad = r.power / r.delta
        out.append(r.u_h1_omega / (shell_grad + source_sq))
    return out


# --- source extendability --------------------------------------------------

def _positive_windows(m: LayeredMedium, lo: float, hi: float):
    for lay in m.layers:
        wlo, whi = max(lo, lay.lo), min(hi, lay.hi)
        if whi > wlo * (1 + 1e-14):
            yield wlo, whi, lay.profile


def _transfer(m: LayeredMedium, l: int, state: tuple, r_from: float, r_to: float,
              collect_energy: bool = False) -> tuple[tuple, float]:
    """Propagate (u, q) of the positive-coefficient mode ODE from r_from to
    r_to slab by slab; optionally accumulate the H1 energy along the way."""
    inward = r_to < r_from
    lo, hi = (r_to, r_from) if inward else (r_from, r_to)
    wins = list(_positive_windows(m, lo, hi))
    if inward:
        wins = wins[::-1]
    u, q = state
    energy = 0.0
    for wlo, whi, prof in wins:
        b = make_basis(prof, l, wlo, whi, m.dim, cache=m.pair_cache)
        entry, exit_ = (whi, wlo) if inward else (wlo, whi)
        M = np.array([[float(b.value(0, entry)), float(b.value(1, entry))],
                      [float(b.flux(0, entry)), float(b.flux(1, entry))]])
        try:
            cd = np.linalg.solve(M, np.array([u, q], dtype=complex))
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"mode {l}: transfer matrix singular at "
                              f"[{wlo}, {whi}] ({exc})")
        if collect_energy:
            Gg, Gl = b.gram(wlo, whi, False)
            energy += float((cd.conj() @ (Gg + Gl) @ cd).real)
        u = cd[0] * float(b.value(0, exit_)) + cd[1] * float(b.value(1, exit_))
        q = cd[0] * float(b.flux(0, exit_)) + cd[1] * float(b.flux(1, exit_))
    return (u, q), energy


@dataclass(frozen=True)
class ExtendabilityReport:
    target_radius: float
    mode_energies: tuple
    partial_sums: tuple
    divergent: bool
    ratio: float
    r_max: float
    indeterminate: bool
    goodness: float
    series_coefficients: dict
    notes: str = ""


def _series_coefficients(src: ModeSpectrum, m: LayeredMedium,
                         r2: float, r3: float) -> dict:
    """Coefficients kappa of the annulus Green solution on the basis that
    vanishes at r2 (the trace data of the auxiliary damped field).

    z1 vanishes at r2 and is normalized to match the flux of the reference
    basis element there; z2 vanishes at r3.  The jump construction gives
    kappa = -g * r0^(d-1) * z2(r0) / (q_{z2} z1 - z2 q_{z1})(r0).
    """
    if r3 <= r2 * (1 + 1e-12):
        return {}
    d = m.dim
    r0 = src.source_radius
    a2 = float(m.a(r2 * (1 + 1e-12)))
    a3 = float(m.a(r3 * (1 - 1e-12)))
    out: dict = {}
    for l, members in sorted(src.radial_groups().items()):
        bp = (2 * l + d - 2) if l >= 1 else 1.0
        z1, _ = _transfer(m, l, (0.0, a2 * r2 ** (d - 2) * bp), r2, r0)
        z2, _ = _transfer(m, l, (0.0, a3 * r3 ** (d - 2) * bp), r3, r0)
        wr = z2[1] * z1[0] - z2[0] * z1[1]
        if wr == 0:
            continue
        base = -r0 ** (d - 1) * z2[0] / wr
        for key, g in members:
            out[key] = complex(g) * base
    return out


def extendability_test(src: ModeSpectrum, m: LayeredMedium,
                       R: float | None = None,
                       min_modes: int = 6,
                       goodness_floor: float = 0.98,
                       ambiguity: float = 0.04) -> ExtendabilityReport:
    """Continue the source data outward with zero Cauchy data on the shell
    boundary and decide whether the continuation stays finite-energy.

    Per mode the continuation w vanishes identically inside the source radius
    (unique continuation from zero Cauchy data), takes the flux jump g_l at
    r0, and is then marched through the positive layers to the target radius.
    Geometric growth of the mode energies is fitted on the tail; the fitted
    ratio q gives the maximal extension radius R/sqrt(q).
    """
    try:
        r2 = shell_window(m)[1]
    except ValidationError:
        r2 = min(m.interfaces) if m.interfaces else 0.0
    r3 = max(m.interfaces) if m.interfaces else m.omega_radius
    if R is None:
        R = r3
    R = float(R)
    r0 = src.source_radius
    if not (r2 < r0 < R):
        raise ValidationError(f"need r2 < r0 < R, got {r2}, {r0}, {R}")
    if R > m.omega_radius * (1 + 1e-12):
        raise ValidationError(f"target radius {R} beyond the domain")
    d = m.dim
    energies = []
    notes = []
    for l, members in sorted(src.radial_groups().items()):
        gsq = sum(abs(g) ** 2 for _, g in members)
        if gsq == 0.0:
            continue
        try:
            _, e_unit = _transfer(m, l, (0.0, r0 ** (d - 1)), r0, R,
                                  collect_energy=True)
        except SolverError as exc:
            notes.append(f"mode {l} skipped: {exc}")
            continue
        e = gsq * e_unit
        if math.isfinite(e):
            energies.append((l, e))
    psums = []
    acc = 0.0
    for _, e in energies:
        acc += e
        psums.append(acc)
    series = _series_coefficients(src, m, r2, r3)

    if src.tail == TAIL_FINITE:
        return ExtendabilityReport(R, tuple(energies), tuple(psums),
                                   divergent=False, ratio=0.0, r_max=math.inf,
                                   indeterminate=False, goodness=1.0,
                                   series_coefficients=series,
                                   notes="finite band: extends for every radius")
    fit = [(l, e) for l, e in energies if l >= 1 and e > 0.0]
    if len(fit) < min_modes:
        return ExtendabilityReport(R, tuple(energies), tuple(psums),
                                   divergent=False, ratio=math.nan, r_max=math.nan,
                                   indeterminate=True, goodness=0.0,
                                   series_coefficients=series,
                                   notes="; ".join(
                                       ["too few modes for a stable ratio fit"] + notes))
    tail = fit[len(fit) // 2:]
    xs = np.array([l for l, _ in tail], dtype=float)
    ys = np.array([math.log(e * max(l, 1)) for l, e in tail])
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_tot = float(np.sum((ys - np.mean(ys)) ** 2))
    goodness = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum((ys - pred) ** 2)) / ss_tot
    ratio = math.exp(slope)
    r_max = R / math.sqrt(ratio)
    indet = goodness < goodness_floor or abs(ratio - 1.0) <= ambiguity
    return ExtendabilityReport(R, tuple(energies), tuple(psums),
                               divergent=ratio > 1.0, ratio=float(ratio),
                               r_max=float(r_max), indeterminate=indet,
                               goodness=goodness, series_coefficients=series,
                               notes="; ".join(notes))


# --- critical radius -------------------------------------------------------

@dataclass
class CriticalRadiusResult:
    value: float
    method: str
    bracket: tuple | None = None
    warning: str = ""

    def __float__(self) -> float:
        return self.value


def critical_radius(m: LayeredMedium, probe_radius: float | None = None,
                    cutoff: int = 96, deltas=None, rel_tol: float = 0.02,
                    max_iter: int = 12, threads: int | None = None,
                    policy: ClassifierPolicy = DEFAULT_POLICY) -> CriticalRadiusResult:
    """Radius separating blow-up sources from bounded ones.

    Identity annulus coefficient: exactly sqrt(r2*r3).  Any other radial
    profile: empirical bisection on geometric sources g_l = t^l placed at a
    probe radius, classified through full delta sweeps.
    """
    comp = m.complementary
    if comp is None:
        raise ValidationError("critical radius requires a doubly complementary medium")
    r2, r3 = comp.r2, comp.r3
    annulus = None
    for lay in m.layers:
        if math.isclose(lay.lo, r2, rel_tol=1e-12) and math.isclose(lay.hi, r3, rel_tol=1e-12):
            annulus = lay.profile
            break
    if annulus is not None and annulus.is_constant and float(annulus.coef) == 1.0:
        return CriticalRadiusResult(math.sqrt(r2 * r3), "exact")

    if deltas is None:
        deltas = [float(x) for x in np.logspace(-2, -8, 13)]
    r0 = probe_radius if probe_radius is not None else max(
        0.6 * math.sqrt(r2 * r3), 1.02 * r2)
    if not (r2 < r0 < r3):
        raise ValidationError(f"probe radius {r0} outside the annulus ({r2}, {r3})")
    cache: dict = {}

    def verdict_at(t: float) -> str:
        key = round(t, 12)
        if key not in cache:
            src = geometric_spectrum(t, cutoff, r0, m.dim)
            rows = delta_sweep(m, src, deltas, threads=threads)
            cache[key] = classify(rows, policy).label
        return cache[key]

    t_guess = r0 / math.sqrt(r2 * r3)
    t_hi, t_lo = t_guess, t_guess
    for _ in range(8):
        if verdict_at(t_hi) == BLOW_UP:
            break
        t_hi = min(0.98, t_hi * 1.3)
        if t_hi == 0.98 and verdict_at(t_hi) != BLOW_UP:
            raise ValidationError("could not bracket the blow-up side")
    for _ in range(8):
        if verdict_at(t_lo) == BOUNDED:
            break
        t_lo *= 0.7
        if t_lo < 1e-3:
            raise ValidationError("could not bracket the bounded side")

    def bisect(pred, lo: float, hi: float) -> float:
        # pred is true at hi, false at lo; returns the onset point
        for _ in range(max_iter):
            if hi / lo - 1.0 <= rel_tol:
                break
            mid = math.sqrt(lo * hi)
            if pred(mid):
                hi = mid
            else:
                lo = mid
        return math.sqrt(lo * hi)

    t_up = bisect(lambda t: verdict_at(t) == BLOW_UP, t_lo, t_hi)
    t_dn = bisect(lambda t: verdict_at(t) != BOUNDED, t_lo, t_hi)
    warning = ""
    if t_dn > t_up * (1 + 1e-12):
        t_dn, t_up = t_up, t_dn
        warning = ("bisection endpoints non-monotone: bracket widened to "
                   "the outer envelope")
    t_star = math.sqrt(t_dn * t_up)
    bracket = (r0 / t_up, r0 / t_dn)
    return CriticalRadiusResult(r0 / t_star, "bisection", bracket, warning)
