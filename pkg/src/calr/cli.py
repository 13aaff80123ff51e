"""Command line front end.

Subcommands: solve (one field, JSON dump), sweep (loss sweep to CSV),
cloak-demo (build + predict + measure, JSON report), verify (built-in
consistency suites).  Exit codes: 0 ok, 1 bad input, 2 solver failure,
3 failed verification or assertion.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .analysis import rigidity_check, three_spheres_check
from .cloak import build_cloak, cloak_demo
from .config import (
    deltas_from_config,
    field_to_dict,
    load_config,
    medium_from_config,
    spectrum_from_config,
    write_json,
    write_sweep_csv,
)
from .errors import SolverError, ValidationError, VerificationFailure
from .profiles import constant_profile, profile_from_expr
from .resonance import delta_sweep, normalize_field
from .singularity import build_W_delta, reflect, remove_singularity
from .solver import solve_field
from .spectra import geometric_spectrum


def _plot_sweep(path: str, rows) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    good = [r for r in rows if r.valid and r.power > 0.0]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.loglog([r.delta for r in good], [r.power for r in good], "o-")
    ax1.set_xlabel("delta")
    ax1.set_ylabel("dissipated power")
    ax2.loglog([r.delta for r in good], [r.v_farfield_h1 for r in good], "s-",
               label="normalized")
    ax2.loglog([r.delta for r in good], [r.u_farfield_h1 for r in good], "^-",
               label="raw")
    ax2.set_xlabel("delta")
    ax2.set_ylabel("far-field H1 norm")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    m = medium_from_config(cfg)
    src = spectrum_from_config(cfg)
    L = args.modes if args.modes is not None else cfg.get("cutoff")
    u = solve_field(m, src, args.delta, L=L)
    payload = field_to_dict(u)
    if args.out:
        write_json(args.out, payload)
    else:
        print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    m = medium_from_config(cfg)
    src = spectrum_from_config(cfg)
    deltas = deltas_from_config(cfg, args.delta_start, args.delta_end,
                                args.points)
    L = args.modes if args.modes is not None else cfg.get("cutoff")
    rows = delta_sweep(m, src, deltas, L=L, threads=args.threads)
    write_sweep_csv(args.out, rows)
    if args.plot:
        _plot_sweep(args.plot, rows)
    return 0


def cmd_cloak_demo(args) -> int:
    cfg = load_config(args.config)
    m = medium_from_config(cfg)
    src = spectrum_from_config(cfg)
    deltas = deltas_from_config(cfg, args.delta_start, args.delta_end,
                                args.points)
    L = args.modes if args.modes is not None else cfg.get("cutoff")
    report = cloak_demo(m, src, deltas, L=L, threads=args.threads,
                        strict=args.strict)
    if args.out:
        write_json(args.out, report.to_dict())
    if args.curves:
        write_sweep_csv(args.curves, report.sweep_rows)
    if args.plot:
        _plot_sweep(args.plot, report.sweep_rows)
    print(f"prediction={report.prediction} verdict={report.verdict.label} "
          f"consistent={report.consistent}")
    for note in report.notes:
        print(f"note: {note}")
    return 0


# --- verify suites -----------------------------------------------------------

def _suite_three_spheres():
    worst = 0.0
    for l in range(1, 33):
        rep = three_spheres_check({l: 1.0 + 0.0j}, (1.0, 2.0, 4.0))
        worst = max(worst, abs(rep.ratio - 1.0))
    rng = np.random.default_rng(20240817)
    coeffs = {int(l): complex(rng.standard_normal(), rng.standard_normal())
              for l in range(1, 21)}
    rep = three_spheres_check(coeffs, (1.0, 2.0, 4.0))
    ok = worst <= 1e-10 and rep.ratio <= 1.0 + 1e-10
    return ok, (f"single-mode worst |ratio-1|={worst:.2e}, "
                f"20-mode ratio={rep.ratio:.12f}")


def _suite_modes():
    a = constant_profile(1.0, 1.0, 4.0)
    m = build_cloak(a, 1.0, 4.0, 8.0, 2)
    src = geometric_spectrum(0.7, 48, 1.5, 2)
    u = solve_field(m, src, 1e-6)
    ident = u.energy_identity_residual()
    u2 = solve_field(m, src.scaled(2.0), 1e-6)
    ref = u.coeffs[3][2][0]
    lin = abs(u2.coeffs[3][2][0] - 2.0 * ref) / max(abs(ref), 1e-300)
    ok = u.max_residual <= 1e-11 and ident <= 1e-9 and lin <= 1e-12
    return ok, (f"residual={u.max_residual:.2e}, identity={ident:.2e}, "
                f"linearity={lin:.2e}")


def _suite_rigidity():
    details = []
    ok = True
    for label, prof in (("a=1", constant_profile(1.0, 1.0, 2.0)),
                        ("a=2+sin r", profile_from_expr("2 + sin(r)", 1.0, 2.0))):
        rep = rigidity_check(prof, range(1, 17))
        good = rep.all_nondegenerate and rep.monopole_positive
        ok = ok and good
        details.append(f"{label}: nondegenerate={rep.all_nondegenerate}, "
                       f"monopole flux={rep.monopole_flux:.4g}")
    fake = rigidity_check(constant_profile(1.0, 1.0, 2.0), range(1, 5),
                          fake=True)
    caught = not fake.all_nondegenerate
    ok = ok and caught
    details.append(f"fake pair caught={caught}")
    return ok, "; ".join(details)


def _suite_singularity():
    a = constant_profile(1.0, 1.0, 4.0)
    m = build_cloak(a, 1.0, 4.0, 8.0, 2)
    src = geometric_spectrum(0.85, 64, 1.5, 2)
    norms = {}
    for d in (1e-3, 1e-6):
        _, v = normalize_field(solve_field(m, src, d))
        sp = remove_singularity(reflect(v), v, d)
        norms[d] = sp.jump_norms()
    drops = {k: norms[1e-3][k] / max(norms[1e-6][k], 1e-300)
             for k in norms[1e-3]}
    ok_jumps = all(v >= 10.0 for v in drops.values())
    w = build_W_delta({10: 1.0}, 1.25, 1.0, 2.5, 1e-4, 2)
    ok_xi = abs(w.xi[10] - 10.24) <= 1e-12
    # trace series sized exactly to its extension radius r0 = 1/0.4
    g = {l: 0.4 ** l for l in range(1, 61)}
    ds = np.logspace(-2, -6, 5)
    wn = [build_W_delta(g, 2.5, 1.0, 4.0, float(d), 2).w_h1_norm for d in ds]
    hn = [build_W_delta(g, 2.5, 1.0, 4.0, float(d), 2).h_norm for d in ds]
    sw = np.polyfit(np.log10(ds), np.log10(wn), 1)[0]
    sh = np.polyfit(np.log10(ds), np.log10(hn), 1)[0]
    ok_slopes = -0.6 <= sw <= -0.4 and 0.4 <= sh <= 0.6
    ok = ok_jumps and ok_xi and ok_slopes
    worst_drop = min(drops.values())
    return ok, (f"jump-norm drop x{worst_drop:.3g} (1e-3 to 1e-6), "
                f"xi example exact={ok_xi}, W slope={sw:.3f}, h slope={sh:.3f}")


SUITES = {
    "three-spheres": _suite_three_spheres,
    "modes": _suite_modes,
    "rigidity": _suite_rigidity,
    "singularity": _suite_singularity,
}


def cmd_verify(args) -> int:
    names = [s.strip() for s in args.suite.split(",")] if args.suite \
        else list(SUITES)
    for name in names:
        if name not in SUITES:
            raise ValidationError(
                f"unknown suite {name!r}; choices: {', '.join(SUITES)}")
    failed = False
    for name in names:
        ok, detail = SUITES[name]()
        print(f"{name:<15s} {'PASS' if ok else 'FAIL'}  {detail}")
        failed = failed or not ok
    return 3 if failed else 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="calr",
        description="Layered-medium anomalous resonance laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one field and dump coefficients")
    ps.add_argument("--config", required=True)
    ps.add_argument("--delta", type=float, required=True)
    ps.add_argument("--modes", type=int, default=None)
    ps.add_argument("--out", default=None)
    ps.set_defaults(fn=cmd_solve)

    pw = sub.add_parser("sweep", help="loss sweep to CSV")
    pw.add_argument("--config", required=True)
    pw.add_argument("--delta-start", type=float, default=None)
    pw.add_argument("--delta-end", type=float, default=None)
    pw.add_argument("--points", type=int, default=None)
    pw.add_argument("--modes", type=int, default=None)
    pw.add_argument("--threads", type=int, default=None)
    pw.add_argument("--out", required=True)
    pw.add_argument("--plot", default=None, help="write an SVG of the curves")
    pw.set_defaults(fn=cmd_sweep)

    pc = sub.add_parser("cloak-demo", help="build, predict, sweep, report")
    pc.add_argument("--config", required=True)
    pc.add_argument("--delta-start", type=float, default=None)
    pc.add_argument("--delta-end", type=float, default=None)
    pc.add_argument("--points", type=int, default=None)
    pc.add_argument("--modes", type=int, default=None)
    pc.add_argument("--threads", type=int, default=None)
    pc.add_argument("--out", default=None, help="report JSON path")
    pc.add_argument("--curves", default=None, help="sweep CSV path")
    pc.add_argument("--plot", default=None, help="write an SVG of the curves")
    pc.add_argument("--strict", action="store_true",
                    help="fail on inconsistency instead of flagging it")
    pc.set_defaults(fn=cmd_cloak_demo)

    pv = sub.add_parser("verify", help="run built-in consistency suites")
    pv.add_argument("--suite", default=None,
                    help="comma-separated subset of: " + ", ".join(SUITES))
    pv.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    except (VerificationFailure, AssertionError) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
