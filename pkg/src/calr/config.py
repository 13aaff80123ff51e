"""JSON experiment configs and deterministic file emission.

A config names a geometry (dimension, outer radius, annulus), an annulus
profile, a circle source, and optionally a sweep and a mode cutoff:

    {"dimension": 2, "omega_radius": 8.0,
     "annulus": {"r2": 1.0, "r3": 4.0},
     "profile": {"kind": "constant", "value": 1.0},
     "source": {"radius": 1.5,
                "spectrum": {"kind": "geometric", "t": 0.85, "max_mode": 200}},
     "sweep": {"delta_start": 1e-2, "delta_end": 1e-10, "points": 17},
     "cutoff": 200}

Floats in CSV output are printed with 17 significant digits so reruns are
byte-identical; JSON output uses sorted keys and shortest round-trip floats.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .cloak import build_cloak
from .errors import ValidationError
from .medium import LayeredMedium
from .profiles import RadialProfile, constant_profile, profile_from_expr
from .resonance import CSV_COLUMNS
from .spectra import ModeSpectrum, explicit_spectrum, geometric_spectrum


def fmt(x: float) -> str:
    return "%.17g" % float(x)


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}")
    validate_config(cfg)
    return cfg


def _need(cfg: dict, key: str, kind, where: str):
    if key not in cfg:
        raise ValidationError(f"config is missing '{key}' in {where}")
    val = cfg[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ValidationError(f"'{key}' in {where} must be a number")
        return float(val)
    if kind is int:
        if not isinstance(val, int) or isinstance(val, bool):
            raise ValidationError(f"'{key}' in {where} must be an integer")
        return val
    if not isinstance(val, kind):
        raise ValidationError(f"'{key}' in {where} has the wrong type")
    return val


def validate_config(cfg: dict) -> None:
    if not isinstance(cfg, dict):
        raise ValidationError("config root must be a JSON object")
    dim = _need(cfg, "dimension", int, "config")
    if dim not in (2, 3):
        raise ValidationError(f"dimension must be 2 or 3, got {dim}")
    romega = _need(cfg, "omega_radius", float, "config")
    ann = _need(cfg, "annulus", dict, "config")
    r2 = _need(ann, "r2", float, "annulus")
    r3 = _need(ann, "r3", float, "annulus")
    if not (0.0 < r2 < r3 < romega):
        raise ValidationError(
            f"need 0 < r2 < r3 < omega_radius, got {r2}, {r3}, {romega}")
    prof = _need(cfg, "profile", dict, "config")
    kind = _need(prof, "kind", str, "profile")
    if kind == "constant":
        if _need(prof, "value", float, "profile") <= 0.0:
            raise ValidationError("constant profile value must be positive")
    elif kind == "expr":
        _need(prof, "value", str, "profile")
    else:
        raise ValidationError(f"profile kind must be constant or expr, got {kind!r}")
    srcc = _need(cfg, "source", dict, "config")
    r0 = _need(srcc, "radius", float, "source")
    if not (0.0 < r0 < romega):
        raise ValidationError(f"source radius {r0} outside (0, {romega})")
    spec = _need(srcc, "spectrum", dict, "source")
    skind = _need(spec, "kind", str, "spectrum")
    if skind == "geometric":
        t = _need(spec, "t", float, "spectrum")
        if not (0.0 < t < 1.0):
            raise ValidationError(f"geometric ratio must be in (0,1), got {t}")
        _need(spec, "max_mode", int, "spectrum")
    elif skind == "explicit":
        coeffs = _need(spec, "coefficients", list, "spectrum")
        if not coeffs:
            raise ValidationError("explicit spectrum needs coefficients")
    else:
        raise ValidationError(
            f"spectrum kind must be geometric or explicit, got {skind!r}")
    if "sweep" in cfg:
        sw = _need(cfg, "sweep", dict, "config")
        ds = _need(sw, "delta_start", float, "sweep")
        de = _need(sw, "delta_end", float, "sweep")
        pts = _need(sw, "points", int, "sweep")
        if not (0.0 < de <= ds <= 1.0):
            raise ValidationError(
                f"sweep needs 0 < delta_end <= delta_start <= 1, got {ds}, {de}")
        if pts < 1:
            raise ValidationError(f"sweep needs points >= 1, got {pts}")
    if "cutoff" in cfg and _need(cfg, "cutoff", int, "config") < 1:
        raise ValidationError("cutoff must be >= 1")


def profile_from_config(cfg: dict) -> RadialProfile:
    ann = cfg["annulus"]
    r2, r3 = float(ann["r2"]), float(ann["r3"])
    prof = cfg["profile"]
    if prof["kind"] == "constant":
        return constant_profile(float(prof["value"]), r2, r3)
    return profile_from_expr(str(prof["value"]), r2, r3)


def medium_from_config(cfg: dict) -> LayeredMedium:
    validate_config(cfg)
    ann = cfg["annulus"]
    return build_cloak(profile_from_config(cfg), float(ann["r2"]),
                       float(ann["r3"]), float(cfg["omega_radius"]),
                       int(cfg["dimension"]))


def _coerce_coefficient(c):
    if isinstance(c, (list, tuple)):
        if len(c) != 2:
            raise ValidationError(
                "complex coefficients are [re, im] pairs")
        return complex(float(c[0]), float(c[1]))
    if isinstance(c, (int, float)) and not isinstance(c, bool):
        return complex(float(c))
    raise ValidationError(f"bad coefficient {c!r}")


def spectrum_from_config(cfg: dict) -> ModeSpectrum:
    srcc = cfg["source"]
    r0 = float(srcc["radius"])
    spec = srcc["spectrum"]
    dim = int(cfg["dimension"])
    if spec["kind"] == "geometric":
        return geometric_spectrum(float(spec["t"]), int(spec["max_mode"]),
                                  r0, dim)
    coeffs = [_coerce_coefficient(c) for c in spec["coefficients"]]
    return explicit_spectrum(coeffs, r0, dim)


def deltas_from_config(cfg: dict, start: float | None = None,
                       end: float | None = None,
                       points: int | None = None) -> np.ndarray:
    sw = cfg.get("sweep", {})
    ds = float(start if start is not None else sw.get("delta_start", 1e-2))
    de = float(end if end is not None else sw.get("delta_end", 1e-10))
    n = int(points if points is not None else sw.get("points", 17))
    if not (0.0 < de <= ds <= 1.0):
        raise ValidationError(f"need 0 < delta_end <= delta_start <= 1, "
                              f"got {ds}, {de}")
    if n < 1:
        raise ValidationError(f"need points >= 1, got {n}")
    if n == 1 or ds == de:
        return np.array([ds])
    return np.logspace(math.log10(ds), math.log10(de), n)


def write_sweep_csv(path: str, rows) -> None:
    """Rows in the given order, header exactly the sweep columns, floats at
    17 significant digits; reruns produce identical bytes."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row.csv_values()))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _key_str(key) -> str:
    if isinstance(key, tuple):
        return f"{key[0]},{key[1]}"
    return str(key)


def field_to_dict(field) -> dict:
    modes = {}
    for key in sorted(field.coeffs, key=_key_str):
        arr = field.coeffs[key]
        modes[_key_str(key)] = [[float(c.real), float(c.imag)]
                                for c in np.asarray(arr).reshape(-1)]
    return {
        "dimension": field.dim,
        "delta": field.delta,
        "max_residual": field.max_residual,
        "slabs": [[s.lo, s.hi] for s in field.grid.slabs],
        "modes": modes,
    }


def write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")
