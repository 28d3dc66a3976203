"""CSV/JSON artefacts. Floats are written with 17 significant digits so a
file read back reproduces the numbers bit for bit, and JSON keys are sorted,
which makes repeated runs byte-identical."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .functions import FSpec, KSpec
from .radial import RadialProfile

__all__ = [
    "write_table",
    "read_table",
    "write_json",
    "read_json",
    "sidecar_path",
    "save_profile",
    "load_profile",
    "save_mass_scan",
    "save_blowdown",
    "save_pohozaev",
]


def _fmt(v) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else format(v, ".17g")


def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays become Python values, NaN becomes null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in np.asarray(rows, dtype=float):
            w.writerow([_fmt(v) for v in row])


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return header, data


def write_json(path, payload: dict, config: dict | None = None) -> None:
    doc = dict(payload)
    doc["version"] = __version__
    if config is not None:
        doc["config"] = config
    with open(path, "w") as fh:
        json.dump(_clean(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_profile(profile: RadialProfile, path, extra: dict | None = None, config=None) -> None:
    write_table(path, ("s", "u", "u_s"), np.column_stack([profile.s_grid, profile.u, profile.u_s]))
    meta = profile.describe()
    meta["f_spec"] = list(profile.f_spec.coeffs)
    meta["K_spec"] = [profile.k_spec.amplitude, profile.k_spec.width]
    meta.update(extra or {})
    write_json(sidecar_path(path), meta, config)


def load_profile(path) -> RadialProfile:
    """Rebuild a profile from its CSV and sidecar (cubic Hermite interpolation)."""
    header, data = read_table(path)
    if header != ["s", "u", "u_s"]:
        raise ValueError(f"{path}: expected header s,u,u_s, got {','.join(header)}")
    side = sidecar_path(path)
    meta = read_json(side) if side.exists() else {}
    if "rho" not in meta:
        raise ValueError(f"{side}: sidecar with rho is required")
    alpha = meta.get("alpha")
    return RadialProfile(
        rho=float(meta["rho"]),
        epsilon=float(meta.get("epsilon", math.nan)),
        s_grid=data[:, 0],
        u=data[:, 1],
        u_s=data[:, 2],
        alpha=math.nan if alpha is None else float(alpha),
        f_spec=FSpec(tuple(meta.get("f_spec", (1.5,)))),
        k_spec=KSpec(*meta.get("K_spec", (0.0, 1.0))),
        tolerance=float(meta.get("tolerance", 1e-10)),
        s_break=meta.get("s_break"),
        method="loaded",
    )


def save_mass_scan(scan, path, config=None) -> None:
    write_table(path, scan.COLUMNS, scan.table())
    meta = {"source": scan.source, **scan.meta}
    if scan.M_error is not None:
        meta["M_error"] = scan.M_error
    if scan.area is not None:
        meta["area"] = scan.area
    write_json(sidecar_path(path), meta, config)


def save_blowdown(report, path, config=None) -> None:
    write_table(path, report.COLUMNS, report.table())
    write_json(sidecar_path(path), report.summary(), config)


def save_pohozaev(report, path, config=None) -> None:
    write_json(path, report.to_dict(), config)
