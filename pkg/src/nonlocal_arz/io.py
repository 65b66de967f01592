"""CSV and JSON writers for snapshots, curves, traces and reports.

CSV files carry optional ``# key=value`` header lines followed by a plain
comma-separated table, so they load in numpy, pandas or gnuplot
(``set datafile separator ','``) without preprocessing.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

SNAPSHOT_COLUMNS = ("t", "x", "rho", "u", "psi", "rho_tilde", "d_rho_dx")
CURVE_COLUMNS = ("rho", "value", "active_branch")
TRACE_COLUMNS = ("t", "X", "rho", "d", "F", "G", "slowdown", "eta_at_rho")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence], meta: Optional[Mapping] = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for k, v in (meta or {}).items():
            if v is not None:
                fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_table(path):
    """Return (meta, columns) with numeric columns as arrays where possible."""
    meta = {}
    lines = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = _parse_scalar(v.strip())
            else:
                lines.append(line)
    rows = list(csv.DictReader(lines))
    cols = {}
    for name in (rows[0].keys() if rows else []):
        vals = [r[name] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals, dtype=object)
    return meta, cols


def _parse_scalar(v: str):
    if v in ("None", ""):
        return None
    try:
        return float(v)
    except ValueError:
        return v


def write_snapshots(path, snapshots):
    """Long format: one row per (time level, cell)."""
    def rows():
        for s in snapshots:
            d = s.d_rho_dx
            for i in range(s.x.size):
                yield (s.t, s.x[i], s.rho[i], s.u[i], s.psi[i], s.rho_tilde[i], d[i])
    return write_table(path, SNAPSHOT_COLUMNS, rows())


def write_curve(path, curve):
    meta = {"kind": curve.kind, "J": curve.J, "C_eta": curve.C_eta,
            "rho_c": curve.rho_c, "rho_star": curve.rho_star}
    return write_table(path, CURVE_COLUMNS, zip(curve.rho, curve.value, curve.branch), meta)


def write_trace(path, trace, curve=None):
    if curve is not None:
        eta = np.asarray(curve(np.clip(trace.rho, 0.0, curve.rho_c)), dtype=float)
    else:
        eta = np.full(trace.t.size, np.nan)
    cols = (trace.t, trace.X, trace.rho, trace.d, trace.F, trace.G, trace.slowdown, eta)
    meta = {"x0": trace.x0, "reason": trace.reason}
    return write_table(path, TRACE_COLUMNS, zip(*cols), meta)


def write_phase_plane(path, traces):
    """(rho, d) pairs per seed, blank-line separated blocks for gnuplot ``index``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("seed,rho,d\n")
        for k, tr in enumerate(traces):
            if k:
                fh.write("\n\n")
            for r, d in zip(tr.rho, tr.d):
                fh.write(f"{k},{r!r},{d!r}\n")
    return path


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _clean(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None if math.isnan(o) else ("inf" if o > 0 else "-inf")
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def write_json(path, obj, indent=1):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_clean(json.loads(json.dumps(obj, default=_default))), indent=indent)
    path.write_text(text + "\n")
    return path


def read_curve(path):
    """Rebuild a ThresholdCurve written by :func:`write_curve`."""
    from .thresholds import ThresholdCurve

    meta, cols = read_table(path)
    rho, value = cols["rho"], cols["value"]
    branch = np.asarray(cols["active_branch"], dtype=object)
    rho_star = meta.get("rho_star")
    return ThresholdCurve(
        str(meta.get("kind", "eta")), rho, value, branch,
        float(meta.get("rho_c", rho[-1])),
        float((value[1] - value[0]) / (rho[1] - rho[0])),
        float(meta.get("C_eta") or 0.0),
        None if rho_star is None else float(rho_star),
        float(meta.get("J") or float("nan")),
    )
