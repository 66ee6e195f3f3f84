"""Deterministic emitters: JSON reports, trajectory CSV, SVG curve plots.

Identical inputs give byte-identical outputs: floats are written with
repr, JSON keys are sorted, and the SVG is a pure function of the CSV
columns it plots.
"""

from __future__ import annotations

import json

import numpy as np

from .integrate import Trajectory


def _coerce(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False,
                      default=_coerce) + "\n"


def trajectory_csv(traj: Trajectory, with_velocity: bool | None = None) -> str:
    """Columns t,x1,x2 for flows and t,x1,x2,v1,v2 for geodesics."""
    dim = traj.states.shape[1]
    if with_velocity is None:
        with_velocity = dim >= 4
    header = "t,x1,x2,v1,v2" if with_velocity else "t,x1,x2"
    lines = [header]
    for t, y in zip(traj.times, traj.states):
        cols = [repr(float(t)), repr(float(y[0])), repr(float(y[1]))]
        if with_velocity:
            cols += [repr(float(y[2])), repr(float(y[3]))]
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"


def parse_trajectory_csv(text: str):
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return header, np.array(rows)


def svg_polyline(points, width: int = 640, height: int = 480,
                 x_label: str = "x1", y_label: str = "x2") -> str:
    """A single polyline fitted into the viewBox with a 5% margin, with
    axis labels; y grows upward."""
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        raise ValueError("no points to plot")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    margin = 0.05 * span
    lo = lo - margin
    hi = hi + margin
    span = hi - lo

    def sx(v):
        return (v - lo[0]) / span[0] * width

    def sy(v):
        return height - (v - lo[1]) / span[1] * height

    coords = " ".join(f"{sx(p[0]):.3f},{sy(p[1]):.3f}" for p in pts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">\n'
        f'  <rect width="{width}" height="{height}" fill="white"/>\n'
        f'  <polyline fill="none" stroke="black" stroke-width="1.5" points="{coords}"/>\n'
        f'  <text x="{width - 30}" y="{height - 8}" font-size="14">{x_label}</text>\n'
        f'  <text x="8" y="16" font-size="14">{y_label}</text>\n'
        f"</svg>\n"
    )


def svg_from_csv(text: str, width: int = 640, height: int = 480) -> str:
    header, rows = parse_trajectory_csv(text)
    i1, i2 = header.index("x1"), header.index("x2")
    return svg_polyline(rows[:, (i1, i2)], width, height, "x1", "x2")
