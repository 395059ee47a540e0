"""Static SVG pictures of decompositions and retraction traces in R^1 and R^2."""

from __future__ import annotations

from fractions import Fraction

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from .cells import cell_from_json  # noqa: E402
from .scalar import NEG_INF, POS_INF, is_infinite  # noqa: E402

PRECISION = 6


class RenderError(ValueError):
    pass


def _f(v) -> float:
    return round(float(Fraction(int(v.numerator), int(v.denominator))), PRECISION)


def _finite_values(cells):
    vals = []
    for c in cells:
        for s in c.stages():
            for m in (s.lower, s.upper):
                if not is_infinite(m):
                    vals.append(abs(_f(m.const)))
    return vals


def view_box(cells, points=()):
    """Square window holding every finite constant and point, padded."""
    vals = _finite_values(cells) + [abs(_f(v)) for p in points for v in p]
    r = max(vals, default=1.0)
    r = max(1.0, r) * 1.25 + 1
    return (-r, r)


def _clamp_1d(s, lo, hi):
    a = lo if s.lower is NEG_INF else max(lo, _f(s.lower.const))
    b = hi if s.upper is POS_INF else min(hi, _f(s.upper.const))
    return a, b


def _eval2(m, x, lo, hi):
    if m is NEG_INF:
        return lo
    if m is POS_INF:
        return hi
    c0, c1 = _f(m.const), _f(m.coeffs[0])
    return min(hi, max(lo, round(c0 + c1 * x, PRECISION)))


def _draw_cell(ax, cell, lo, hi, shade):
    stages = cell.stages()
    s1 = stages[0]
    if len(stages) == 1:
        if s1.is_graph:
            ax.plot([_f(s1.lower.const)], [0], "o", color="black", ms=3)
        else:
            a, b = _clamp_1d(s1, lo, hi)
            ax.plot([a, b], [0, 0], "-", color=str(shade), lw=4)
        return
    s2 = stages[1]
    if s1.is_graph:
        x = _f(s1.lower.const)
        if s2.is_graph:
            ax.plot([x], [_eval2(s2.lower, x, lo, hi)], "o", color="black", ms=3)
        else:
            ax.plot([x, x], [_eval2(s2.lower, x, lo, hi), _eval2(s2.upper, x, lo, hi)], "-", color="0.3", lw=1)
        return
    a, b = _clamp_1d(s1, lo, hi)
    if s2.is_graph:
        ax.plot([a, b], [_eval2(s2.lower, a, lo, hi), _eval2(s2.lower, b, lo, hi)], "-", color="0.2", lw=1)
        return
    verts = [
        (a, _eval2(s2.lower, a, lo, hi)),
        (b, _eval2(s2.lower, b, lo, hi)),
        (b, _eval2(s2.upper, b, lo, hi)),
        (a, _eval2(s2.upper, a, lo, hi)),
    ]
    ax.add_patch(Polygon(verts, closed=True, facecolor=str(shade), edgecolor="none"))


def _shade(i):
    return round(0.72 + 0.2 * ((i * 7) % 10) / 10, 2)


def render(obj, path) -> None:
    """Write a deterministic SVG for a decomposition JSON or a retraction trace JSON."""
    cells, trajectories = [], []
    n = None
    if "cells" in obj:
        cells = [cell_from_json(c) for c in obj["cells"]]
        if cells:
            n = cells[0].dim
        elif "n" in obj:
            n = int(obj["n"])
    if "samples" in obj:
        by_x = {}
        for s in obj["samples"]:
            by_x.setdefault(tuple(s["x"]), []).append((Fraction(s["t"]), s["Hx"]))
        for x, pts in by_x.items():
            pts.sort(key=lambda p: p[0])
            trajectories.append([tuple(Fraction(v) for v in hx) for _, hx in pts])
        if trajectories:
            n = n or len(trajectories[0][0])
    if n is None:
        n = int(obj.get("n", 2))
    if n > 2:
        raise RenderError(f"rendering needs ambient dimension <= 2, got {n}")
    lo, hi = view_box(cells, [p for tr in trajectories for p in tr])

    plt.rcParams["svg.hashsalt"] = "semistar"
    plt.rcParams["svg.fonttype"] = "none"
    fig, ax = plt.subplots(figsize=(5, 5))
    for i, c in enumerate(cells):
        _draw_cell(ax, c, lo, hi, _shade(i))
    for tr in trajectories:
        xs = [float(p[0]) for p in tr]
        ys = [float(p[1]) if n == 2 else 0.0 for p in tr]
        ax.plot(xs, ys, "-", color="tab:blue", lw=1)
        ax.plot(xs[-1:], ys[-1:], "o", color="tab:red", ms=3)
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_aspect("equal")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
