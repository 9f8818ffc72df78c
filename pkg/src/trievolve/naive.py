"""Brute-force reference implementations of the quality measures.

Deliberately slow and structurally independent of :mod:`trievolve.quality`:
every mean is recomputed with explicit Python loops, every regression is fit
from a materialized point list, and pairwise slope distances come from a
double loop.  These exist to pin the vectorized implementations down in
tests; do not use them on large inputs.
"""

from .quality import (
    MODE_OLS,
    MODE_PAPER_LITERAL,
    VIEW_CONDITION,
    VIEW_GENE,
    VIEW_TIME,
    TriclusterCoords,
    _values,
)


def _cell(values, g, c, t) -> float:
    return float(values[g, c, t])


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs)


def residual_naive(tensor, coords: TriclusterCoords, g: int, c: int, t: int) -> float:
    """Residue of one cell with every mean recomputed by direct loops."""
    values = _values(tensor)
    gs, cs, ts = coords.genes, coords.conditions, coords.times
    m_time = _mean(_cell(values, gg, cc, t) for gg in gs for cc in cs)
    m_cond = _mean(_cell(values, gg, c, tt) for gg in gs for tt in ts)
    m_gene = _mean(_cell(values, g, cc, tt) for cc in cs for tt in ts)
    m_ct = _mean(_cell(values, gg, c, t) for gg in gs)
    m_gt = _mean(_cell(values, g, cc, t) for cc in cs)
    m_gc = _mean(_cell(values, g, c, tt) for tt in ts)
    m_all = _mean(
        _cell(values, gg, cc, tt) for gg in gs for cc in cs for tt in ts
    )
    return _cell(values, g, c, t) + m_time + m_cond + m_gene - m_ct - m_gt - m_gc - m_all


def msr3d_naive(tensor, coords: TriclusterCoords) -> float:
    """Triple-loop mean squared residue."""
    total = 0.0
    for g in coords.genes:
        for c in coords.conditions:
            for t in coords.times:
                r = residual_naive(tensor, coords, g, c, t)
                total += r * r
    return total / coords.volume


def _ols_slope(points) -> float:
    # Two-pass mean-centered covariance / variance fit.
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    xm, ym = _mean(xs), _mean(ys)
    num = sum((x - xm) * (y - ym) for x, y in points)
    den = sum((x - xm) ** 2 for x in xs)
    return num / den


def _literal_slope(points, axis_positions) -> float:
    # Accumulator formulas evaluated verbatim: the point count and x-sums
    # range over the axis subset only, while sum_xy / sum_y range over the
    # full point list.
    n = len(axis_positions)
    sum_x = sum(axis_positions)
    sum_xx = sum(x * x for x in axis_positions)
    sum_xy = sum(x * y for x, y in points)
    sum_y = sum(y for _, y in points)
    return (n * sum_xy - sum_x * sum_y) / (n * sum_xx - sum_x * sum_x)


def view_point_lists(tensor, coords: TriclusterCoords, axis: str):
    """Materialize each view coordinate's (x, y) scatter as a plain list."""
    values = _values(tensor)
    gs, cs, ts = coords.genes, coords.conditions, coords.times
    if axis == VIEW_TIME:
        return [
            [
                (gi, _cell(values, g, c, t))
                for gi, g in enumerate(gs)
                for c in cs
            ]
            for t in ts
        ]
    if axis == VIEW_CONDITION:
        return [
            [
                (gi, _cell(values, g, c, t))
                for t in ts
                for gi, g in enumerate(gs)
            ]
            for c in cs
        ]
    if axis == VIEW_GENE:
        return [
            [
                (ti, _cell(values, g, c, t))
                for ti, t in enumerate(ts)
                for g in gs
            ]
            for c in cs
        ]
    raise ValueError(f"unknown view {axis!r}")


def view_slopes_naive(tensor, coords: TriclusterCoords, axis: str, mode: str):
    """One slope per view coordinate, fit from the materialized point list."""
    point_lists = view_point_lists(tensor, coords, axis)
    if mode == MODE_OLS:
        return [_ols_slope(points) for points in point_lists]
    if mode == MODE_PAPER_LITERAL:
        if axis in (VIEW_TIME, VIEW_CONDITION):
            positions = list(range(coords.n_genes))
        else:
            positions = list(range(coords.n_times))
        return [_literal_slope(points, positions) for points in point_lists]
    raise ValueError(f"unknown slope mode {mode!r}")


def _mean_pairwise(slopes) -> float:
    n = len(slopes)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += abs(slopes[i] - slopes[j])
    return total / ((n - 1) * n)


def lsl_naive(tensor, coords: TriclusterCoords, mode: str = MODE_OLS) -> float:
    """Point-list LSL: fit every line independently, average pairwise
    slope distances per view, then average the three views."""
    t_r = _mean_pairwise(view_slopes_naive(tensor, coords, VIEW_TIME, mode))
    c_r = _mean_pairwise(view_slopes_naive(tensor, coords, VIEW_CONDITION, mode))
    g_r = _mean_pairwise(view_slopes_naive(tensor, coords, VIEW_GENE, mode))
    return (t_r + c_r + g_r) / 3.0
