"""Trapezoidal quadrature on rectangular tensor grids.

All densities in this package live on tensor-product grids with per-axis node
vectors, so every integral reduces to an iterated 1-D trapezoid rule. Two
evaluation domains are supported: linear values and log values. The log-domain
path never exponentiates the raw values, which keeps integrands with dynamic
range beyond float64 representable.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalError

__all__ = [
    "trapezoid_weights",
    "integrate",
    "log_integrate",
    "restrict_values",
    "richardson_error",
]


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """Per-node trapezoid weights for a strictly increasing 1-D node vector."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 2:
        raise NumericalError("quadrature axis needs at least 2 nodes")
    w = np.empty_like(nodes)
    w[0] = (nodes[1] - nodes[0]) / 2.0
    w[-1] = (nodes[-1] - nodes[-2]) / 2.0
    if nodes.size > 2:
        w[1:-1] = (nodes[2:] - nodes[:-2]) / 2.0
    return w


def integrate(values: np.ndarray, grid: Sequence[np.ndarray]) -> float:
    """Iterated trapezoid integral of a value tensor over its grid."""
    out = np.asarray(values, dtype=float)
    for axis in reversed(range(len(grid))):
        out = np.trapezoid(out, x=np.asarray(grid[axis], dtype=float), axis=axis)
    return float(out)


def log_integrate(log_values: np.ndarray, grid: Sequence[np.ndarray]) -> float:
    """log of the trapezoid integral of exp(log_values), without overflow.

    Reduces one axis at a time with a weighted logsumexp; -inf entries are
    treated as exact zeros of the integrand.
    """
    out = np.asarray(log_values, dtype=float)
    for axis in reversed(range(len(grid))):
        w = trapezoid_weights(grid[axis])
        out = logsumexp(out, axis=axis, b=np.broadcast_to(w, out.shape))
    return float(out)


def _insert_edge(nodes: np.ndarray, values: np.ndarray, edge: float, axis: int,
                 lower: bool) -> tuple[np.ndarray, np.ndarray]:
    """Clip one side of an axis at `edge`, interpolating a boundary slice.

    Interpolation is linear in whatever domain `values` lives in (callers pass
    log values for log-domain densities, making the edge slice a geometric
    interpolant there).
    """
    if lower:
        keep = nodes > edge
    else:
        keep = nodes < edge
    if edge in nodes:
        keep |= nodes == edge
        nodes_new = nodes[keep]
        values_new = np.compress(keep, values, axis=axis)
        return nodes_new, values_new
    j = int(np.searchsorted(nodes, edge))
    if j == 0 or j == nodes.size:
        raise NumericalError("restriction edge lies outside the grid")
    t = (edge - nodes[j - 1]) / (nodes[j] - nodes[j - 1])
    lo_slice = np.take(values, j - 1, axis=axis)
    hi_slice = np.take(values, j, axis=axis)
    with np.errstate(invalid="ignore"):
        edge_slice = (1.0 - t) * lo_slice + t * hi_slice
    # -inf +/- -inf produces nan; an all-zero neighborhood stays zero
    both_inf = np.isneginf(lo_slice) & np.isneginf(hi_slice)
    if np.any(both_inf):
        edge_slice = np.where(both_inf, -np.inf, edge_slice)
    edge_slice = np.expand_dims(edge_slice, axis=axis)
    kept = np.compress(keep, values, axis=axis)
    if lower:
        nodes_new = np.concatenate(([edge], nodes[keep]))
        values_new = np.concatenate((edge_slice, kept), axis=axis)
    else:
        nodes_new = np.concatenate((nodes[keep], [edge]))
        values_new = np.concatenate((kept, edge_slice), axis=axis)
    return nodes_new, values_new


def restrict_values(values: np.ndarray, grid: Sequence[np.ndarray],
                    box: Sequence[tuple[float, float]]) -> tuple[list[np.ndarray], np.ndarray]:
    """Restrict a value tensor to a sub-box, adding interpolated edge slices.

    Returns the new per-axis node vectors and the clipped tensor. The box must
    be contained in the grid's span.
    """
    vals = np.asarray(values, dtype=float)
    new_grid: list[np.ndarray] = []
    for axis, (lo, hi) in enumerate(box):
        nodes = np.asarray(grid[axis], dtype=float)
        if lo < nodes[0] or hi > nodes[-1]:
            raise NumericalError(
                f"sub-box [{lo}, {hi}] exceeds grid span [{nodes[0]}, {nodes[-1]}] on axis {axis}")
        if lo >= hi:
            raise NumericalError("sub-box has empty interior")
        nodes, vals = _insert_edge(nodes, vals, lo, axis, lower=True)
        nodes, vals = _insert_edge(nodes, vals, hi, axis, lower=False)
        if nodes.size < 2:
            raise NumericalError("restriction leaves fewer than 2 nodes on an axis")
        new_grid.append(nodes)
    return new_grid, vals


def richardson_error(values: np.ndarray, grid: Sequence[np.ndarray],
                     log_domain: bool = False, relative: bool = False) -> float:
    """Crude quadrature error estimate: |I_h - I_2h| / 3.

    Subsamples every other node per axis (keeping both endpoints when the node
    count is odd). Returns nan when any axis is too short to coarsen. With
    `relative` the estimate is divided by |I_h|, which in the log domain never
    leaves log space (safe for integrals beyond float64 range).
    """
    if any(np.asarray(g).size < 3 for g in grid):
        return float("nan")
    idx = [np.unique(np.r_[np.arange(0, np.asarray(g).size, 2), np.asarray(g).size - 1])
           for g in grid]
    coarse_grid = [np.asarray(g, dtype=float)[i] for g, i in zip(grid, idx)]
    coarse_vals = np.asarray(values, dtype=float)
    for axis, i in enumerate(idx):
        coarse_vals = np.take(coarse_vals, i, axis=axis)
    if log_domain:
        fine = log_integrate(values, grid)
        coarse = log_integrate(coarse_vals, coarse_grid)
        if relative:
            return float(abs(np.expm1(coarse - fine)) / 3.0)
        # |e^fine - e^coarse| / 3 without cancellation
        top = max(fine, coarse)
        return float(np.exp(top) * -np.expm1(-abs(fine - coarse)) / 3.0)
    fine = integrate(values, grid)
    coarse = integrate(coarse_vals, coarse_grid)
    if relative:
        return abs(fine - coarse) / (3.0 * abs(fine)) if fine != 0 else float("nan")
    return abs(fine - coarse) / 3.0
