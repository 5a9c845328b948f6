"""Core types: parameter spaces, grid densities, compact nests, models.

Densities are represented up to a positive constant as value tensors on
rectangular tensor-product grids ("density classes"). Values may be stored in
the linear or the log domain; the log domain activates automatically when the
dynamic range of the values exceeds 1e300, and every operation accepts both
representations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal, Sequence

import numpy as np

from . import quadrature
from .errors import ConfigError, NumericalError

__all__ = [
    "ParamSpace",
    "AlphaParams",
    "GridDensity",
    "CompactNest",
    "Model",
    "make_grid",
    "normalize",
    "restrict_renormalize",
    "mixture",
    "density_from_function",
    "sample_grid_density",
]

# dynamic range of linear values beyond which log storage kicks in
_LOG_SWITCH_RANGE = 1e300
# |integral - 1| tolerance guaranteed by normalize, under the same quadrature rule
NORMALIZATION_TOL = 1e-12
# sup-norm tolerance of max-normalized values for density-class equality
CLASS_EQUAL_TOL = 1e-9

Properness = Literal["proper", "improper", "unknown"]


@dataclass(frozen=True)
class ParamSpace:
    """A rectangular parameter domain with per-edge openness flags.

    Infinite edges are forced open. `open_lower[i]` / `open_upper[i]` mark the
    i-th axis edges; open or infinite edges are where densities may blow up and
    where grids cluster or spread geometrically.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    open_lower: tuple[bool, ...]
    open_upper: tuple[bool, ...]

    def __post_init__(self):
        d = len(self.lower)
        if d == 0:
            raise ConfigError("parameter space needs at least one axis")
        if not (len(self.upper) == len(self.open_lower) == len(self.open_upper) == d):
            raise ConfigError("parameter space field lengths disagree")
        for lo, hi in zip(self.lower, self.upper):
            if math.isnan(lo) or math.isnan(hi) or not lo < hi:
                raise ConfigError(f"invalid axis bounds [{lo}, {hi}]")
        # infinite edges are open by definition
        object.__setattr__(self, "open_lower", tuple(
            o or math.isinf(lo) for o, lo in zip(self.open_lower, self.lower)))
        object.__setattr__(self, "open_upper", tuple(
            o or math.isinf(hi) for o, hi in zip(self.open_upper, self.upper)))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def compact(self) -> bool:
        return all(math.isfinite(lo) for lo in self.lower) and \
            all(math.isfinite(hi) for hi in self.upper)

    @classmethod
    def box(cls, bounds: Sequence[tuple[float, float]],
            open_lower: Sequence[bool] | None = None,
            open_upper: Sequence[bool] | None = None) -> "ParamSpace":
        lower = tuple(float(b[0]) for b in bounds)
        upper = tuple(float(b[1]) for b in bounds)
        d = len(bounds)
        return cls(lower, upper,
                   tuple(open_lower) if open_lower is not None else (False,) * d,
                   tuple(open_upper) if open_upper is not None else (False,) * d)


@dataclass(frozen=True)
class AlphaParams:
    """Divergence order alpha, restricted to the open interval (0, 1)."""

    alpha: float

    def __post_init__(self):
        if not (isinstance(self.alpha, (int, float)) and 0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")


def _as_grid(grid: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    out = []
    for g in grid:
        g = np.asarray(g, dtype=float)
        if g.ndim != 1 or g.size < 2:
            raise ConfigError("each grid axis needs a 1-D vector of >= 2 nodes")
        if not np.all(np.diff(g) > 0):
            raise ConfigError("grid nodes must be strictly increasing")
        out.append(g)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class GridDensity:
    """A density class on a tensor grid: values up to a positive constant.

    `values` holds linear densities when `log_scale` is False and log densities
    otherwise. Linear values must be >= 0; log values may be -inf (exact zero)
    but never +inf or nan. At least one value must be positive.
    """

    space: ParamSpace
    grid: tuple[np.ndarray, ...]
    values: np.ndarray
    log_scale: bool = False
    properness: Properness = "unknown"

    def __post_init__(self):
        grid = _as_grid(self.grid)
        object.__setattr__(self, "grid", grid)
        if len(grid) != self.space.dim:
            raise ConfigError("grid dimension does not match the parameter space")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != tuple(g.size for g in grid):
            raise ConfigError("value tensor shape does not match the grid")
        for axis, g in enumerate(grid):
            lo, hi = self.space.lower[axis], self.space.upper[axis]
            if g[0] < lo or g[-1] > hi:
                raise ConfigError(f"grid axis {axis} leaves the parameter space")
        if self.log_scale:
            if np.any(np.isnan(vals)) or np.any(np.isposinf(vals)):
                raise NumericalError("log-scale density values must be < +inf and not nan")
            if not np.any(vals > -np.inf):
                raise NumericalError("density is identically zero")
        else:
            if not np.all(np.isfinite(vals)):
                raise NumericalError("density values must be finite")
            if np.any(vals < 0):
                raise NumericalError("density values must be >= 0")
            if not np.any(vals > 0):
                raise NumericalError("density is identically zero")
        object.__setattr__(self, "values", vals)
        if self.properness not in ("proper", "improper", "unknown"):
            raise ConfigError(f"unknown properness flag {self.properness!r}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_values(cls, space: ParamSpace, grid: Sequence[np.ndarray],
                    values: np.ndarray, properness: Properness = "unknown") -> "GridDensity":
        return cls(space, tuple(grid), np.asarray(values, dtype=float),
                   log_scale=False, properness=properness)

    @classmethod
    def from_log_values(cls, space: ParamSpace, grid: Sequence[np.ndarray],
                        log_values: np.ndarray,
                        properness: Properness = "unknown") -> "GridDensity":
        """Build from log values, dropping to linear storage when safe."""
        lv = np.asarray(log_values, dtype=float)
        if np.any(np.isnan(lv)) or np.any(np.isposinf(lv)):
            raise NumericalError("log density values must be < +inf and not nan")
        top = float(np.max(lv))
        finite = lv[np.isfinite(lv)]
        bottom = float(np.min(finite)) if finite.size else top
        if top - bottom <= math.log(_LOG_SWITCH_RANGE) and abs(top) < 700:
            return cls(space, tuple(grid), np.exp(lv), log_scale=False,
                       properness=properness)
        return cls(space, tuple(grid), lv, log_scale=True, properness=properness)

    # -- basic views -------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def box(self) -> tuple[tuple[float, float], ...]:
        return tuple((float(g[0]), float(g[-1])) for g in self.grid)

    def log_values(self) -> np.ndarray:
        if self.log_scale:
            return self.values
        with np.errstate(divide="ignore"):
            return np.log(self.values)

    def linear_values(self) -> np.ndarray:
        if not self.log_scale:
            return self.values
        if np.max(self.values) > 700.0:
            raise NumericalError("density values overflow the linear domain")
        return np.exp(self.values)

    def max_normalized(self) -> np.ndarray:
        """Linear values scaled so the maximum equals 1 (class representative)."""
        if self.log_scale:
            return np.exp(self.values - np.max(self.values))
        return self.values / np.max(self.values)

    # -- integration -------------------------------------------------------

    def log_integral(self) -> float:
        if self.log_scale:
            return quadrature.log_integrate(self.values, self.grid)
        val = quadrature.integrate(self.values, self.grid)
        if not val > 0 or not math.isfinite(val):
            raise NumericalError("cannot normalize: integral is zero or not finite")
        return math.log(val)

    def integral(self) -> float:
        if self.log_scale:
            return float(np.exp(self.log_integral()))
        return quadrature.integrate(self.values, self.grid)

    # -- class comparison --------------------------------------------------

    def same_grid(self, other: "GridDensity") -> bool:
        return self.dim == other.dim and all(
            a.size == b.size and np.array_equal(a, b)
            for a, b in zip(self.grid, other.grid))

    def class_distance(self, other: "GridDensity") -> float:
        """Sup-norm distance between max-normalized representatives."""
        if not self.same_grid(other):
            raise ConfigError("density-class comparison requires identical grids")
        return float(np.max(np.abs(self.max_normalized() - other.max_normalized())))

    def class_equal(self, other: "GridDensity", tol: float = CLASS_EQUAL_TOL) -> bool:
        return self.class_distance(other) <= tol

    def with_properness(self, properness: Properness) -> "GridDensity":
        return replace(self, properness=properness)

    def values_at(self, points: np.ndarray) -> np.ndarray:
        """Linear interpolation of a 1-D density at arbitrary points."""
        if self.dim != 1:
            raise ConfigError("values_at is defined for 1-D densities only")
        return np.interp(np.asarray(points, dtype=float), self.grid[0],
                         self.linear_values())


@dataclass(frozen=True)
class CompactNest:
    """An increasing sequence of compact boxes exhausting a parameter space.

    Box i+1 strictly contains box i on every axis that is still expandable
    (open or infinite edges not yet exhausted); closed finite edges coincide
    with the space's own bounds in every box.
    """

    space: ParamSpace
    boxes: tuple[tuple[tuple[float, float], ...], ...]

    def __post_init__(self):
        if not self.boxes:
            raise ConfigError("a nest needs at least one box")
        for b in self.boxes:
            if len(b) != self.space.dim:
                raise ConfigError("nest box dimension mismatch")
            for axis, (lo, hi) in enumerate(b):
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise ConfigError(f"nest boxes must be compact, got [{lo}, {hi}]")
                if lo < self.space.lower[axis] or hi > self.space.upper[axis]:
                    raise ConfigError("nest box leaves the parameter space")
        for prev, nxt in zip(self.boxes, self.boxes[1:]):
            for (lo0, hi0), (lo1, hi1) in zip(prev, nxt):
                if lo1 > lo0 or hi1 < hi0:
                    raise ConfigError("nest boxes must be increasing")

    @property
    def depth(self) -> int:
        return len(self.boxes)

    @classmethod
    def default(cls, space: ParamSpace, depth: int) -> "CompactNest":
        """Default schedule: box i offsets open finite edges by 10^-(i+1)
        (scaled into tiny domains) and truncates infinite edges at 10^(i+1)."""
        if depth < 1:
            raise ConfigError("nest depth must be >= 1")
        boxes = []
        for i in range(depth):
            box = []
            for axis in range(space.dim):
                lo_s, hi_s = space.lower[axis], space.upper[axis]
                span = hi_s - lo_s if math.isfinite(lo_s) and math.isfinite(hi_s) else None
                off = 10.0 ** (-(i + 1))
                if span is not None and off >= span / 2:
                    off = span * 10.0 ** (-(i + 1)) / 2
                lo = -(10.0 ** (i + 1)) if math.isinf(lo_s) else \
                    (lo_s + off if space.open_lower[axis] else lo_s)
                hi = 10.0 ** (i + 1) if math.isinf(hi_s) else \
                    (hi_s - off if space.open_upper[axis] else hi_s)
                if not lo < hi:
                    raise NumericalError("default nest produced an empty box")
                box.append((lo, hi))
            boxes.append(tuple(box))
        return cls(space, tuple(boxes))


@dataclass(frozen=True)
class Model:
    """A dominated parametric model.

    log_likelihood(y, theta) maps an (n, ...) observation array and a length-d
    parameter vector to the n per-observation log densities. sampler(theta,
    rng, n) draws n observations. loglik_sum_batch, when present, maps a
    dataset y and an (m, d) parameter array to the m summed log likelihoods
    (a vectorization shortcut used by grid sweeps; the generic fallback loops).
    """

    param_space: ParamSpace
    log_likelihood: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sampler: Callable[[np.ndarray, np.random.Generator, int], np.ndarray]
    data_space_dim: int = 1
    fisher_closed_form: Callable[[np.ndarray], np.ndarray] | None = None
    loglik_sum_batch: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = ""

    @property
    def dim(self) -> int:
        return self.param_space.dim

    def loglik_sum(self, y: np.ndarray, theta: np.ndarray) -> float:
        ll = self.log_likelihood(np.asarray(y), np.asarray(theta, dtype=float))
        return float(np.sum(ll))

    def loglik_sum_over(self, y: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        """Summed log likelihood of one dataset at each row of thetas."""
        thetas = np.asarray(thetas, dtype=float)
        if self.loglik_sum_batch is not None:
            return np.asarray(self.loglik_sum_batch(y, thetas), dtype=float)
        return np.array([self.loglik_sum(y, t) for t in thetas])


# -- grid construction -----------------------------------------------------


def _geom_from(anchor: float, lo_off: float, hi_off: float, n: int) -> np.ndarray:
    return anchor + np.geomspace(lo_off, hi_off, n)


def _axis_nodes(space: ParamSpace, axis: int, lo: float, hi: float, n: int) -> np.ndarray:
    """Nodes on [lo, hi]: geometric toward marked (open/infinite) edges,
    uniform otherwise."""
    b_lo, b_hi = space.lower[axis], space.upper[axis]
    m_lo, m_hi = space.open_lower[axis], space.open_upper[axis]
    if n < 2:
        raise ConfigError("nodes_per_axis must be >= 2")
    if not (m_lo or m_hi):
        return np.linspace(lo, hi, n)
    if math.isinf(b_lo) and math.isinf(b_hi):
        # doubly infinite axis: no anchor for geometric spacing
        return np.linspace(lo, hi, n)
    if m_lo and m_hi and math.isfinite(b_lo) and math.isfinite(b_hi):
        # both finite edges marked: geometric halves joined at the midpoint
        mid = 0.5 * (lo + hi)
        n1 = n // 2 + 1
        n2 = n - n1 + 1
        left = _geom_from(b_lo, lo - b_lo, mid - b_lo, n1)
        right = (b_hi - np.geomspace(b_hi - hi, b_hi - mid, n2))[::-1]
        return np.concatenate((left, right[1:]))
    if m_lo and math.isfinite(b_lo):
        # anchored at the lower edge; also spreads geometrically to +inf
        return _geom_from(b_lo, lo - b_lo, hi - b_lo, n)
    if m_hi and math.isfinite(b_hi):
        return (b_hi - np.geomspace(b_hi - hi, b_hi - lo, n))[::-1]
    if m_hi and math.isinf(b_hi):
        # infinite upper edge with an unmarked finite lower bound
        if lo > 0:
            return np.geomspace(lo, hi, n)
        span = hi - lo
        return np.concatenate(([lo], lo + np.geomspace(span * 1e-4, span, n - 1)))
    # infinite lower edge with an unmarked finite upper bound
    if hi < 0:
        return -np.geomspace(-hi, -lo, n)[::-1]
    span = hi - lo
    return np.concatenate(((hi - np.geomspace(span * 1e-4, span, n - 1))[::-1], [hi]))


def make_grid(space: ParamSpace, nest_index: int | None = None,
              nodes_per_axis: int | Sequence[int] = 65,
              nest: CompactNest | None = None) -> tuple[np.ndarray, ...]:
    """Per-axis node vectors on a compact box of the space.

    The box is the space itself when it is compact and nest_index is None;
    otherwise box nest_index of `nest` (default CompactNest schedule). An
    unbounded space with no nest index is an error: compact box required.
    """
    if isinstance(nodes_per_axis, int):
        counts = [nodes_per_axis] * space.dim
    else:
        counts = list(nodes_per_axis)
        if len(counts) != space.dim:
            raise ConfigError("nodes_per_axis length does not match the space")
    if nest_index is None:
        if not space.compact:
            raise ConfigError("compact box required: pass nest_index for unbounded spaces")
        box = tuple((space.lower[a], space.upper[a]) for a in range(space.dim))
    else:
        if nest_index < 0:
            raise ConfigError("nest_index must be >= 0")
        if nest is None:
            nest = CompactNest.default(space, nest_index + 1)
        if nest_index >= nest.depth:
            raise ConfigError("nest_index exceeds the nest depth")
        box = nest.boxes[nest_index]
    return tuple(_axis_nodes(space, a, box[a][0], box[a][1], counts[a])
                 for a in range(space.dim))


def mesh(grid: Sequence[np.ndarray]) -> list[np.ndarray]:
    return list(np.meshgrid(*grid, indexing="ij"))


def density_from_function(space: ParamSpace, grid: Sequence[np.ndarray],
                          fn: Callable[..., np.ndarray], log_fn: bool = False,
                          properness: Properness = "unknown") -> GridDensity:
    """Evaluate fn on the mesh of `grid`. fn receives one array per axis and
    returns (log-)density values; set log_fn when fn returns log values."""
    vals = np.asarray(fn(*mesh(grid)), dtype=float)
    if log_fn:
        return GridDensity.from_log_values(space, grid, vals, properness=properness)
    return GridDensity.from_values(space, grid, vals, properness=properness)


# -- density operations ----------------------------------------------------


def normalize(density: GridDensity) -> GridDensity:
    """Scale a density to unit mass under its own trapezoid rule.

    The output integrates to 1 within 1e-12 when re-integrated by the same
    rule. Zero or non-finite mass raises "cannot normalize".
    """
    log_i = density.log_integral()
    if not math.isfinite(log_i):
        raise NumericalError("cannot normalize: integral is zero or not finite")
    if density.log_scale:
        return GridDensity.from_log_values(density.space, density.grid,
                                           density.values - log_i, properness="proper")
    return GridDensity.from_values(density.space, density.grid,
                                   density.values / math.exp(log_i), properness="proper")


def restrict_renormalize(density: GridDensity,
                         box: Sequence[tuple[float, float]]) -> GridDensity:
    """Restrict a density to a sub-box and renormalize there.

    Box edges that fall between nodes are inserted by interpolation (linear in
    the density's own storage domain). Idempotent on its own output. A
    restriction with zero mass raises "restriction has null mass".
    """
    if len(box) != density.dim:
        raise ConfigError("restriction box dimension mismatch")
    new_grid, vals = quadrature.restrict_values(density.values, density.grid, box)
    sub = GridDensity(density.space, tuple(new_grid), vals,
                      log_scale=density.log_scale, properness="unknown")
    try:
        return normalize(sub)
    except NumericalError as exc:
        raise NumericalError("restriction has null mass") from exc


def mixture(d1: GridDensity, d2: GridDensity, t: float) -> GridDensity:
    """Pointwise convex mixture t*d1 + (1-t)*d2 of two proper densities on a
    shared grid."""
    if not 0.0 <= t <= 1.0:
        raise ConfigError("mixture weight must lie in [0, 1]")
    if not d1.same_grid(d2):
        raise ConfigError("mixture requires identical grids")
    if d1.properness != "proper" or d2.properness != "proper":
        raise ConfigError("mixture requires proper densities (normalize first)")
    if d1.log_scale or d2.log_scale:
        with np.errstate(divide="ignore"):
            lv = np.logaddexp(
                (math.log(t) if t > 0 else -np.inf) + d1.log_values(),
                (math.log(1 - t) if t < 1 else -np.inf) + d2.log_values())
        return GridDensity.from_log_values(d1.space, d1.grid, lv, properness="proper")
    vals = t * d1.values + (1.0 - t) * d2.values
    return GridDensity.from_values(d1.space, d1.grid, vals, properness="proper")


def sample_grid_density(density: GridDensity, n: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Draw n points from a grid density: categorical over cells by trapezoid
    cell mass, uniform within the chosen cell.

    The within-cell uniform step samples the piecewise-constant cell-mass
    approximation of the density; the bias vanishes with the mesh. Returns an
    (n, dim) array.
    """
    vals = density.max_normalized()
    cell = vals
    for axis in range(density.dim):
        lo = np.take(cell, range(cell.shape[axis] - 1), axis=axis)
        hi = np.take(cell, range(1, cell.shape[axis]), axis=axis)
        cell = 0.5 * (lo + hi)
    vol = np.ones_like(cell)
    for axis, g in enumerate(density.grid):
        shape = [1] * density.dim
        shape[axis] = g.size - 1
        vol = vol * np.diff(g).reshape(shape)
    masses = (cell * vol).ravel()
    total = masses.sum()
    if not total > 0 or not math.isfinite(total):
        raise NumericalError("cannot sample: density has zero or non-finite mass")
    idx = rng.choice(masses.size, size=n, p=masses / total)
    multi = np.unravel_index(idx, cell.shape)
    out = np.empty((n, density.dim))
    u = rng.random((n, density.dim))
    for axis, g in enumerate(density.grid):
        left = g[multi[axis]]
        right = g[multi[axis] + 1]
        out[:, axis] = left + u[:, axis] * (right - left)
    return out
