"""Posterior sampling and propriety diagnostics.

Random-walk Metropolis chains for (prior, likelihood, data) triples, a
nested-quadrature probe for posterior propriety, and kernel density
estimates of 1-D marginals for prior-sensitivity plots.

Conventions shared by this module:

* A "log prior evaluator" is a callable mapping a (..., d) parameter array
  to log densities, -inf off the support. `models.twopiece_log_prior` builds
  the two evaluators used in the sensitivity study.
* Scale parameters are sampled on the log scale with the Jacobian folded
  into the target; `twopiece_posterior_z` packages that transformation for
  the two-piece model so chains run in z = (mu, log s1, log s2).
* Chains are reproducible bit-for-bit for a fixed seed within one kernels
  backend. The compiled and pure-Python backends order floating-point sums
  differently, so cross-backend draws agree only to rounding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .core import (CompactNest, GridDensity, Model, ParamSpace, make_grid,
                   normalize)
from .constrain import nested_ratio_test
from .errors import ConfigError, NumericalError
from .quadrature import log_integrate, restrict_values

DEFAULT_N_DRAWS = 20000
DEFAULT_N_BURN = 5000
TARGET_ACCEPTANCE = 0.3
STUCK_LIMIT = 1000
DEFAULT_STEP = 0.5
# probe-level ratio-test thresholds; looser than the prior-tail test in
# constrain because posterior shells decay geometrically, not abruptly
PROBE_DIVERGENT_RATIO = 0.8
PROBE_WINDOW = 3
PROBE_NODES_PER_DECADE = 8
MIN_KDE_DRAWS = 500
KDE_GRID_SIZE = 256
KDE_PAD_BANDWIDTHS = 3.0

__all__ = [
    "Chain", "TwoPiecePowerPosterior", "twopiece_posterior_z", "z_to_theta",
    "log_posterior", "rw_metropolis", "run_chains", "gelman_rubin",
    "ProprietyReport", "propriety_probe", "posterior_density_1d",
    "chain_write_csv", "chain_read_csv", "density_write_csv",
    "density_read_csv",
]


# -- chains ------------------------------------------------------------------


@dataclass(frozen=True)
class Chain:
    """A finished random-walk Metropolis run.

    `draws` and `log_post` hold the post-burn-in sample; `tuning` records the
    per-sweep, per-component step sizes over the whole run including burn-in.
    """

    draws: np.ndarray            # (n_draws, d)
    log_post: np.ndarray         # (n_draws,)
    acceptance_rate: float
    seed: int | tuple
    tuning: np.ndarray           # (n_burn + n_draws, d)
    n_burn: int

    def __post_init__(self):
        if self.draws.ndim != 2 or self.log_post.ndim != 1:
            raise ConfigError("chain draws must be (n, d), log_post (n,)")
        if self.draws.shape[0] != self.log_post.shape[0]:
            raise ConfigError("chain draws and log_post lengths disagree")
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ConfigError("acceptance rate must lie in [0, 1]")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def dim(self) -> int:
        return self.draws.shape[1]

    def transformed(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Chain":
        """A copy with fn applied to the draw matrix (for z -> theta maps)."""
        draws = np.asarray(fn(self.draws), dtype=float)
        if draws.shape[0] != self.n_draws:
            raise ConfigError("transformed draws must keep the chain length")
        return Chain(draws, self.log_post, self.acceptance_rate, self.seed,
                     self.tuning, self.n_burn)


# -- targets -----------------------------------------------------------------


def _in_space(space: ParamSpace, theta: np.ndarray) -> bool:
    for x, lo, hi, op_lo, op_hi in zip(theta, space.lower, space.upper,
                                       space.open_lower, space.open_upper):
        if not math.isfinite(x):
            return False
        if x < lo or x > hi or (op_lo and x == lo) or (op_hi and x == hi):
            return False
    return True


def log_posterior(log_prior, model: Model, data) -> Callable[[np.ndarray], float]:
    """Unnormalized log posterior: sum of log likelihoods plus log prior.

    Returns a callable theta -> real that is -inf outside the model's
    parameter space or the prior's support (the sampler rejects there). A nan
    from either factor raises instead of being silently rejected.
    """
    y = np.asarray(data, dtype=float).ravel()
    space = model.param_space

    def log_post(theta) -> float:
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != space.dim:
            raise ConfigError(f"theta must have {space.dim} components")
        if not _in_space(space, theta):
            return -math.inf
        lp = float(np.asarray(log_prior(theta)))
        if math.isnan(lp):
            raise NumericalError("log prior evaluated to nan")
        if lp == -math.inf:
            return -math.inf
        ll = model.loglik_sum(y, theta) if y.size else 0.0
        if math.isnan(ll):
            raise NumericalError("log likelihood evaluated to nan")
        return lp + ll

    return log_post


@dataclass(frozen=True)
class TwoPiecePowerPosterior:
    """Two-piece log posterior in z = (mu, log s1, log s2).

    log target(z) = sum_i log l(y_i | mu, e^{z1}, e^{z2})
                    + p1 z1 + p2 z2 + q log(e^{z1} + e^{z2}),

    where the p's absorb the prior's scale powers plus the log-scale
    Jacobian. rw_metropolis recognizes this type and dispatches to the
    compiled chain kernel.
    """

    y: np.ndarray
    p1: float
    p2: float
    q: float

    def __call__(self, z) -> float:
        z = np.asarray(z, dtype=float).ravel()
        if z.size != 3:
            raise ConfigError("z must have 3 components (mu, log s1, log s2)")
        ll = kernels.twopiece_loglik_sum(
            self.y, float(z[0]),
            float(np.exp(z[1])), float(np.exp(z[2])))
        return ll + self.p1 * z[1] + self.p2 * z[2] \
            + self.q * float(np.logaddexp(z[1], z[2]))


def twopiece_posterior_z(data, gamma: float | None = None) -> TwoPiecePowerPosterior:
    """The two-piece posterior target in log-scale coordinates.

    gamma None uses the Jeffreys prior 1/(s1 s2 (s1+s2)): with the Jacobian
    e^{z1+z2} folded in, the scale powers cancel to p1 = p2 = 0, q = -1.
    A gamma in (0, 1) uses the power-moment prior (s1 s2)^(gamma-1)/(s1+s2),
    giving p1 = p2 = gamma, q = -1.
    """
    y = np.ascontiguousarray(np.asarray(data, dtype=float).ravel())
    if gamma is None:
        return TwoPiecePowerPosterior(y, 0.0, 0.0, -1.0)
    g = float(gamma)
    if not 0.0 < g < 1.0:
        raise ConfigError(f"gamma must lie in (0, 1), got {gamma!r}")
    return TwoPiecePowerPosterior(y, g, g, -1.0)


def z_to_theta(z: np.ndarray) -> np.ndarray:
    """Map (mu, log s1, log s2) rows back to (mu, s1, s2)."""
    z = np.asarray(z, dtype=float)
    out = z.copy()
    out[..., 1] = np.exp(z[..., 1])
    out[..., 2] = np.exp(z[..., 2])
    return out


# -- random-walk Metropolis ---------------------------------------------------


def _python_chain(log_post, z_init, steps_init, normals, uniforms, n_burn,
                  adapt, target_rate, draws_out, logp_out, steps_out):
    """Generic mirror of the two-piece chain kernel for arbitrary targets."""
    n_total, d = normals.shape
    z = [float(v) for v in z_init]
    ls = [math.log(float(s)) for s in steps_init]
    accepted = 0
    streak = 0
    cur = float(log_post(np.array(z)))
    if not cur > -math.inf:
        raise ValueError("log target not finite at the initial point")
    for t in range(n_total):
        for j in range(d):
            steps_out[t, j] = math.exp(ls[j])
        for j in range(d):
            zj_old = z[j]
            z[j] = zj_old + math.exp(ls[j]) * normals[t, j]
            prop = float(log_post(np.array(z)))
            if math.isnan(prop):
                raise NumericalError("log posterior evaluated to nan")
            u = uniforms[t, j]
            log_u = math.log(u) if u > 0.0 else -math.inf
            gain = 1.5 / (t + 10.0) ** 0.6
            if prop - cur > log_u:
                cur = prop
                accepted += 1
                streak = 0
                if adapt and t < n_burn:
                    ls[j] += gain * (1.0 - target_rate)
            else:
                z[j] = zj_old
                streak += 1
                if streak >= STUCK_LIMIT:
                    raise NumericalError(
                        f"stuck chain: {STUCK_LIMIT} consecutive "
                        "rejected proposals")
                if adapt and t < n_burn:
                    ls[j] -= gain * target_rate
        draws_out[t] = z
        logp_out[t] = cur
    return accepted


def rw_metropolis(log_post, init, n_draws: int = DEFAULT_N_DRAWS,
                  n_burn: int = DEFAULT_N_BURN, seed=0, adapt: bool = True,
                  step_init=DEFAULT_STEP) -> Chain:
    """Component-wise Gaussian random-walk Metropolis.

    One sweep proposes each component in turn with its own step size; during
    burn-in the log step sizes follow a Robbins-Monro recursion toward a 0.3
    per-component acceptance rate and are frozen afterwards. All randomness
    is pregenerated from `seed`, so a rerun with identical inputs reproduces
    the chain bit-for-bit. `TwoPiecePowerPosterior` targets run through the
    compiled kernel; anything else takes the (identical) Python path.

    Raises "stuck chain" after 1000 consecutive rejected proposals and
    ConfigError when log_post is not finite at `init`.
    """
    if n_draws < 1:
        raise ConfigError("n_draws must be >= 1")
    if n_burn < 0:
        raise ConfigError("n_burn must be >= 0")
    init = np.asarray(init, dtype=float).ravel()
    d = init.size
    steps = np.broadcast_to(np.asarray(step_init, dtype=float), (d,)).copy()
    if np.any(steps <= 0) or not np.all(np.isfinite(steps)):
        raise ConfigError("initial step sizes must be positive and finite")

    n_total = n_burn + n_draws
    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((n_total, d))
    uniforms = rng.random((n_total, d))
    draws = np.empty((n_total, d))
    logp = np.empty(n_total)
    step_hist = np.empty((n_total, d))

    fast = isinstance(log_post, TwoPiecePowerPosterior) and d == 3
    try:
        if fast:
            y = np.ascontiguousarray(log_post.y, dtype=float)
            accepted, max_streak = kernels.twopiece_power_chain(
                y, init, steps, log_post.p1, log_post.p2,
                log_post.q, normals, uniforms, n_burn, adapt,
                TARGET_ACCEPTANCE, draws, logp, step_hist)
            if max_streak >= STUCK_LIMIT:
                raise NumericalError(
                    f"stuck chain: {STUCK_LIMIT} consecutive rejected proposals")
        else:
            accepted = _python_chain(
                log_post, init, steps, normals, uniforms, n_burn, adapt,
                TARGET_ACCEPTANCE, draws, logp, step_hist)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    seed_field = tuple(seed) if isinstance(seed, (tuple, list)) else int(seed)
    return Chain(draws[n_burn:], logp[n_burn:],
                 accepted / float(n_total * d), seed_field, step_hist, n_burn)


def run_chains(log_post, init, n_chains: int, seed=0, threads: int = 1,
               **kwargs) -> list[Chain]:
    """Independent chains with distinct sub-seeds [seed, i] for R-hat checks."""
    if n_chains < 1:
        raise ConfigError("n_chains must be >= 1")
    base = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]

    def one(i: int) -> Chain:
        return rw_metropolis(log_post, init, seed=base + [i], **kwargs)

    if threads > 1:
        from ._parallel import parallel_map
        return parallel_map(one, range(n_chains), threads)
    return [one(i) for i in range(n_chains)]


def gelman_rubin(chains: Sequence[Chain]) -> np.ndarray:
    """Split-chain potential scale reduction factor, one value per axis."""
    if len(chains) < 1:
        raise ConfigError("need at least one chain")
    n = min(c.n_draws for c in chains)
    half = n // 2
    if half < 2:
        raise ConfigError("chains too short for a split R-hat")
    seqs = []
    for c in chains:
        seqs.append(c.draws[:half])
        seqs.append(c.draws[half:2 * half])
    x = np.stack(seqs)                       # (m, half, d)
    m = x.shape[0]
    means = x.mean(axis=1)
    within = x.var(axis=1, ddof=1).mean(axis=0)
    between = half * means.var(axis=0, ddof=1)
    var_hat = (half - 1) / half * within + between / half
    with np.errstate(divide="ignore", invalid="ignore"):
        rhat = np.sqrt(var_hat / within)
    return np.where(within > 0, rhat, np.inf if m > 1 else 1.0)


# -- posterior propriety probe -------------------------------------------------


@dataclass(frozen=True)
class ProprietyReport:
    """Verdict and evidence from the nested posterior-mass probe."""

    verdict: str                     # "proper" | "improper-suspected" | "inconclusive"
    partials: tuple[float, ...]      # box masses relative to the deepest box
    ratios: tuple[float, ...]
    boxes: tuple
    log_scale: float                 # log of the deepest-box integral
    note: str | None = None

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "partials": list(self.partials),
            "ratios": list(self.ratios),
            "boxes": [list(map(list, b)) for b in self.boxes],
            "log_scale": self.log_scale,
            "note": self.note,
        }


def _probe_counts(space: ParamSpace, box, nodes_per_decade: int) -> list[int]:
    counts = []
    for axis in range(space.dim):
        lo, hi = box[axis]
        marked = space.open_lower[axis] or space.open_upper[axis]
        if marked and lo > 0.0 and hi / lo >= 100.0:
            decades = math.log10(hi / lo)
            counts.append(int(min(max(33, round(decades * nodes_per_decade) + 1),
                                  161)))
        else:
            counts.append(33)
    return counts


def propriety_probe(log_prior, model: Model, data, nest: CompactNest | None = None,
                    *, depth: int = 6,
                    nodes_per_decade: int = PROBE_NODES_PER_DECADE,
                    divergent_ratio: float = PROBE_DIVERGENT_RATIO,
                    window: int = PROBE_WINDOW) -> ProprietyReport:
    """Probe posterior propriety by quadrature over expanding nest boxes.

    Integrates the unnormalized posterior over each box of `nest` (default
    schedule of the given depth) and classifies the partial-mass sequence
    with the nested ratio test, at probe-level thresholds: the last `window`
    shell ratios all >= `divergent_ratio` reads improper-suspected, all below
    reads proper, anything else inconclusive. The looser 0.8 cut reflects
    that posterior shells of genuinely proper targets decay geometrically
    with rates well below 1 but far above quadrature noise.

    Never raises for numerical reasons: quadrature failures and underflow
    come back as an inconclusive verdict with a note.
    """
    y = np.asarray(data, dtype=float).ravel()
    space = model.param_space
    if nest is None:
        nest = CompactNest.default(space, depth)
    deepest = nest.boxes[-1]
    counts = _probe_counts(space, deepest, nodes_per_decade)
    grid = make_grid(space, nest_index=nest.depth - 1,
                     nodes_per_axis=counts, nest=nest)

    thetas = np.stack([m.ravel() for m in np.meshgrid(*grid, indexing="ij")],
                      axis=-1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_field = np.asarray(log_prior(thetas), dtype=float)
        if y.size:
            log_field = log_field + model.loglik_sum_over(y, thetas)
    log_field = log_field.reshape([g.size for g in grid])

    boxes = tuple(nest.boxes)
    if np.any(np.isposinf(log_field)):
        return ProprietyReport("inconclusive", (), (), boxes, math.nan,
                               "posterior integrand hit +inf on the nest")
    log_field = np.where(np.isnan(log_field), -np.inf, log_field)

    log_parts = []
    for box in boxes:
        sub_grid, sub_vals = restrict_values(log_field, grid, box)
        log_parts.append(log_integrate(sub_vals, sub_grid))
    top = log_parts[-1]
    if not math.isfinite(top):
        return ProprietyReport("inconclusive", (), (), boxes, top,
                               "posterior mass underflowed on every box")
    partials = [math.exp(lp - top) for lp in log_parts]

    try:
        ratios = nested_ratio_test(partials).ratios
    except NumericalError as exc:
        return ProprietyReport("inconclusive", tuple(partials), (), boxes,
                               top, str(exc))

    note = None
    tail = ratios[-window:]
    if len(tail) < window:
        verdict = "inconclusive"
        note = f"nest too shallow: need at least {window + 2} boxes"
    elif all(r >= divergent_ratio for r in tail):
        verdict = "improper-suspected"
    elif all(r < divergent_ratio for r in tail):
        verdict = "proper"
    else:
        verdict = "inconclusive"
        note = "shell ratios straddle the divergence threshold"
    return ProprietyReport(verdict, tuple(partials), ratios, boxes, top, note)


# -- kernel density estimates ---------------------------------------------------


def posterior_density_1d(chain: Chain, axis: int, *,
                         n_grid: int = KDE_GRID_SIZE,
                         bandwidth: float | None = None,
                         grid: np.ndarray | None = None) -> GridDensity:
    """Gaussian KDE of one marginal of a chain, as a normalized GridDensity.

    The bandwidth rule is Silverman's: 0.9 min(sd, IQR/1.34) n^{-1/5},
    overridable for matched-bandwidth comparisons across chains. The default
    grid spans the draws padded by 3 bandwidths.
    """
    if not 0 <= axis < chain.dim:
        raise ConfigError(f"axis must lie in [0, {chain.dim - 1}]")
    x = np.asarray(chain.draws[:, axis], dtype=float)
    n = x.size
    if n < MIN_KDE_DRAWS:
        raise ConfigError(
            f"need at least {MIN_KDE_DRAWS} post-burn-in draws, got {n}")
    if bandwidth is None:
        sd = float(np.std(x, ddof=1))
        iqr = float(np.percentile(x, 75) - np.percentile(x, 25))
        scales = [s for s in (sd, iqr / 1.34) if s > 0 and math.isfinite(s)]
        if not scales:
            raise NumericalError("degenerate chain variance")
        bandwidth = 0.9 * min(scales) * n ** (-0.2)
    h = float(bandwidth)
    if not h > 0 or not math.isfinite(h):
        raise ConfigError("bandwidth must be positive and finite")

    if grid is None:
        pad = KDE_PAD_BANDWIDTHS * h
        grid = np.linspace(float(x.min()) - pad, float(x.max()) + pad,
                           int(n_grid))
    else:
        grid = np.asarray(grid, dtype=float)
    dens = np.empty(grid.size)
    norm = 1.0 / (n * h * math.sqrt(2.0 * math.pi))
    for start in range(0, grid.size, 64):
        block = grid[start:start + 64, None]
        u = (block - x[None, :]) / h
        dens[start:start + 64] = norm * np.exp(-0.5 * u * u).sum(axis=1)

    space = ParamSpace.box([(float(grid[0]), float(grid[-1]))])
    return normalize(GridDensity.from_values(space, (grid,), dens,
                                             properness="proper"))


# -- CSV persistence -------------------------------------------------------------


def chain_write_csv(chain: Chain, path, names: Sequence[str] | None = None) -> None:
    """One post-burn-in draw per row: parameter columns plus log_post."""
    if names is None:
        names = [f"p{j}" for j in range(chain.dim)]
    names = list(names)
    if len(names) != chain.dim:
        raise ConfigError("one column name per parameter axis required")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(names + ["log_post"])
        for row, lp in zip(chain.draws, chain.log_post):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(lp))])


def chain_read_csv(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Read a chain CSV back as (names, draws, log_post)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2 or rows[0][-1] != "log_post":
        raise ConfigError("chain csv needs parameter columns plus log_post")
    names = rows[0][:-1]
    try:
        body = np.array([[float(v) for v in row] for row in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"non-numeric chain csv entry: {exc}") from exc
    if body.ndim != 2 or body.shape[1] != len(names) + 1:
        raise ConfigError("chain csv rows do not match the header")
    return names, body[:, :-1], body[:, -1]


def density_write_csv(density: GridDensity, path,
                      names: tuple[str, str] = ("grid", "density")) -> None:
    """Persist a 1-D density curve as (grid, density) rows."""
    if len(density.grid) != 1:
        raise ConfigError("density csv output is for 1-D densities")
    values = density.linear_values()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(list(names))
        for g, v in zip(density.grid[0], values):
            writer.writerow([repr(float(g)), repr(float(v))])


def density_read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a 1-D density curve CSV back as (grid, values)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) != 2:
        raise ConfigError("density csv needs two columns")
    try:
        body = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"non-numeric density csv entry: {exc}") from exc
    if body.size == 0:
        raise ConfigError("density csv has no data rows")
    return body[:, 0], body[:, 1]
