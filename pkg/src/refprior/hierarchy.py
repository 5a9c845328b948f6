"""Two-block sequential reference priors on compact grids.

The construction runs in three steps: a conditional Jeffreys density over the
first block at every second-block node (sub-matrix of the Fisher matrix,
normalized on the first-block box), a marginalized likelihood obtained by
quadrature of the likelihood against that conditional (data budget: a single
observation, k = 1, a convention this module documents rather than the
literature fixing it), and a Jeffreys density of the marginalized model over
the second block. The joint output is the product pi1(block1 | block2) *
pi2(block2).

Everything is grid-based on a compact box strictly inside the model's
parameter space; on such boxes the per-step reference priors are the
normalized Jeffreys densities, so no mutual-information maximization is
re-run here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import quadrature
from ._parallel import parallel_map
from .core import (AlphaParams, GridDensity, Model, ParamSpace, _axis_nodes,
                   normalize, sample_grid_density)
from .errors import ConfigError, NumericalError
from .fisher import FisherField, jeffreys_density

__all__ = ["BlockOrdering", "sequential_reference"]

DEFAULT_MC_SAMPLES = 8000


@dataclass(frozen=True)
class BlockOrdering:
    """Partition of the parameter axes into two ordered blocks.

    Axes are 0-based. block1 is resolved first (conditional prior), block2
    second (marginalized model). block2 may be empty, which degenerates to the
    plain normalized Jeffreys prior. Each block holds at most 2 axes.
    """

    block1: tuple[int, ...]
    block2: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "block1", tuple(int(a) for a in self.block1))
        object.__setattr__(self, "block2", tuple(int(a) for a in self.block2))
        if not self.block1:
            raise ConfigError("block1 must contain at least one axis")
        if len(self.block1) > 2 or len(self.block2) > 2:
            raise ConfigError("blocks of more than 2 axes are not supported")

    def validate_for(self, dim: int) -> None:
        if sorted(self.block1 + self.block2) != list(range(dim)):
            raise ConfigError("blocks must partition the parameter axes "
                              f"0..{dim - 1}, got {self.block1} / {self.block2}")


def _subspace(space: ParamSpace, axes: tuple[int, ...]) -> ParamSpace:
    return ParamSpace(
        tuple(space.lower[a] for a in axes),
        tuple(space.upper[a] for a in axes),
        tuple(space.open_lower[a] for a in axes),
        tuple(space.open_upper[a] for a in axes))


def _as_counts(nodes_per_axis, dim: int) -> list[int]:
    if isinstance(nodes_per_axis, int):
        return [nodes_per_axis] * dim
    counts = [int(n) for n in nodes_per_axis]
    if len(counts) != dim:
        raise ConfigError("nodes_per_axis length does not match the model")
    return counts


def _weights(grid) -> np.ndarray:
    w = np.ones(1)
    for g in grid:
        w = np.multiply.outer(w, quadrature.trapezoid_weights(g))
    return w


def sequential_reference(model: Model, ordering: BlockOrdering, alpha,
                         box, nodes_per_axis=21, *,
                         conditional_prior_override=None,
                         fisher_method: str | None = None,
                         mc_samples: int = DEFAULT_MC_SAMPLES,
                         seed: int = 0, threads: int = 1
                         ) -> tuple[GridDensity, dict]:
    """Sequential two-block reference prior on a compact box.

    `box` is one (lo, hi) pair per model axis and must be compact and strictly
    inside the model's parameter space (Fisher evaluations need interior
    points). On such a box the reference prior of each step is its normalized
    Jeffreys density for every alpha in (0, 1); alpha is validated and
    recorded, it does not change the output. `conditional_prior_override`,
    when given, replaces the step-1 conditional: a callable mapping a block2
    parameter vector to a GridDensity over the block1 grid (it is normalized
    here), which is how constrained reference priors enter the hierarchy.

    Returns the joint density (axes in model order) and a report dict.
    """
    alpha = alpha if isinstance(alpha, AlphaParams) else AlphaParams(float(alpha))
    space = model.param_space
    d = space.dim
    ordering.validate_for(d)
    box = [(float(lo), float(hi)) for lo, hi in box]
    if len(box) != d:
        raise ConfigError("box dimension does not match the model")
    for axis, (lo, hi) in enumerate(box):
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ConfigError("compactify first: the sequential construction "
                              f"needs a compact box, got [{lo}, {hi}] on axis {axis}")
        if lo < space.lower[axis] or hi > space.upper[axis]:
            raise ConfigError(f"box leaves the parameter space on axis {axis}")
    counts = _as_counts(nodes_per_axis, d)
    grid = tuple(_axis_nodes(space, a, box[a][0], box[a][1], counts[a])
                 for a in range(d))
    method = fisher_method or \
        ("closed_form" if model.fisher_closed_form is not None else "mc_score")

    b1, b2 = ordering.block1, ordering.block2
    if not b2:
        field = FisherField(model, method=method, mc_samples=mc_samples, seed=seed)
        dens, rep = jeffreys_density(field, grid, return_report=True)
        out = normalize(dens)
        report = {"ordering": {"block1": list(b1), "block2": list(b2)},
                  "alpha": alpha.alpha, "k_budget": 1, "degenerate": True,
                  "fisher_method": method, "jeffreys_report": rep}
        return out, report

    grid1 = tuple(grid[a] for a in b1)
    grid2 = tuple(grid[a] for a in b2)
    space1 = _subspace(space, b1)
    space2 = _subspace(space, b2)
    shape1 = tuple(g.size for g in grid1)
    shape2 = tuple(g.size for g in grid2)
    m1 = int(np.prod(shape1))
    m2 = int(np.prod(shape2))
    nodes1 = np.stack([m.ravel() for m in np.meshgrid(*grid1, indexing="ij")],
                      axis=1)
    nodes2 = np.stack([m.ravel() for m in np.meshgrid(*grid2, indexing="ij")],
                      axis=1)

    def combine(theta1: np.ndarray, theta2: np.ndarray) -> np.ndarray:
        theta = np.empty(d)
        theta[list(b1)] = theta1
        theta[list(b2)] = theta2
        return theta

    cond_field = FisherField(model, method=method, mc_samples=mc_samples,
                             seed=seed + 1)
    clamp_count = 0

    def conditional_density(theta2: np.ndarray) -> GridDensity:
        """Normalized conditional reference prior over block1 at theta2."""
        nonlocal clamp_count
        if conditional_prior_override is not None:
            dens = conditional_prior_override(np.asarray(theta2, dtype=float))
            if not isinstance(dens, GridDensity) or \
                    tuple(g.size for g in dens.grid) != shape1:
                raise ConfigError("conditional override must return a "
                                  "GridDensity on the block1 grid")
            return normalize(dens)
        # block1 x block1 sub-matrix seeds keyed by the block1 node only:
        # common random numbers across theta2 keep the field smooth there
        log_dets = np.empty(m1)
        for j in range(m1):
            info = cond_field.evaluator(combine(nodes1[j], theta2), j)
            sub = info[np.ix_(b1, b1)]
            det = float(np.linalg.det(sub))
            if not math.isfinite(det):
                raise NumericalError("conditional Fisher determinant is not "
                                     f"finite at block1 node {j}")
            if det <= 0:
                clamp_count += 1
                log_dets[j] = -np.inf
            else:
                log_dets[j] = 0.5 * math.log(det)
        dens = GridDensity.from_log_values(space1, grid1,
                                           log_dets.reshape(shape1))
        return normalize(dens)

    # step 1: conditional slices at every block2 node (parallel over nodes)
    cond_slices = parallel_map(
        lambda i: conditional_density(nodes2[i]).log_values(),
        list(range(m2)), threads)

    # step 2: the marginalized model. Its likelihood integrates the k=1
    # likelihood against the conditional at the evaluation point itself (the
    # conditional is recomputed at shifted theta2 during finite differences,
    # so the prior's theta2-dependence enters the Fisher information).
    w1_log = np.log(_weights(grid1).ravel())

    def marginal_loglik(y: np.ndarray, theta2: np.ndarray) -> np.ndarray:
        cond = conditional_density(np.asarray(theta2, dtype=float))
        lw = w1_log + cond.log_values().ravel()
        y = np.asarray(y, dtype=float)
        rows = np.empty((m1, y.shape[0]))
        for j in range(m1):
            rows[j] = model.log_likelihood(y, combine(nodes1[j], theta2))
        out = logsumexp(rows + lw[:, None], axis=0)
        if np.any(np.isnan(out)) or np.any(np.isposinf(out)):
            raise NumericalError("compactify first: the marginalized "
                                 "likelihood is not finite on the box")
        return out

    def marginal_sampler(theta2, rng: np.random.Generator, n: int) -> np.ndarray:
        cond = conditional_density(np.asarray(theta2, dtype=float))
        pts = sample_grid_density(cond, n, rng)
        draws = [model.sampler(combine(pts[i], theta2), rng, 1)
                 for i in range(n)]
        return np.concatenate([np.atleast_1d(np.asarray(dr)) for dr in draws]) \
            if model.data_space_dim == 1 else np.vstack(draws)

    marg_model = Model(param_space=space2, log_likelihood=marginal_loglik,
                       sampler=marginal_sampler,
                       data_space_dim=model.data_space_dim,
                       name=f"{model.name or 'model'}-marginalized")

    # step 3: Jeffreys of the marginalized model over block2, always MC
    # (there is no closed form for a quadrature mixture), same per-node
    # seeding scheme as the fisher module
    marg_field = FisherField(marg_model, method="mc_score",
                             mc_samples=mc_samples, seed=seed)

    def marg_logdet(i: int) -> float:
        info = marg_field.evaluator(nodes2[i], i)
        det = float(np.linalg.det(info))
        if not math.isfinite(det):
            raise NumericalError("compactify first: marginalized Fisher "
                                 f"determinant is not finite at block2 node {i}")
        return 0.5 * math.log(det) if det > 0 else -np.inf

    log_dets2 = np.array(parallel_map(marg_logdet, list(range(m2)), threads))
    dens2 = GridDensity.from_log_values(space2, grid2, log_dets2.reshape(shape2))
    pi2 = normalize(dens2)

    # assemble: log pi(theta) = log pi1(theta1 | theta2) + log pi2(theta2),
    # with axes put back in model order (block1 axes first while stacking)
    log_joint = np.empty(shape1 + shape2)
    flat = log_joint.reshape(m1, m2)
    log_pi2 = pi2.log_values().ravel()
    for i in range(m2):
        flat[:, i] = cond_slices[i].ravel() + log_pi2[i]
    # stacked axis k holds model axis order[k]; send it to position order[k]
    order = list(b1) + list(b2)
    log_joint = np.moveaxis(log_joint, range(d), order)
    out = GridDensity.from_log_values(space, grid, log_joint, properness="proper")

    report = {
        "ordering": {"block1": list(b1), "block2": list(b2)},
        "alpha": alpha.alpha,
        "k_budget": 1,
        "degenerate": False,
        "fisher_method_step1": method if conditional_prior_override is None
        else "override",
        "fisher_method_step3": "mc_score",
        "mc_samples": mc_samples,
        "seed": seed,
        "conditional_clamped_nodes": clamp_count,
        "joint_integral": out.integral(),
        "box": [list(b) for b in box],
    }
    return out, report
