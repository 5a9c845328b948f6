"""Fisher information fields and Jeffreys densities.

Fisher information is estimated by Monte Carlo: either the average outer
product of score vectors (scores by central finite differences of the
log likelihood) or the averaged negative Hessian, both over one simulated
sample from the model. A model may also supply a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import GridDensity, Model, mesh
from .errors import ConfigError, NumericalError

__all__ = ["FisherField", "fisher_info", "jeffreys_density"]

# relative symmetry tolerance of returned matrices
SYMMETRY_TOL = 1e-8
# finite-difference steps scale with 1 + |theta_j|
SCORE_STEP = 1e-5
HESSIAN_STEP = 1e-4
DEFAULT_MC_SAMPLES = 100_000

FisherMethod = Literal["closed_form", "mc_score", "finite_difference"]


def _check_interior(model: Model, theta: np.ndarray) -> np.ndarray:
    """Reject evaluation points on open edges, where the model degenerates.

    Closed finite edges are ordinary parameter values and stay allowed;
    open and infinite edges must be approached strictly from inside.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.dim,):
        raise ConfigError(f"theta must be a length-{model.dim} vector")
    sp = model.param_space
    for j in range(model.dim):
        lo_ok = theta[j] > sp.lower[j] if sp.open_lower[j] else theta[j] >= sp.lower[j]
        hi_ok = theta[j] < sp.upper[j] if sp.open_upper[j] else theta[j] <= sp.upper[j]
        if not (lo_ok and hi_ok):
            raise ConfigError(f"boundary point: theta[{j}]={theta[j]} is not "
                              f"interior to [{sp.lower[j]}, {sp.upper[j]}]")
    return theta


def _loglik_checked(model: Model, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    ll = np.asarray(model.log_likelihood(y, theta), dtype=float)
    if not np.all(np.isfinite(ll)):
        raise NumericalError(f"non-finite log-likelihood at theta={theta.tolist()}")
    return ll


def _mc_score(model: Model, theta: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = model.dim
    n = y.shape[0]
    scores = np.empty((n, d))
    for j in range(d):
        h = SCORE_STEP * (1.0 + abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        scores[:, j] = (_loglik_checked(model, y, tp)
                        - _loglik_checked(model, y, tm)) / (2.0 * h)
    prods = scores[:, :, None] * scores[:, None, :]
    info = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / math.sqrt(n)
    return info, se


def _mc_hessian(model: Model, theta: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = model.dim
    n = y.shape[0]
    h = np.array([HESSIAN_STEP * (1.0 + abs(theta[j])) for j in range(d)])
    ll0 = _loglik_checked(model, y, theta)
    terms = np.empty((n, d, d))
    for j in range(d):
        ej = np.zeros(d)
        ej[j] = h[j]
        terms[:, j, j] = (_loglik_checked(model, y, theta + ej) - 2.0 * ll0
                          + _loglik_checked(model, y, theta - ej)) / h[j] ** 2
        for l in range(j + 1, d):
            el = np.zeros(d)
            el[l] = h[l]
            mixed = (_loglik_checked(model, y, theta + ej + el)
                     - _loglik_checked(model, y, theta + ej - el)
                     - _loglik_checked(model, y, theta - ej + el)
                     + _loglik_checked(model, y, theta - ej - el)) / (4.0 * h[j] * h[l])
            terms[:, j, l] = mixed
            terms[:, l, j] = mixed
    info = -terms.mean(axis=0)
    se = terms.std(axis=0, ddof=1) / math.sqrt(n)
    return info, se


def fisher_info(model: Model, theta: np.ndarray, method: FisherMethod = "mc_score",
                mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
                return_se: bool = False) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Fisher information matrix of `model` at an interior point `theta`.

    mc_score averages outer products of finite-difference score vectors;
    finite_difference averages the negative log-likelihood Hessian over the
    same kind of simulated sample; closed_form delegates to the model. Pass
    return_se=True to also get the entrywise Monte Carlo standard errors
    (zeros for closed_form).
    """
    theta = _check_interior(model, theta)
    if method == "closed_form":
        if model.fisher_closed_form is None:
            raise ConfigError("model provides no closed-form Fisher information")
        info = np.asarray(model.fisher_closed_form(theta), dtype=float)
        se = np.zeros_like(info)
    elif method in ("mc_score", "finite_difference"):
        if mc_samples < 2:
            raise ConfigError("mc_samples must be >= 2")
        rng = np.random.default_rng(seed)
        y = np.asarray(model.sampler(theta, rng, mc_samples))
        info, se = (_mc_score if method == "mc_score" else _mc_hessian)(model, theta, y)
    else:
        raise ConfigError(f"unknown Fisher method {method!r}")
    asym = np.max(np.abs(info - info.T))
    scale = max(np.max(np.abs(info)), 1e-300)
    if asym > SYMMETRY_TOL * scale:
        raise NumericalError(f"Fisher estimate is asymmetric beyond tolerance at "
                             f"theta={theta.tolist()}")
    info = 0.5 * (info + info.T)
    return (info, se) if return_se else info


@dataclass(frozen=True)
class FisherField:
    """A reusable Fisher evaluator: theta -> d x d symmetric matrix.

    Monte Carlo methods draw a fresh per-point RNG stream from
    (seed, node_index), so grid sweeps are reproducible independently of
    evaluation order or worker count.
    """

    model: Model
    method: FisherMethod = "mc_score"
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def evaluator(self, theta: np.ndarray, node_index: int = 0) -> np.ndarray:
        return fisher_info(self.model, theta, self.method, self.mc_samples,
                           seed=[self.seed, node_index])


def jeffreys_density(field: FisherField, grid, return_report: bool = False):
    """Jeffreys density sqrt(|det I(theta)|) on a tensor grid.

    Monte Carlo noise can push a determinant non-positive near singular
    points; such nodes are clamped to zero and listed in the report.
    Non-finite determinants are errors, reported with coordinates. The
    returned density has properness "unknown".
    """
    axes = [np.asarray(g, dtype=float) for g in grid]
    coords = np.stack([m.ravel() for m in mesh(axes)], axis=1)
    vals = np.empty(coords.shape[0])
    clamped = []
    for idx in range(coords.shape[0]):
        theta = coords[idx]
        info = field.evaluator(theta, node_index=idx)
        det = float(np.linalg.det(info))
        if not math.isfinite(det):
            raise NumericalError(f"non-finite Fisher determinant at "
                                 f"theta={theta.tolist()}")
        if det <= 0.0:
            clamped.append(theta.tolist())
            det = 0.0
        vals[idx] = math.sqrt(abs(det))
    density = GridDensity.from_values(field.model.param_space, axes,
                                      vals.reshape([g.size for g in axes]))
    if not return_report:
        return density
    report = {
        "method": field.method,
        "mc_samples": field.mc_samples if field.method != "closed_form" else 0,
        "seed": field.seed,
        "clamped_nodes": clamped,
        "n_nodes": int(coords.shape[0]),
    }
    return density, report
