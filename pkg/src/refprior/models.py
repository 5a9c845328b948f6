"""Built-in benchmark models.

Gaussian location, Gaussian scale, and the two-piece location-scale model
y ~ (2/(s1+s2)) [f((y-mu)/s1) 1{y<mu} + f((y-mu)/s2) 1{y>mu}] with f the
standard Gaussian density. The two-piece model carries closed-form structural
results: Fisher matrix pattern with three positive constants, Jeffreys density
1/(s1 s2 (s1+s2)), and the proper power-moment priors pi*_gamma.

The mu direction is always handled on a finite caller-supplied window: the
Jeffreys density is constant in mu, so mu-marginals are uniform-improper and
only finite windows are computable.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import kernels
from .core import AlphaParams, GridDensity, Model, ParamSpace
from .errors import ConfigError, NumericalError
from .fisher import fisher_info

__all__ = [
    "TwoPieceParams",
    "TwoPieceGamma",
    "TwoPieceFisherConstants",
    "twopiece_space",
    "twopiece_model",
    "twopiece_loglik",
    "twopiece_sample",
    "twopiece_fisher",
    "twopiece_fisher_constants",
    "twopiece_fisher_constants_quadrature",
    "twopiece_jeffreys",
    "twopiece_proper_prior",
    "twopiece_datasets",
    "gaussian_location_model",
    "gaussian_scale_model",
    "model_from_spec",
    "write_dataset",
    "read_dataset",
    "DATASET_SEED",
    "DATASET_SIZES",
]

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# multiplicative constant putting the two-piece Jeffreys at J(1,1,1) = 2,
# the plotting convention used throughout
JEFFREYS_PLOT_CONSTANT = 4.0
# seed and sizes of the fixed benchmark datasets drawn at theta* = (2,2,2)
DATASET_SEED = 20260819
DATASET_SIZES = (5, 15, 50)


@dataclass(frozen=True)
class TwoPieceParams:
    mu: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ConfigError("two-piece scales must be positive, got "
                              f"({self.sigma1}, {self.sigma2})")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.mu, self.sigma1, self.sigma2], dtype=float)


@dataclass(frozen=True)
class TwoPieceGamma:
    """Exponent bundle of the power-moment priors: gamma = epsilon/alpha.

    The admissible range gamma in (0, 1/(1+alpha)) is exactly the range where
    both properization hypothesis integrals of the two-piece Jeffreys prior
    converge.
    """

    gamma: float
    alpha: AlphaParams
    epsilon: float

    def __post_init__(self):
        al = self.alpha.alpha
        if not math.isclose(self.gamma, self.epsilon / al, rel_tol=1e-12):
            raise ConfigError("gamma must equal epsilon/alpha")
        if not 0.0 < self.gamma < 1.0 / (1.0 + al):
            raise ConfigError(f"gamma must lie in (0, {1.0 / (1.0 + al):.6g}) "
                              f"for alpha={al}, got {self.gamma}")

    @classmethod
    def from_gamma(cls, gamma: float, alpha) -> "TwoPieceGamma":
        al = alpha if isinstance(alpha, AlphaParams) else AlphaParams(float(alpha))
        return cls(gamma=float(gamma), alpha=al, epsilon=float(gamma) * al.alpha)

    @classmethod
    def from_epsilon(cls, epsilon: float, alpha) -> "TwoPieceGamma":
        al = alpha if isinstance(alpha, AlphaParams) else AlphaParams(float(alpha))
        return cls(gamma=float(epsilon) / al.alpha, alpha=al, epsilon=float(epsilon))


def twopiece_space(mu_window: tuple[float, float]) -> ParamSpace:
    lo, hi = float(mu_window[0]), float(mu_window[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigError("a finite mu window is required")
    return ParamSpace(
        lower=(lo, 0.0, 0.0), upper=(hi, math.inf, math.inf),
        open_lower=(False, True, True), open_upper=(False, True, True))


def twopiece_loglik(y, theta) -> np.ndarray:
    """Per-observation log density. At y = mu both branches agree."""
    y = np.asarray(y, dtype=float)
    mu, s1, s2 = (theta.mu, theta.sigma1, theta.sigma2) \
        if isinstance(theta, TwoPieceParams) else np.asarray(theta, dtype=float)
    if not (s1 > 0 and s2 > 0):
        return np.full(y.shape, -np.inf)
    z = (y - mu) / np.where(y < mu, s1, s2)
    return math.log(2.0) - math.log(s1 + s2) - HALF_LOG_2PI - 0.5 * z * z


def twopiece_sample(theta, n: int, rng) -> np.ndarray:
    """Draw n observations: pick the left piece with probability s1/(s1+s2),
    then scale a half-normal magnitude by the piece's sigma, sign, and shift.

    `rng` is a Generator or an integer seed. Each piece's conditional density
    is the folded standard Gaussian rescaled, which reproduces the likelihood.
    """
    if n < 1:
        raise ConfigError("sample size must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    mu, s1, s2 = (theta.mu, theta.sigma1, theta.sigma2) \
        if isinstance(theta, TwoPieceParams) else np.asarray(theta, dtype=float)
    u = rng.random(n)
    z = np.abs(rng.standard_normal(n))
    left = u < s1 / (s1 + s2)
    return np.where(left, mu - s1 * z, mu + s2 * z)


def _twopiece_loglik_sum_batch(y: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    y = np.ascontiguousarray(y, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    out = np.empty(thetas.shape[0])
    for i, t in enumerate(thetas):
        out[i] = kernels.twopiece_loglik_sum(y, t[0], t[1], t[2])
    return out


ALPHA3_EXACT = math.sqrt(2.0 / math.pi)


def twopiece_fisher(theta) -> np.ndarray:
    """Closed-form per-observation Fisher matrix for Gaussian f.

    The structural constants evaluate to alpha1 = 1, alpha2 = 2,
    alpha3 = sqrt(2/pi) (second to fourth half-normal moments).
    """
    mu, s1, s2 = (theta.mu, theta.sigma1, theta.sigma2) \
        if isinstance(theta, TwoPieceParams) else np.asarray(theta, dtype=float)
    if not (s1 > 0 and s2 > 0):
        raise ConfigError("two-piece Fisher needs positive scales")
    s = s1 + s2
    a3 = ALPHA3_EXACT
    return np.array([
        [1.0 / (s1 * s2), -2.0 * a3 / (s1 * s), 2.0 * a3 / (s2 * s)],
        [-2.0 * a3 / (s1 * s), 2.0 / (s1 * s) + s2 / (s1 * s * s), -1.0 / (s * s)],
        [2.0 * a3 / (s2 * s), -1.0 / (s * s), 2.0 / (s2 * s) + s1 / (s2 * s * s)],
    ])


def twopiece_model(mu_window: tuple[float, float]) -> Model:
    return Model(
        param_space=twopiece_space(mu_window),
        log_likelihood=twopiece_loglik,
        sampler=lambda theta, rng, n: twopiece_sample(theta, n, rng),
        data_space_dim=1,
        fisher_closed_form=twopiece_fisher,
        loglik_sum_batch=_twopiece_loglik_sum_batch,
        name="twopiece",
    )


def twopiece_jeffreys(grid, space: ParamSpace | None = None) -> GridDensity:
    """Closed-form Jeffreys density 1/(s1 s2 (s1+s2)), J(1,1,1) = 2.

    `grid` is (mu_nodes, s1_nodes, s2_nodes); the density is constant in mu.
    """
    if len(grid) != 3:
        raise ConfigError("two-piece grids have three axes (mu, sigma1, sigma2)")
    mu, s1, s2 = (np.asarray(g, dtype=float) for g in grid)
    if s1[0] <= 0 or s2[0] <= 0:
        raise ConfigError("scale axes must be positive")
    if space is None:
        space = twopiece_space((float(mu[0]), float(mu[-1])))
    log_j = (math.log(JEFFREYS_PLOT_CONSTANT)
             - np.log(s1)[None, :, None] - np.log(s2)[None, None, :]
             - np.log(s1[None, :, None] + s2[None, None, :]))
    log_j = np.broadcast_to(log_j, (mu.size, s1.size, s2.size))
    return GridDensity.from_log_values(space, grid, log_j, properness="improper")


def twopiece_proper_prior(gamma: TwoPieceGamma, grid,
                          space: ParamSpace | None = None) -> GridDensity:
    """The power-moment prior (s1 s2)^(gamma-1) / (s1+s2).

    Proper in the scale directions (slice exponent gamma-1 > -1 at 0 and
    gamma-2 < -1 at infinity) and uniform in mu, hence proper over the working
    space with its finite mu window; over unbounded mu it would be improper.
    """
    if len(grid) != 3:
        raise ConfigError("two-piece grids have three axes (mu, sigma1, sigma2)")
    mu, s1, s2 = (np.asarray(g, dtype=float) for g in grid)
    if space is None:
        space = twopiece_space((float(mu[0]), float(mu[-1])))
    g = gamma.gamma
    log_p = ((g - 1.0) * (np.log(s1)[None, :, None] + np.log(s2)[None, None, :])
             - np.log(s1[None, :, None] + s2[None, None, :]))
    log_p = np.broadcast_to(log_p, (mu.size, s1.size, s2.size))
    return GridDensity.from_log_values(space, grid, log_p, properness="proper")


def twopiece_log_prior(gamma: float | None = None):
    """Pointwise log prior evaluator for the two-piece model.

    gamma None gives the Jeffreys density 4 / (s1 s2 (s1+s2)); a float in
    (0, 1) gives the power-moment form (s1 s2)^(gamma-1) / (s1+s2). The
    returned callable maps a (..., 3) parameter array to log densities,
    -inf off the support.
    """
    if gamma is not None and not 0.0 < float(gamma) < 1.0:
        raise ConfigError(f"gamma must lie in (0, 1), got {gamma!r}")
    power = -1.0 if gamma is None else float(gamma) - 1.0
    offset = math.log(JEFFREYS_PLOT_CONSTANT) if gamma is None else 0.0

    def log_prior(theta):
        theta = np.asarray(theta, dtype=float)
        s1, s2 = theta[..., 1], theta[..., 2]
        ok = (s1 > 0.0) & (s2 > 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(
                ok,
                offset + power * (np.log(s1) + np.log(s2)) - np.log(s1 + s2),
                -np.inf)
        return out if out.ndim else float(out)

    return log_prior


@dataclass(frozen=True)
class TwoPieceFisherConstants:
    """Structural constants of the two-piece Fisher pattern, MC-extracted."""

    alpha1: float
    alpha2: float
    alpha3: float
    std_errors: tuple[float, float, float]
    reference_points: tuple

    @property
    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3)


def _extract_constants(info: np.ndarray, se: np.ndarray, s1: float, s2: float
                       ) -> tuple[np.ndarray, np.ndarray]:
    s = s1 + s2
    a1 = info[0, 0] * s1 * s2
    a1_se = se[0, 0] * s1 * s2
    # two independent reads of alpha3 (the (mu,s1) and (mu,s2) entries)
    a3_a, a3_b = -info[0, 1] * s1 * s / 2.0, info[0, 2] * s2 * s / 2.0
    a3 = 0.5 * (a3_a + a3_b)
    a3_se = 0.5 * math.hypot(se[0, 1] * s1 * s / 2.0, se[0, 2] * s2 * s / 2.0)
    a2_a = (info[1, 1] - s2 / (s1 * s * s)) * s1 * s
    a2_b = (info[2, 2] - s1 / (s2 * s * s)) * s2 * s
    a2 = 0.5 * (a2_a + a2_b)
    a2_se = 0.5 * math.hypot(se[1, 1] * s1 * s, se[2, 2] * s2 * s)
    return np.array([a1, a2, a3]), np.array([a1_se, a2_se, a3_se])


def twopiece_fisher_constants(mc_samples: int = 100_000, seed: int = 0,
                              mu_window: tuple[float, float] = (-5.0, 5.0)
                              ) -> TwoPieceFisherConstants:
    """Extract (alpha1, alpha2, alpha3) from MC Fisher at reference points.

    The Fisher pattern is solved for the constants entrywise at (0,1,1) and
    (0,2,1) and the two reads averaged. A non-positive extraction aborts:
    the pattern's constants are positive by construction.
    """
    model = twopiece_model(mu_window)
    refs = ((0.0, 1.0, 1.0), (0.0, 2.0, 1.0))
    vals, ses = [], []
    for j, ref in enumerate(refs):
        info, se = fisher_info(model, np.array(ref), method="mc_score",
                               mc_samples=mc_samples, seed=seed + j,
                               return_se=True)
        v, e = _extract_constants(info, se, ref[1], ref[2])
        vals.append(v)
        ses.append(e)
    mean = 0.5 * (vals[0] + vals[1])
    se = 0.5 * np.hypot(ses[0], ses[1])
    if np.any(mean <= 0):
        raise NumericalError("structure mismatch: extracted Fisher constants "
                             f"are not all positive ({mean.tolist()})")
    return TwoPieceFisherConstants(
        alpha1=float(mean[0]), alpha2=float(mean[1]), alpha3=float(mean[2]),
        std_errors=(float(se[0]), float(se[1]), float(se[2])),
        reference_points=refs)


def twopiece_fisher_constants_quadrature() -> tuple[float, float, float]:
    """The same constants from 1-D quadrature of the defining f-integrals:
    alpha1 = m2, alpha2 = m4 - 1, alpha3 = m3/2 with m_j the half-normal
    moments 2 int_0^inf z^j f(z) dz."""
    def moment(j: int) -> float:
        val, _ = integrate.quad(
            lambda z: 2.0 * z ** j * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi),
            0.0, np.inf)
        return val

    m2, m3, m4 = moment(2), moment(3), moment(4)
    return (m2, m4 - 1.0, m3 / 2.0)


def predicted_fisher(constants: TwoPieceFisherConstants, theta) -> np.ndarray:
    """Plug the extracted constants back into the structural pattern."""
    mu, s1, s2 = np.asarray(theta, dtype=float)
    s = s1 + s2
    a1, a2, a3 = constants.as_tuple
    return np.array([
        [a1 / (s1 * s2), -2.0 * a3 / (s1 * s), 2.0 * a3 / (s2 * s)],
        [-2.0 * a3 / (s1 * s), a2 / (s1 * s) + s2 / (s1 * s * s), -1.0 / (s * s)],
        [2.0 * a3 / (s2 * s), -1.0 / (s * s), a2 / (s2 * s) + s1 / (s2 * s * s)],
    ])


def twopiece_datasets() -> dict[int, np.ndarray]:
    """The three fixed benchmark datasets: theta* = (2,2,2), sizes 5/15/50,
    one seed stream per size."""
    theta = TwoPieceParams(2.0, 2.0, 2.0)
    return {n: twopiece_sample(theta, n, np.random.default_rng([DATASET_SEED, n]))
            for n in DATASET_SIZES}


# -- Gaussian benchmarks -----------------------------------------------------


def gaussian_location_model(sigma: float = 1.0,
                            window: tuple[float, float] | None = None) -> Model:
    """y ~ N(theta, sigma^2) with known sigma; Fisher = 1/sigma^2."""
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    bounds = (-math.inf, math.inf) if window is None else \
        (float(window[0]), float(window[1]))
    space = ParamSpace((bounds[0],), (bounds[1],), (False,), (False,))

    def loglik(y, theta):
        y = np.asarray(y, dtype=float)
        t = float(np.asarray(theta, dtype=float).reshape(-1)[0])
        return -HALF_LOG_2PI - math.log(sigma) - 0.5 * ((y - t) / sigma) ** 2

    def loglik_sum_batch(y, thetas):
        # sufficient statistics make the theta sweep one vector op
        y = np.asarray(y, dtype=float)
        t = np.asarray(thetas, dtype=float)[:, 0]
        k, sy, syy = y.size, float(y.sum()), float((y * y).sum())
        return (-k * (HALF_LOG_2PI + math.log(sigma))
                - (syy - 2.0 * t * sy + k * t * t) / (2.0 * sigma ** 2))

    return Model(
        param_space=space,
        log_likelihood=loglik,
        sampler=lambda theta, rng, n: float(np.reshape(theta, -1)[0])
        + sigma * rng.standard_normal(n),
        fisher_closed_form=lambda theta: np.array([[1.0 / sigma ** 2]]),
        loglik_sum_batch=loglik_sum_batch,
        name="gaussian-location",
    )


def gaussian_scale_model(mu: float = 0.0,
                         window: tuple[float, float] | None = None) -> Model:
    """y ~ N(mu, theta^2) with known mu; Fisher = 2/theta^2, Jeffreys = 1/theta."""
    bounds = (0.0, math.inf) if window is None else \
        (float(window[0]), float(window[1]))
    space = ParamSpace((bounds[0],), (bounds[1],),
                       (bounds[0] == 0.0,), (False,))

    def loglik(y, theta):
        y = np.asarray(y, dtype=float)
        t = float(np.asarray(theta, dtype=float).reshape(-1)[0])
        if t <= 0:
            return np.full(y.shape, -np.inf)
        return -HALF_LOG_2PI - math.log(t) - 0.5 * ((y - mu) / t) ** 2

    def loglik_sum_batch(y, thetas):
        y = np.asarray(y, dtype=float)
        t = np.asarray(thetas, dtype=float)[:, 0]
        k, sq = y.size, float(((y - mu) ** 2).sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -k * (HALF_LOG_2PI + np.log(t)) - sq / (2.0 * t * t)
        return np.where(t > 0, out, -np.inf)

    return Model(
        param_space=space,
        log_likelihood=loglik,
        sampler=lambda theta, rng, n: mu
        + float(np.reshape(theta, -1)[0]) * rng.standard_normal(n),
        fisher_closed_form=lambda theta:
        np.array([[2.0 / float(np.reshape(theta, -1)[0]) ** 2]]),
        loglik_sum_batch=loglik_sum_batch,
        name="gaussian-scale",
    )


# -- model specs and datasets on disk ---------------------------------------


def _bound(v, default: float) -> float:
    if v is None:
        return default
    if isinstance(v, str):
        return float(v)
    return float(v)


def model_from_spec(spec: dict | str) -> Model:
    """Build a model from a JSON document (path or already-parsed dict).

    Shape: {"family": ..., "bounds": [[lo, hi], ...], "hyperparams": {...}};
    null bounds mean infinite on that side. Families: gaussian-location,
    gaussian-scale, twopiece. There is no custom-expression family: new
    models enter through the Model dataclass in code.
    """
    if isinstance(spec, str):
        with open(spec, encoding="utf-8") as fh:
            spec = json.load(fh)
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError("model spec must be a JSON object with a 'family' key")
    family = spec["family"]
    bounds = spec.get("bounds")
    hyper = spec.get("hyperparams", {})
    if family == "gaussian-location":
        window = None
        if bounds:
            window = (_bound(bounds[0][0], -math.inf), _bound(bounds[0][1], math.inf))
        return gaussian_location_model(sigma=float(hyper.get("sigma", 1.0)),
                                       window=window)
    if family == "gaussian-scale":
        window = None
        if bounds:
            window = (_bound(bounds[0][0], 0.0), _bound(bounds[0][1], math.inf))
        return gaussian_scale_model(mu=float(hyper.get("mu", 0.0)), window=window)
    if family == "twopiece":
        if not bounds or len(bounds) < 1:
            raise ConfigError("twopiece spec needs bounds with a finite mu window")
        window = (_bound(bounds[0][0], math.nan), _bound(bounds[0][1], math.nan))
        return twopiece_model(window)
    raise ConfigError(f"unknown model family {family!r}; built-ins: "
                      "gaussian-location, gaussian-scale, twopiece")


def write_dataset(path: str, y: np.ndarray) -> None:
    """One observation per line, RFC-4180 with a header row."""
    y = np.asarray(y, dtype=float).reshape(-1)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["y"])
        for v in y:
            writer.writerow([repr(float(v))])


def read_dataset(path: str) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["y"]:
        raise ConfigError(f"dataset {path!r} must start with a 'y' header row")
    try:
        return np.array([float(r[0]) for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"non-numeric observation in {path!r}") from exc
