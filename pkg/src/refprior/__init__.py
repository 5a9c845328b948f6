"""Objective priors from Fisher information.

Build Jeffreys densities on parameter grids, maximize the asymptotic
mutual-information functional under moment constraints, diagnose tail decay
of improper candidates, and properize them via moment conditions. Monte
Carlo mutual information and posterior sampling close the loop as checks.

Submodules hold the full API; the names re-exported here cover the common
workflow. `kernels.BACKEND` reports whether the compiled extension or the
pure-Python fallback is active.
"""

from . import (cli, constrain, core, errors, fisher, functional, hierarchy,
               kernels, mcmc, models, quadrature, reports, svgplot)
from .constrain import (ConstraintSpec, estimate_decay_exponent, properize,
                        psi_argmax, quasi_properize,
                        solve_constrained_reference)
from .core import (AlphaParams, CompactNest, GridDensity, Model, ParamSpace,
                   make_grid, normalize)
from .errors import ConfigError, HypothesisError, NumericalError, RefpriorError
from .fisher import FisherField, fisher_info, jeffreys_density
from .functional import (alpha_divergence_mc, c_alpha, l_functional,
                         mutual_info_limit_check, mutual_info_mc)
from .hierarchy import sequential_reference
from .kernels import BACKEND
from .mcmc import propriety_probe, rw_metropolis, twopiece_posterior_z
from .models import model_from_spec, twopiece_model

__version__ = "0.1.0"

__all__ = [
    "AlphaParams",
    "BACKEND",
    "CompactNest",
    "ConfigError",
    "ConstraintSpec",
    "FisherField",
    "GridDensity",
    "HypothesisError",
    "Model",
    "NumericalError",
    "ParamSpace",
    "RefpriorError",
    "alpha_divergence_mc",
    "c_alpha",
    "cli",
    "constrain",
    "core",
    "errors",
    "estimate_decay_exponent",
    "fisher",
    "fisher_info",
    "functional",
    "hierarchy",
    "jeffreys_density",
    "kernels",
    "l_functional",
    "make_grid",
    "mcmc",
    "model_from_spec",
    "models",
    "mutual_info_limit_check",
    "mutual_info_mc",
    "normalize",
    "properize",
    "propriety_probe",
    "psi_argmax",
    "quadrature",
    "quasi_properize",
    "reports",
    "rw_metropolis",
    "sequential_reference",
    "solve_constrained_reference",
    "svgplot",
    "twopiece_model",
    "twopiece_posterior_z",
    "__version__",
]
