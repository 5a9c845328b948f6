"""Command-line surface: refprior <command> --config <json> [--out DIR] [--threads N].

Each subcommand reads one JSON config (validated against the shipped
config-v1 schema), runs the corresponding module, and writes CSV/SVG
artifacts plus a schema-validated report.json into the output directory.
Runs are deterministic given the config: all seeds are explicit, reports
carry no timestamps, and outputs do not depend on --threads.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 hypothesis or
constraint violation.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import kernels, models, reports
from ._parallel import parallel_map
from .constrain import (ConstraintSpec, estimate_decay_exponent,
                        feasible_perturbations, power_quasi_reference,
                        properize, psi_argmax, quasi_properize,
                        solve_constrained_reference)
from .core import CompactNest, GridDensity, ParamSpace, make_grid, normalize
from .errors import ConfigError, HypothesisError, NumericalError
from .fisher import DEFAULT_MC_SAMPLES, FisherField, jeffreys_density
from .functional import l_functional, mutual_info_limit_check
from .hierarchy import BlockOrdering, sequential_reference
from .mcmc import (density_write_csv, posterior_density_1d, rw_metropolis,
                   twopiece_posterior_z, z_to_theta, chain_write_csv)
from .svgplot import Curve, line_plot

DEFAULT_NODES = 65
DEFAULT_NEST_INDEX = 3

__all__ = ["main"]


# -- shared helpers -----------------------------------------------------------


def _need(cfg: dict, key: str, command: str):
    if key not in cfg:
        raise ConfigError(f"the {command} command needs '{key}' in its config")
    return cfg[key]


def _alpha(cfg: dict) -> float:
    return float(cfg.get("alpha", 0.5))


def _nodes(cfg: dict, default=DEFAULT_NODES):
    n = cfg.get("nodes_per_axis", default)
    return list(n) if isinstance(n, list) else int(n)


def _build_grid(model, cfg: dict):
    space = model.param_space
    nest_index = cfg.get("nest_index")
    if space.compact and nest_index is None:
        return make_grid(space, nodes_per_axis=_nodes(cfg))
    idx = DEFAULT_NEST_INDEX if nest_index is None else int(nest_index)
    return make_grid(space, nest_index=idx, nodes_per_axis=_nodes(cfg))


def _fisher_field(model, cfg: dict) -> FisherField:
    fcfg = cfg.get("fisher", {})
    method = fcfg.get("method")
    if method is None:
        method = "closed_form" if model.fisher_closed_form is not None \
            else "mc_score"
    return FisherField(model, method=method,
                       mc_samples=int(fcfg.get("mc_samples",
                                               DEFAULT_MC_SAMPLES)),
                       seed=int(cfg.get("seed", 0)))


def _axis_names(model) -> list[str]:
    named = {"twopiece": ["mu", "sigma1", "sigma2"],
             "gaussian-location": ["mu"], "gaussian-scale": ["sigma"]}
    return named.get(model.name, [f"axis{k}" for k in range(model.dim)])


def _slices_svg(density: GridDensity, path, title: str, names) -> None:
    """One max-normalized center slice per axis, plotted against the node
    position fraction so axes with different scales share one panel."""
    center = [g.size // 2 for g in density.grid]
    log_vals = density.log_values()
    curves = []
    for axis in range(density.dim):
        sel = tuple(slice(None) if k == axis else center[k]
                    for k in range(density.dim))
        lv = log_vals[sel]
        top = float(np.max(lv))
        if not math.isfinite(top):
            continue
        frac = np.linspace(0.0, 1.0, density.grid[axis].size)
        curves.append(Curve(frac, np.exp(lv - top), label=f"{names[axis]} slice"))
    line_plot(curves, path, title=title,
              xlabel="position along axis (node fraction of the box)",
              ylabel="density / max", y_range=(0.0, 1.05))


def _axis_slice_density(density: GridDensity, axis: int) -> GridDensity:
    """The 1-D center slice along one axis, carrying that axis' true bounds."""
    space = density.space
    center = [g.size // 2 for g in density.grid]
    sel = tuple(slice(None) if k == axis else center[k]
                for k in range(density.dim))
    sub = ParamSpace((space.lower[axis],), (space.upper[axis],),
                     (space.open_lower[axis],), (space.open_upper[axis],))
    return GridDensity.from_log_values(sub, (density.grid[axis],),
                                       density.log_values()[sel])


def _boundary_verdicts(density: GridDensity) -> list[dict]:
    """Decay-rate classification of every open or infinite edge.

    A finite edge with exponent <= -1, or an infinite edge with exponent
    >= -1, carries diverging prior mass.
    """
    space = density.space
    out = []
    for axis in range(density.dim):
        marked = {"lower": space.open_lower[axis], "upper": space.open_upper[axis]}
        if not any(marked.values()):
            continue
        sl = _axis_slice_density(density, axis)
        g = density.grid[axis]
        m = max(10, g.size // 5)
        for edge in ("lower", "upper"):
            if not marked[edge]:
                continue
            window = (float(g[0]), float(g[m - 1])) if edge == "lower" \
                else (float(g[-m]), float(g[-1]))
            boundary = space.lower[axis] if edge == "lower" else space.upper[axis]
            entry = {"axis": axis, "edge": edge, "exponent": None,
                     "fit_residual": None}
            try:
                tail = estimate_decay_exponent(sl, boundary, window)
            except (ConfigError, HypothesisError) as exc:
                entry["verdict"] = f"no power-law fit: {exc}"
                out.append(entry)
                continue
            a = tail.exponent
            improper = a <= -1.0 if math.isfinite(boundary) else a >= -1.0
            entry.update(exponent=a, fit_residual=tail.fit_residual,
                         verdict="diverging mass (improper)" if improper
                         else "integrable tail")
            out.append(entry)
    return out


def _power_fn(exponents):
    exps = [float(e) for e in exponents]

    def fn(*ms):
        out = np.ones_like(np.asarray(ms[0], dtype=float))
        for m, p in zip(ms, exps):
            if p != 0.0:
                out = out * np.asarray(m, dtype=float) ** p
        return out

    return fn


def _indicator_fn(box):
    lows = [float(b[0]) for b in box]
    highs = [float(b[1]) for b in box]

    def fn(*ms):
        inside = np.ones_like(np.asarray(ms[0], dtype=float), dtype=bool)
        for m, lo, hi in zip(ms, lows, highs):
            inside &= (np.asarray(m) >= lo) & (np.asarray(m) <= hi)
        return inside.astype(float)

    return fn


# -- commands -----------------------------------------------------------------


def cmd_jeffreys(cfg: dict, outdir: Path, threads: int):
    model = models.model_from_spec(_need(cfg, "model", "jeffreys"))
    grid = _build_grid(model, cfg)
    field = _fisher_field(model, cfg)
    density, rep = jeffreys_density(field, grid, return_report=True)
    names = _axis_names(model)
    reports.grid_table(outdir / "jeffreys.csv", density.grid,
                       density.max_normalized(),
                       axis_names=names, value_name="jeffreys")
    _slices_svg(density, outdir / "jeffreys.svg",
                f"Jeffreys density slices: {model.name}", names)
    verdicts = _boundary_verdicts(density)
    for v in verdicts:
        expo = "n/a" if v["exponent"] is None else f"{v['exponent']:+.4f}"
        print(f"{names[v['axis']]} {v['edge']} edge: exponent {expo} "
              f"-> {v['verdict']}")
    results = {"fisher": rep, "boundaries": verdicts,
               "grid_shape": [g.size for g in density.grid]}
    return results, ["jeffreys.csv", "jeffreys.svg"]


def cmd_constrain(cfg: dict, outdir: Path, threads: int):
    model = models.model_from_spec(_need(cfg, "model", "constrain"))
    alpha = _alpha(cfg)
    grid = _build_grid(model, cfg)
    field = _fisher_field(model, cfg)
    density = jeffreys_density(field, grid)
    functions, targets = [], []
    for j, c in enumerate(_need(cfg, "constraints", "constrain")):
        kind = c.get("type")
        if kind == "power":
            if "exponents" not in c or len(c["exponents"]) != model.dim:
                raise ConfigError(f"constraint {j}: power type needs one "
                                  "exponent per axis")
            functions.append(_power_fn(c["exponents"]))
        elif kind == "indicator":
            if "box" not in c or len(c["box"]) != model.dim:
                raise ConfigError(f"constraint {j}: indicator type needs one "
                                  "[lo, hi] pair per axis")
            functions.append(_indicator_fn(c["box"]))
        else:
            raise ConfigError(f"constraint {j}: unknown type {kind!r}")
        targets.append(float(c["target"]))
    spec = ConstraintSpec(tuple(functions), tuple(targets))
    solution = solve_constrained_reference(density, spec, alpha)

    results = {
        "lambdas": list(solution.lambdas),
        "max_residual": float(np.max(np.abs(solution.residuals))),
        "l_value": solution.l_value.value,
        "l_quadrature_error": solution.l_value.quadrature_error_estimate,
        "clamped": solution.clamped,
        "iterations": solution.iterations,
    }
    n_pert = int(cfg.get("perturbations", 0))
    if n_pert:
        rng = np.random.default_rng([int(cfg.get("seed", 0)), 1])
        wins = 0
        for pert in feasible_perturbations(solution, spec, n_pert, rng):
            if solution.l_value.value > l_functional(pert, density, alpha).value:
                wins += 1
        results["perturbations"] = {"count": n_pert, "wins": wins}
    names = _axis_names(model)
    reports.grid_table(outdir / "prior.csv", solution.prior.grid,
                       solution.prior.max_normalized(),
                       axis_names=names, value_name="prior")
    _slices_svg(solution.prior, outdir / "prior.svg",
                "constrained reference prior slices", names)
    print("lambda:", np.array2string(np.asarray(solution.lambdas), precision=8))
    return results, ["prior.csv", "prior.svg"]


def cmd_properize(cfg: dict, outdir: Path, threads: int):
    model = models.model_from_spec(_need(cfg, "model", "properize"))
    alpha = _alpha(cfg)
    space = model.param_space
    depth = int(cfg.get("nest_depth", 6))
    nest = CompactNest.default(space, depth)
    grid = make_grid(space, nest_index=depth - 1, nodes_per_axis=_nodes(cfg),
                     nest=nest)
    field = _fisher_field(model, cfg)
    density = jeffreys_density(field, grid)

    if ("g" in cfg) == ("epsilon" in cfg):
        raise ConfigError("properize needs exactly one of 'g' (power "
                          "exponents) or 'epsilon' (two-piece shortcut)")
    if "epsilon" in cfg:
        if model.name != "twopiece":
            raise ConfigError("'epsilon' is the two-piece (sigma1 sigma2)^eps "
                              "shortcut; give 'g' exponents for other models")
        eps = float(cfg["epsilon"])
        exponents = [0.0, eps, eps]
    else:
        exponents = list(_need(cfg["g"], "exponents", "properize"))
        if len(exponents) != model.dim:
            raise ConfigError("g needs one exponent per axis")
    g_fn = _power_fn(exponents)

    if cfg.get("quasi", False):
        prior, rep = quasi_properize(density, g_fn, alpha, nest)
    else:
        prior, rep = properize(density, g_fn, alpha, nest)
    names = _axis_names(model)
    reports.grid_table(outdir / "prior.csv", prior.grid,
                       prior.max_normalized(),
                       axis_names=names, value_name="prior")
    _slices_svg(prior, outdir / "prior.svg", "properized prior slices", names)
    if "c" in rep:
        print(f"moment constant c = {rep['c']:.8g} "
              f"(+- {rep.get('c_error_estimate', 0.0):.2g}); "
              f"output properness: {rep['properness']}")
    results = {"g_exponents": exponents, **rep}
    return results, ["prior.csv", "prior.svg"]


def cmd_decay(cfg: dict, outdir: Path, threads: int):
    model = models.model_from_spec(_need(cfg, "model", "decay"))
    space = model.param_space
    axis = int(_need(cfg, "axis", "decay"))
    if not 0 <= axis < space.dim:
        raise ConfigError(f"axis must lie in [0, {space.dim - 1}]")
    edge = cfg.get("edge", "upper")
    window = tuple(float(v) for v in _need(cfg, "fit_window", "decay"))

    fixed = cfg.get("fixed")
    if space.dim > 1:
        if fixed is None or len(fixed) != space.dim:
            raise ConfigError("decay on a multi-axis model needs 'fixed': one "
                              "value per axis, null at the varying axis")
        pins = [None if v is None else float(v) for v in fixed]
    else:
        pins = [None]
    if pins[axis] is not None:
        raise ConfigError("'fixed' must be null at the varying axis")

    axis_space = ParamSpace((space.lower[axis],), (space.upper[axis],),
                            (space.open_lower[axis],), (space.open_upper[axis],))
    nodes = cfg.get("nodes_per_axis", 129)
    if not isinstance(nodes, int):
        raise ConfigError("decay uses a single integer nodes_per_axis")
    if axis_space.compact and cfg.get("nest_index") is None:
        theta = make_grid(axis_space, nodes_per_axis=nodes)[0]
    else:
        theta = make_grid(axis_space,
                          nest_index=int(cfg.get("nest_index",
                                                 DEFAULT_NEST_INDEX)),
                          nodes_per_axis=nodes)[0]

    field = _fisher_field(model, cfg)
    log_j = np.empty(theta.size)
    point = np.array([0.0 if v is None else v for v in pins])
    for i, t in enumerate(theta):
        point[axis] = t
        info = field.evaluator(point, node_index=i)
        det = float(np.linalg.det(info))
        if not det > 0.0:
            raise NumericalError(f"Fisher determinant {det} at theta="
                                 f"{point.tolist()}; cannot take sqrt")
        log_j[i] = 0.5 * math.log(det)
    box_space = ParamSpace.box([(float(theta[0]), float(theta[-1]))])
    line = GridDensity.from_log_values(box_space, (theta,), log_j)

    boundary = axis_space.lower[0] if edge == "lower" else axis_space.upper[0]
    tail = estimate_decay_exponent(line, boundary, window)
    names = _axis_names(model)
    print(f"{names[axis]} {edge} edge: exponent {tail.exponent:+.4f} "
          f"(fit rms {tail.fit_residual:.3g})")
    results = {"axis": axis, "edge": edge, "boundary": boundary,
               "exponent": tail.exponent, "fit_residual": tail.fit_residual,
               "match_constant": tail.match_constant,
               "fit_window": list(tail.fit_window), "fixed": pins}
    outputs = ["decay.csv", "decay.svg"]
    reports.grid_table(outdir / "decay.csv", (theta,), np.exp(log_j),
                       axis_names=[names[axis]], value_name="jeffreys_line")

    fit = tail.match_constant * np.abs(
        theta if math.isinf(boundary) else theta - boundary) ** tail.exponent
    logx = theta[0] > 0 and theta[-1] / max(theta[0], 1e-300) >= 100
    line_plot([Curve(theta, np.exp(log_j), label="Jeffreys line"),
               Curve(theta, fit, label=f"power fit a={tail.exponent:.3f}",
                     dashed=True)],
              outdir / "decay.svg", title="boundary decay of the Jeffreys line",
              xlabel=names[axis], ylabel="density", logx=logx, logy=True)

    psi_cfg = cfg.get("psi")
    if psi_cfg:
        if space.lower[axis] != 0.0:
            raise ConfigError("psi diagnostics assume a (0, upper)-type axis")
        u_int = psi_cfg.get("u_interval")
        rows = []
        for i in psi_cfg.get("nest_indices", [1, 3, 5]):
            diag = psi_argmax(line, tail.exponent, int(i),
                              None if u_int is None else tuple(u_int),
                              alpha=_alpha(cfg))
            rows.append({"nest_index": int(i), "u_star": diag.argmax,
                         "gap_to_exponent": abs(diag.argmax - tail.exponent)})
            print(f"  psi box {i}: u* = {diag.argmax:+.5f}")
        results["psi"] = rows
        reports.write_table(outdir / "psi.csv",
                            ["nest_index", "u_star", "gap_to_exponent"],
                            [[r["nest_index"], r["u_star"],
                              r["gap_to_exponent"]] for r in rows])
        outputs.append("psi.csv")

    if cfg.get("emit_quasi", False):
        quasi = power_quasi_reference(tail, axis_space, grid=(theta,))
        reports.grid_table(outdir / "quasi.csv", quasi.grid,
                           quasi.max_normalized(),
                           axis_names=[names[axis]], value_name="quasi_prior")
        outputs.append("quasi.csv")
        results["quasi_emitted"] = True
    return results, outputs


def cmd_hierarchy(cfg: dict, outdir: Path, threads: int):
    model = models.model_from_spec(_need(cfg, "model", "hierarchy"))
    ordering_cfg = _need(cfg, "ordering", "hierarchy")
    ordering = BlockOrdering(tuple(int(a) for a in ordering_cfg[0]),
                             tuple(int(a) for a in ordering_cfg[1]))
    box = [tuple(float(v) for v in b) for b in _need(cfg, "box", "hierarchy")]
    fcfg = cfg.get("fisher", {})
    prior, rep = sequential_reference(
        model, ordering, _alpha(cfg), box,
        nodes_per_axis=_nodes(cfg, default=21),
        fisher_method=fcfg.get("method"),
        mc_samples=int(cfg.get("mc_samples", 8000)),
        seed=int(cfg.get("seed", 0)), threads=threads)
    names = _axis_names(model)
    reports.grid_table(outdir / "prior.csv", prior.grid,
                       prior.max_normalized(),
                       axis_names=names, value_name="prior")
    _slices_svg(prior, outdir / "prior.svg",
                "sequential reference prior slices", names)
    print(f"two-block sequential prior on box {box}; "
          f"joint integral {rep['joint_integral']:.6g}")
    return rep, ["prior.csv", "prior.svg"]


def cmd_mutualinfo(cfg: dict, outdir: Path, threads: int):
    model = models.model_from_spec(_need(cfg, "model", "mutualinfo"))
    alpha = _alpha(cfg)
    grid = _build_grid(model, cfg)
    field = _fisher_field(model, cfg)
    density = jeffreys_density(field, grid)

    pcfg = _need(cfg, "prior", "mutualinfo")
    family = pcfg.get("family")
    if family == "uniform":
        prior = normalize(GridDensity.from_values(
            model.param_space, grid, np.ones([g.size for g in grid])))
    elif family == "jeffreys":
        prior = normalize(density)
    elif family == "power-moment":
        if model.name != "twopiece":
            raise ConfigError("the power-moment prior family is two-piece only")
        gm = models.TwoPieceGamma.from_gamma(float(_need(pcfg, "gamma",
                                                         "mutualinfo")), alpha)
        prior = normalize(models.twopiece_proper_prior(gm, grid))
    else:
        raise ConfigError(f"unknown prior family {family!r}; built-ins: "
                          "uniform, jeffreys, power-moment")

    schedule = [int(k) for k in _need(cfg, "k_schedule", "mutualinfo")]
    mc_params = {"n_outer": int(cfg.get("n_outer", 2000)),
                 "n_inner": int(cfg.get("n_inner", 50)),
                 "seed": int(cfg.get("seed", 0)), "threads": threads}
    res = mutual_info_limit_check(model, prior, alpha, schedule,
                                  mc_params=mc_params, jeffreys=density)
    header = ["k", "scaled_mi", "std_error", "l_value", "gap"]
    reports.write_table(outdir / "mutualinfo.csv", header,
                        [[r[h] for h in header] for r in res["rows"]])
    ks = [r["k"] for r in res["rows"]]
    limit = abs(res["l_value"])
    line_plot([Curve(ks, [r["scaled_mi"] for r in res["rows"]],
                     label="k^(d a/2) I"),
               Curve(ks, [r["centered_mi"] for r in res["rows"]],
                     label="k^(d a/2) (1/(a(1-a)) - I)"),
               Curve(ks, [limit] * len(ks), label="|l(pi)|", dashed=True)],
              outdir / "mutualinfo.svg",
              title="rescaled mutual information vs dataset size",
              xlabel="k", ylabel="rescaled value",
              logx=max(ks) / max(min(ks), 1) >= 100)
    for r in res["rows"]:
        print(f"k={r['k']:>5d}  scaled I = {r['scaled_mi']:.6g} "
              f"(+- {r['std_error']:.2g}), gap to |l| = {r['gap']:.3g}, "
              f"centered = {r['centered_mi']:.6g}")
    return res, ["mutualinfo.csv", "mutualinfo.svg"]


def cmd_sensitivity(cfg: dict, outdir: Path, threads: int):
    model = models.model_from_spec(_need(cfg, "model", "sensitivity"))
    if model.name != "twopiece":
        raise ConfigError("sensitivity is the two-piece posterior study; "
                          "the model spec must use the twopiece family")
    gammas = [float(g) for g in _need(cfg, "gammas", "sensitivity")]
    k_list = [int(k) for k in _need(cfg, "k_list", "sensitivity")]
    theta_star = np.asarray(cfg.get("theta_star", [2.0, 2.0, 2.0]), dtype=float)
    seed = int(cfg.get("seed", models.DATASET_SEED))
    n_draws = int(cfg.get("n_draws", 20000))
    n_burn = int(cfg.get("n_burn", 5000))
    write_chains = bool(cfg.get("write_chains", False))

    outputs: list[str] = []
    results: dict = {"per_k": [], "chain": {"n_draws": n_draws,
                                            "n_burn": n_burn, "seed": seed}}
    summary_rows = []

    tasks = [(k, j, g) for k in k_list for j, g in enumerate(gammas)]

    def run_one(task):
        k, j, g = task
        y = models.twopiece_sample(theta_star, k,
                                   np.random.default_rng([seed, k]))
        s0 = max(float(np.std(y)), 1e-3)
        init = np.array([float(np.median(y)), math.log(s0), math.log(s0)])
        chain = rw_metropolis(twopiece_posterior_z(y, g), init,
                              n_draws=n_draws, n_burn=n_burn,
                              seed=[seed, k, j])
        return chain.transformed(z_to_theta)

    chains = dict(zip(tasks, parallel_map(run_one, tasks, threads)))

    for k in k_list:
        y = models.twopiece_sample(theta_star, k,
                                   np.random.default_rng([seed, k]))
        data_name = f"data_k{k}.csv"
        models.write_dataset(outdir / data_name, y)
        outputs.append(data_name)

        per_gamma = [chains[(k, j, g)] for j, g in enumerate(gammas)]
        # shared sigma2 evaluation grid so the curves are comparable
        lo, hi = math.inf, -math.inf
        for chain in per_gamma:
            s2 = chain.draws[:, 2]
            sd = float(np.std(s2, ddof=1))
            iqr = float(np.percentile(s2, 75) - np.percentile(s2, 25))
            h = 0.9 * min(sd, iqr / 1.34) * s2.size ** (-0.2)
            lo = min(lo, float(s2.min()) - 3 * h)
            hi = max(hi, float(s2.max()) + 3 * h)
        grid = np.linspace(max(lo, 1e-9), hi, 256)

        curves, kde_values = [], []
        for j, g in enumerate(gammas):
            chain = per_gamma[j]
            kde = posterior_density_1d(chain, 2, grid=grid)
            vals = kde.linear_values()
            kde_values.append(vals)
            kde_name = f"kde_k{k}_gamma{g:g}.csv"
            density_write_csv(kde, outdir / kde_name,
                              names=("sigma2", "density"))
            outputs.append(kde_name)
            curves.append(Curve(grid, vals, label=f"gamma={g:g}"))
            if write_chains:
                chain_name = f"chain_k{k}_gamma{g:g}.csv"
                chain_write_csv(chain, outdir / chain_name,
                                names=["mu", "sigma1", "sigma2"])
                outputs.append(chain_name)

        svg_name = f"sensitivity_k{k}.svg"
        line_plot(curves, outdir / svg_name,
                  title=f"posterior of sigma2 under the gamma sweep, k={k}",
                  xlabel="sigma2", ylabel="posterior density")
        outputs.append(svg_name)

        max_dist = 0.0
        for a in range(len(gammas)):
            for b in range(a + 1, len(gammas)):
                dist = float(np.max(np.abs(kde_values[a] - kde_values[b])))
                summary_rows.append([k, gammas[a], gammas[b], dist])
                max_dist = max(max_dist, dist)
        results["per_k"].append({"k": k, "max_sup_distance": max_dist,
                                 "kde_grid": [float(grid[0]), float(grid[-1])]})
        print(f"k={k:>4d}: max pairwise sup distance between gamma curves "
              f"= {max_dist:.5f}")

    reports.write_table(outdir / "summary.csv",
                        ["k", "gamma_a", "gamma_b", "sup_distance"],
                        summary_rows)
    outputs.append("summary.csv")
    return results, outputs


COMMANDS = {
    "jeffreys": cmd_jeffreys,
    "constrain": cmd_constrain,
    "properize": cmd_properize,
    "decay": cmd_decay,
    "hierarchy": cmd_hierarchy,
    "mutualinfo": cmd_mutualinfo,
    "sensitivity": cmd_sensitivity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refprior",
        description="Objective priors from Fisher information: construction, "
                    "diagnostics, and validation runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    help_lines = {
        "jeffreys": "Jeffreys density on a grid box, with boundary decay verdicts",
        "constrain": "moment-constrained reference prior in Lagrange form",
        "properize": "properization by a moment function g (optionally quasi)",
        "decay": "boundary decay exponent of the Jeffreys line, psi diagnostics",
        "hierarchy": "two-block sequential reference prior",
        "mutualinfo": "Monte Carlo mutual information vs the asymptotic l",
        "sensitivity": "two-piece posterior sensitivity study over gamma",
    }
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=help_lines[name])
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker count (default: config value or 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = reports.read_config(args.config)
        if cfg["command"] != args.command:
            raise ConfigError(f"config is for '{cfg['command']}' but the "
                              f"'{args.command}' subcommand was invoked")
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        threads = args.threads if args.threads is not None \
            else int(cfg.get("threads", 1))
        if threads < 1:
            raise ConfigError("--threads must be >= 1")
        results, outputs = COMMANDS[args.command](cfg, outdir, threads)
        reports.write_report(outdir / "report.json", args.command, cfg,
                             results, outputs + ["report.json"],
                             kernels.BACKEND)
        print(f"report: {outdir / 'report.json'}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except HypothesisError as exc:
        print(f"hypothesis error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
