"""Command line entry points for studies, bounds, and diagnostics.

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
failures. Study commands write a delimited report (csv or json) and a PNG
figure with the same stem.
"""

import functools
import json
import math
import os
import sys

import click

from . import bounds
from .distances import STEIN_CATALOG, stein_identity_check, stein_solve_1d
from .dynamics import CircleMap
from .errors import ConfigError, NumericalError
from .experiments import (DEFAULT_CONFIGS, StudyConfig, emit_report,
                          render_figures, run_qds_study, run_rate_study,
                          run_rds_study)
from .streams import stream
from .transfer import invariant_density


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo("config error: %s" % exc, err=True)
            sys.exit(2)
        except NumericalError as exc:
            click.echo("numerical failure: %s" % exc, err=True)
            sys.exit(3)
    return wrapper


def _study_options(fn):
    for option in (
        click.option("--config", "config_path", type=click.Path(exists=False),
                     default=None, help="JSON study config file."),
        click.option("--seed", type=int, default=None,
                     help="Override the config seed."),
        click.option("--out", "out_path", type=click.Path(), default=None,
                     help="Report path (default <command>.<format>)."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                     default="csv", show_default=True,
                     help="Report serialization."),
        click.option("--grid", type=int, default=None,
                     help="Override the transfer-operator grid size."),
        click.option("--samples", type=int, default=None,
                     help="Override the Monte Carlo sample count."),
    ):
        fn = option(fn)
    return fn


def _run_study(kind, scenario, runner, config_path, seed, out_path, fmt,
               grid, samples):
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if grid is not None:
        overrides["grid"] = grid
    if samples is not None:
        overrides["samples"] = samples
    if config_path is None:
        raw = dict(DEFAULT_CONFIGS[kind])
        raw.update(overrides)
        config = StudyConfig(raw, scenario=scenario)
    else:
        config = StudyConfig.from_file(config_path, scenario=scenario,
                                       overrides=overrides)
    report = runner(config)
    out = out_path or "%s-study.%s" % (kind, fmt)
    emit_report(report, out, fmt)
    png = os.path.splitext(out)[0] + ".png"
    render_figures(report, png)
    click.echo("wrote %s and %s (%d rows)" % (out, png, len(report.rows)))
    for key in ("theta", "c_tilde", "sigma_zero", "stable",
                "final_below_first_median"):
        if key in report.metadata:
            click.echo("  %s: %s" % (key, report.metadata[key]))
    for name, fit in sorted(report.fits.items()):
        click.echo("  fit %s: beta=%.4f stderr=%.4f r2=%.4f"
                   % (name, fit["beta"], fit["stderr"], fit["r2"]))


@click.group()
def main():
    """Central limit theorem studies for driven expanding circle maps."""


@main.command(name="rate-study")
@_study_options
@_guarded
def rate_study(config_path, seed, out_path, fmt, grid, samples):
    """Normal-approximation rate study for a cycled map sequence."""
    _run_study("rate", "sequential", run_rate_study, config_path, seed,
               out_path, fmt, grid, samples)


@main.command(name="qds-study")
@_study_options
@_guarded
def qds_study(config_path, seed, out_path, fmt, grid, samples):
    """Quasistatic study of xi_n(t) variances and distances."""
    _run_study("qds", "quasistatic", run_qds_study, config_path, seed,
               out_path, fmt, grid, samples)


@main.command(name="rds-study")
@_study_options
@_guarded
def rds_study(config_path, seed, out_path, fmt, grid, samples):
    """Random-schedule study across driver realizations."""
    _run_study("rds", "random", run_rds_study, config_path, seed,
               out_path, fmt, grid, samples)


def _as_number(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError("bound parameters must be numeric, got %r" % text)


def _kchoice_dict(kc):
    return {"k": kc.k, "valid": kc.valid, "n_threshold": kc.n_threshold,
            "k_plus_one_bound": kc.k_plus_one_bound}


_BOUND_REGISTRY = {
    "main": bounds.thm_main_bound,
    "w1": bounds.thm_w1_bound,
    "rate": bounds.circle_rate_bound,
    "sixth-root": bounds.sixth_root_bound,
    "self-normalized": bounds.self_normalized_bound,
    "splitting": bounds.splitting_bound,
    "c-star": bounds.c_star,
    "c-sharp": bounds.c_sharp,
    "c-tilde": bounds.circle_C_tilde,
    "c-multivar": bounds.circle_C_multivar,
    "rho-tilde": bounds.rho_tilde_univar,
    "rho-tilde-multivar": bounds.rho_tilde_multivar,
    "choose-k": bounds.choose_K,
    "geometric-tail": bounds.geometric_tail,
    "l-star": bounds.l_star,
}


@main.command(name="bound")
@click.argument("name")
@click.argument("params", nargs=-1)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Also write the result JSON to this path.")
@_guarded
def bound(name, params, out_path):
    """Evaluate a named bound with key=value parameters.

    Example: circleclt bound rate c_tilde=232 n=4096 theta=0.25
    """
    fn = _BOUND_REGISTRY.get(name)
    if fn is None:
        raise ConfigError("unknown bound %r; available: %s"
                          % (name, ", ".join(sorted(_BOUND_REGISTRY))))
    kwargs = {}
    for param in params:
        if "=" not in param:
            raise ConfigError("bound parameters look like key=value, got %r"
                              % param)
        key, _, value = param.partition("=")
        kwargs[key] = _as_number(value)
    try:
        result = fn(**kwargs)
    except TypeError as exc:
        raise ConfigError("bad parameters for bound %r: %s" % (name, exc))
    if isinstance(result, bounds.BoundReport):
        payload = result.to_dict()
    elif isinstance(result, bounds.KChoice):
        payload = _kchoice_dict(result)
    elif isinstance(result, tuple):
        payload = {"values": [float(v) for v in result]}
    else:
        payload = {"value": float(result)}
    text = json.dumps(payload, sort_keys=True, indent=2)
    click.echo(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


@main.command(name="stein-check")
@click.option("--sigma-sq", type=float, default=1.0, show_default=True,
              help="Variance of the target normal law.")
@click.option("--samples", type=int, default=10000, show_default=True,
              help="Number of normal samples for the identity check.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid", type=int, default=20001, show_default=True,
              help="Stein ODE grid size.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the per-function results as JSON.")
@_guarded
def stein_check(sigma_sq, samples, seed, grid, out_path):
    """Solve the Stein equation for the test-function catalog and verify
    the identity E[sigma^2 A'(S) - S A(S)] = E[h(S)] - phi(h) on exact
    normal samples."""
    if sigma_sq <= 0.0:
        raise ConfigError("sigma-sq must be positive")
    if samples < 2:
        raise ConfigError("samples must be >= 2")
    rng = stream(seed, "stein-check")
    draws = rng.normal(0.0, math.sqrt(sigma_sq), samples)
    results = []
    worst_gap = 0.0
    worst_resid = 0.0
    for name, h, hprime in STEIN_CATALOG:
        sol = stein_solve_1d(h, sigma_sq, grid=grid, hprime=hprime)
        resid = sol.residual_max()
        lhs, rhs, gap = stein_identity_check(draws, h, sigma_sq, grid=grid,
                                             hprime=hprime)
        results.append({"h": name, "residual": resid, "lhs": lhs,
                        "rhs": rhs, "gap": gap})
        worst_gap = max(worst_gap, gap)
        worst_resid = max(worst_resid, resid)
        click.echo("%-10s residual=%.3e identity gap=%.3e" % (name, resid, gap))
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"sigma_sq": sigma_sq, "samples": samples,
                                 "results": results}, sort_keys=True, indent=2))
            fh.write("\n")
    if worst_resid >= 1e-8 or worst_gap >= 1e-6:
        raise NumericalError("Stein check failed: residual %.3e, gap %.3e"
                             % (worst_resid, worst_gap))
    click.echo("all %d test functions pass" % len(STEIN_CATALOG))


@main.command(name="invariant-density")
@click.option("--degree", type=int, default=2, show_default=True)
@click.option("--amplitude", type=float, default=0.0, show_default=True)
@click.option("--phase", type=float, default=0.0, show_default=True)
@click.option("--grid", type=int, default=4096, show_default=True)
@click.option("--tol", type=float, default=1e-12, show_default=True)
@click.option("--max-iter", type=int, default=10000, show_default=True)
@click.option("--out", "out_path", type=click.Path(),
              default="invariant-density.csv", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@_guarded
def invariant_density_cmd(degree, amplitude, phase, grid, tol, max_iter,
                          out_path, fmt):
    """Compute the invariant density of a single map on the grid."""
    m = CircleMap(degree, amplitude, phase)
    rho = invariant_density(m, M=grid, tol=tol, max_iter=max_iter)
    if fmt == "json":
        payload = {"degree": degree, "amplitude": amplitude, "phase": phase,
                   "grid": grid, "x": [float(v) for v in rho.x],
                   "values": [float(v) for v in rho.values]}
        data = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        lines = ["# amplitude: %r" % amplitude, "# degree: %d" % degree,
                 "# grid: %d" % grid, "# phase: %r" % phase, "x,value"]
        lines.extend("%r,%r" % (float(x), float(v))
                     for x, v in zip(rho.x, rho.values))
        data = "\n".join(lines) + "\n"
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(data)
    png = os.path.splitext(out_path)[0] + ".png"
    from matplotlib.figure import Figure
    fig = Figure(figsize=(7.0, 4.0))
    ax = fig.subplots()
    ax.plot(rho.x, rho.values, lw=1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title("invariant density, degree %d amplitude %g" % (degree, amplitude))
    fig.tight_layout()
    fig.savefig(png, dpi=110, format="png")
    click.echo("wrote %s and %s (min %.6f, max %.6f)"
               % (out_path, png, float(rho.values.min()), float(rho.values.max())))


if __name__ == "__main__":
    main()
