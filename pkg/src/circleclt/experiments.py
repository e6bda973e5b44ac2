"""Configuration-driven studies, constant calibration, rate fits, and reports.

A study config is a plain dict (usually loaded from JSON) naming a
scenario (sequential, quasistatic, random), an observable, a horizon
grid, and sampling parameters. Studies return StudyReport objects that
serialize deterministically: the same config and seed always produce the
same bytes, because every Monte Carlo draw uses a stream keyed by
(seed, row labels) rather than shared RNG state.
"""

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .bounds import (DecayConstants, choose_K, circle_C_tilde,
                     circle_rate_bound, sixth_root_bound)
from .distances import TrigTestFunction, smooth_test_distance, w1_empirical_vs_normal
from .dynamics import (CircleMap, InitialDensity, MapSchedule, RandomDriver,
                       map_bounds, power_curve)
from .errors import ConfigError, NumericalError
from .stats import (Observable, correlation_profile, pair_correlation,
                    quadruple_correlation, sample_W, sigma_sq_curve,
                    variance_profile, xi_samples, xi_variance)
from .streams import stream
from .transfer import density_from_function, estimate_theta

_COMMON_KEYS = {"scenario", "observable", "epsilon", "n_grid", "samples",
                "grid", "seed", "lag", "theta_probes", "constants", "bootstrap"}
_SCENARIO_KEYS = {
    "sequential": {"maps"},
    "quasistatic": {"curve", "t_grid", "quad_points"},
    "random": {"driver", "realizations"},
}


class StudyConfig:
    """Validated study configuration with builders for the heavy objects."""

    def __init__(self, raw, scenario=None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        self.raw = dict(raw)
        sc = self.raw.get("scenario", scenario)
        if sc not in _SCENARIO_KEYS:
            raise ConfigError("scenario must be one of %s, got %r"
                              % (sorted(_SCENARIO_KEYS), sc))
        if scenario is not None and sc != scenario:
            raise ConfigError("config scenario %r does not match the %r study"
                              % (sc, scenario))
        allowed = _COMMON_KEYS | _SCENARIO_KEYS[sc]
        unknown = sorted(set(self.raw) - allowed)
        if unknown:
            raise ConfigError("unknown config keys: %s" % ", ".join(unknown))
        self.scenario = sc
        self.observable_spec = self.raw.get(
            "observable", [[{"kind": "cos", "mode": 1, "coeff": 1.0}]])
        self.epsilon = float(self.raw.get("epsilon", 0.0))

        n_grid = self.raw.get("n_grid")
        if not n_grid:
            raise ConfigError("config needs a nonempty n_grid")
        self.n_grid = [int(n) for n in n_grid]
        if any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid entries must be >= 1")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")

        self.samples = int(self.raw.get("samples", 100000))
        if self.samples < 0:
            raise ConfigError("samples must be >= 0")
        if sc in ("sequential", "random") and self.samples < 1000:
            raise ConfigError("distance studies need samples >= 1000")
        if sc == "quasistatic" and 0 < self.samples < 1000:
            raise ConfigError("quasistatic distance sampling needs samples >= 1000 "
                              "(or 0 for the Monte-Carlo-free path)")

        self.grid = int(self.raw.get("grid", 4096))
        self.seed = int(self.raw.get("seed", 0))
        self.lag = self.raw.get("lag")
        if self.lag is not None:
            self.lag = int(self.lag)
            if self.lag < 1:
                raise ConfigError("lag must be >= 1")
        self.theta_probes = int(self.raw.get("theta_probes", 30))
        self.constants = self.raw.get("constants", "calibrate")
        self.bootstrap = int(self.raw.get("bootstrap", 16))
        if self.bootstrap < 2:
            raise ConfigError("bootstrap must be >= 2")

        if sc == "quasistatic":
            t_grid = self.raw.get("t_grid", [1.0])
            self.t_grid = [float(t) for t in t_grid]
            if not self.t_grid:
                raise ConfigError("t_grid must be nonempty")
            if any(not 0.0 < t <= 1.0 for t in self.t_grid):
                raise ConfigError("t_grid entries must lie in (0, 1]")
            if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
                raise ConfigError("t_grid must be strictly increasing")
            self.quad_points = int(self.raw.get("quad_points", 33))
        if sc == "random":
            self.realizations = int(self.raw.get("realizations", 8))
            if self.realizations < 1:
                raise ConfigError("realizations must be >= 1")

    @classmethod
    def from_dict(cls, raw, scenario=None):
        return cls(raw, scenario=scenario)

    @classmethod
    def from_file(cls, path, scenario=None, overrides=None):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config %s: %s" % (path, exc))
        except json.JSONDecodeError as exc:
            raise ConfigError("config %s is not valid JSON: %s" % (path, exc))
        if overrides:
            raw = dict(raw)
            raw.update(overrides)
        return cls(raw, scenario=scenario)

    def build_observable(self):
        comps = []
        for comp in self.observable_spec:
            terms = []
            for term in comp:
                if not isinstance(term, dict):
                    raise ConfigError("observable terms must be mappings")
                kind = term.get("kind")
                terms.append((kind, int(term.get("mode", 0)),
                              float(term.get("coeff", 1.0))))
            comps.append(tuple(terms))
        return Observable(tuple(comps))

    def build_initial(self):
        return InitialDensity(self.epsilon)

    def build_maps(self):
        specs = self.raw.get("maps")
        if not specs:
            raise ConfigError("sequential config needs a nonempty maps list")
        maps = []
        for spec in specs:
            maps.append(CircleMap(int(spec.get("degree", 2)),
                                  float(spec.get("amplitude", 0.0)),
                                  float(spec.get("phase", 0.0))))
        return maps

    def build_curve(self):
        spec = self.raw.get("curve")
        if not isinstance(spec, dict):
            raise ConfigError("quasistatic config needs a curve mapping")
        def triple(key):
            part = spec.get(key, {})
            return (float(part.get("base", 0.0)), float(part.get("scale", 0.0)),
                    float(part.get("power", 1.0)))
        return power_curve(int(spec.get("degree", 2)),
                           triple("amplitude"), triple("phase"),
                           float(spec.get("eta", 1.0)), float(spec.get("c_h", 0.0)))

    def build_driver(self):
        spec = self.raw.get("driver", "default")
        if spec == "default":
            return RandomDriver.default()
        if not isinstance(spec, dict):
            raise ConfigError("driver must be 'default' or a mapping")
        return RandomDriver(int(spec.get("degree", 2)),
                            spec.get("amplitudes", ()),
                            spec.get("phases", ()),
                            spec.get("transition", ()),
                            kind=spec.get("kind", "markov"),
                            gamma=float(spec.get("gamma", 2.0)))

    def echo(self):
        return json.dumps(self.raw, sort_keys=True)


@dataclass(frozen=True)
class RateFit:
    """Least-squares power-law fit of distances against N."""

    beta: float
    stderr: float
    r2: float

    def to_dict(self):
        return {"beta": self.beta, "stderr": self.stderr, "r2": self.r2}


def fit_rate(points, with_log_correction=False):
    """Fit log d = a + beta log N, optionally modelling d = c N^beta log N.

    Needs at least three points with positive distances and N >= 2.
    Returns a RateFit with the slope, its standard error, and R^2.
    """
    pts = sorted((int(n), float(dv)) for n, dv in points)
    if len(pts) < 3:
        raise ConfigError("rate fitting needs at least 3 points, got %d" % len(pts))
    if any(dv <= 0.0 for _, dv in pts):
        raise ConfigError("rate fitting needs positive distances")
    if any(n < 2 for n, _ in pts):
        raise ConfigError("rate fitting needs N >= 2")
    x = np.log([n for n, _ in pts])
    y = np.log([dv for _, dv in pts])
    if with_log_correction:
        y = y - np.log(np.log([n for n, _ in pts]))
    xc = x - x.mean()
    sxx = float((xc ** 2).sum())
    if sxx <= 0.0:
        raise ConfigError("rate fitting needs distinct N values")
    beta = float((xc * (y - y.mean())).sum() / sxx)
    resid = y - (y.mean() + beta * xc)
    sse = float((resid ** 2).sum())
    sst = float(((y - y.mean()) ** 2).sum())
    stderr = math.sqrt(sse / (len(pts) - 2) / sxx)
    r2 = 1.0 if sst == 0.0 else 1.0 - sse / sst
    return RateFit(beta, stderr, r2)


def _scalar(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


class StudyReport:
    """Serializable study result: scalar metadata, tabular rows, and fits."""

    def __init__(self, kind, metadata, columns, rows, fits=None):
        self.kind = str(kind)
        self.metadata = {str(k): _scalar(v) for k, v in metadata.items()}
        self.columns = [str(c) for c in columns]
        self.rows = [{str(k): _scalar(v) for k, v in row.items()} for row in rows]
        self.fits = {str(k): {str(a): _scalar(b) for a, b in v.items()}
                     for k, v in (fits or {}).items()}

    def to_dict(self):
        return {"kind": self.kind, "metadata": self.metadata,
                "columns": self.columns, "rows": self.rows, "fits": self.fits}

    @classmethod
    def from_dict(cls, data):
        return cls(data["kind"], data["metadata"], data["columns"],
                   data["rows"], data.get("fits"))


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_bytes(report, fmt):
    """Serialize a report deterministically as UTF-8 bytes."""
    if fmt == "json":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        meta = dict(report.metadata)
        meta["kind"] = report.kind
        for name, fit in report.fits.items():
            for field, val in fit.items():
                meta["fit.%s.%s" % (name, field)] = val
        buf = io.StringIO()
        for key in sorted(meta):
            buf.write("# %s: %s\n" % (key, _fmt(meta[key])))
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([_fmt(row.get(col)) for col in report.columns])
        return buf.getvalue().encode()
    raise ConfigError("format must be csv or json, got %r" % (fmt,))


def emit_report(report, path, fmt="csv"):
    """Write the report to path in the requested format."""
    data = report_bytes(report, fmt)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise ConfigError("cannot write report to %s: %s" % (path, exc))


def render_figures(report, path):
    """Render the study's summary figure as a PNG next to the report."""
    from matplotlib.figure import Figure

    fig = Figure(figsize=(7.0, 4.6))
    ax = fig.subplots()
    if report.kind == "rate":
        _rate_figure(ax, report)
    elif report.kind == "qds":
        _qds_figure(ax, report)
    elif report.kind == "rds":
        _rds_figure(ax, report)
    else:
        raise ConfigError("no figure renderer for report kind %r" % report.kind)
    fig.tight_layout()
    fig.savefig(path, dpi=110, format="png")


def _rate_figure(ax, report):
    rows = [r for r in report.rows if r.get("distance") is not None]
    ns = [r["n"] for r in rows]
    if ns:
        ax.errorbar(ns, [r["distance"] for r in rows],
                    yerr=[r.get("stderr") or 0.0 for r in rows],
                    marker="o", linestyle="-", label="W1 distance")
        bounds = [r.get("bound") for r in rows]
        if all(b is not None for b in bounds):
            ax.plot(ns, bounds, marker="s", linestyle="--", label="bound")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("distance")
    ax.legend(loc="best")
    ax.set_title("normal approximation rate")


def _qds_figure(ax, report):
    ts = sorted({r["t"] for r in report.rows})
    for t in ts:
        rows = [r for r in report.rows if r["t"] == t and r["variance_gap"] > 0]
        if rows:
            ax.plot([r["n"] for r in rows], [r["variance_gap"] for r in rows],
                    marker="o", label="t=%g" % t)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("|variance gap|")
    ax.legend(loc="best")
    ax.set_title("quasistatic variance convergence")


def _rds_figure(ax, report):
    reals = sorted({r["realization"] for r in report.rows})
    for real in reals:
        rows = [r for r in report.rows if r["realization"] == real]
        ax.plot([r["n"] for r in rows], [r["sigma_sq"] for r in rows],
                marker=".", alpha=0.6)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N")
    ax.set_ylabel("sigma_N^2 per realization")
    ax.set_title("random schedule variance stability")


_QUADRUPLE_SET = ((0, 1, 2, 3), (0, 0, 2, 2), (0, 2, 5, 7),
                  (1, 3, 4, 8), (0, 3, 3, 6), (2, 2, 6, 6))
_PAIR_BASES = (0, 3, 7)


def calibrate_constants(schedule, f, initial, M=4096, probes=30):
    """Measure decay constants of a schedule from transfer-operator data.

    theta and D0 come from the probe-pair contraction fit (theta floored at
    1/lambda_min), C2 from pair correlations over a base/gap sweep, C4 from
    a fixed set of index quadruples, B0 = D0, and L0 from the initial
    density. Returns (constants, theta_fit, lag) with lag the cutoff
    ceil(10 / -ln theta) used for the sweeps.
    """
    rho0 = density_from_function(initial.density, M)
    fit = estimate_theta(schedule, probes=min(probes, schedule.horizon), M=M)
    theta = max(fit.theta, 1.0 / schedule.lambda_min)
    lag = max(1, math.ceil(10.0 / -math.log(theta)))
    noise_cap = int(math.floor(math.log(1e-8) / math.log(theta)))
    gap_top = min(lag, max(noise_cap, 1))

    c2 = 1e-12
    pair_cache = {}
    for alpha in range(f.d):
        for beta in range(f.d):
            for base in _PAIR_BASES:
                for gap in range(gap_top + 1):
                    if base + gap > schedule.horizon:
                        continue
                    val = pair_correlation(schedule, f, alpha, beta,
                                           base, base + gap, rho0)
                    pair_cache[(alpha, beta, base, base + gap)] = val
                    if abs(val) > 1e-12:
                        c2 = max(c2, abs(val) / theta ** gap)

    c4 = 1e-12
    for (i, j, k, l) in _QUADRUPLE_SET:
        if l > schedule.horizon:
            continue
        for alpha in range(f.d):
            m4 = quadruple_correlation(schedule, f, (alpha,) * 4,
                                       (i, j, k, l), rho0)
            outer = max(j - i, l - k)
            if abs(m4) > 1e-12:
                c4 = max(c4, abs(m4) / theta ** outer)
            g_ij = pair_cache.get((alpha, alpha, i, j))
            if g_ij is None:
                g_ij = pair_correlation(schedule, f, alpha, alpha, i, j, rho0)
            g_kl = pair_cache.get((alpha, alpha, k, l))
            if g_kl is None:
                g_kl = pair_correlation(schedule, f, alpha, alpha, k, l, rho0)
            split = m4 - g_ij * g_kl
            if abs(split) > 1e-12:
                c4 = max(c4, abs(split) / theta ** (k - j))

    constants = DecayConstants(theta, c2, c4, fit.d0, fit.d0,
                               initial.log_lip, source="calibrated")
    return constants, fit, lag


def _resolve_constants(config, schedule, f, initial):
    """Constants from config (floored to the schedule) or by calibration."""
    if config.constants == "calibrate":
        constants, fit, lag = calibrate_constants(
            schedule, f, initial, M=config.grid, probes=config.theta_probes)
    elif isinstance(config.constants, dict):
        spec = config.constants
        try:
            constants = DecayConstants(
                float(spec["theta"]), float(spec["c2"]), float(spec["c4"]),
                float(spec["b0"]), float(spec["d0"]),
                float(spec.get("l0", initial.log_lip)))
        except KeyError as exc:
            raise ConfigError("constants dict is missing key %s" % exc)
        constants = constants.floored(schedule.lambda_min)
        fit = None
        lag = max(1, math.ceil(10.0 / -math.log(constants.theta)))
    else:
        raise ConfigError("constants must be 'calibrate' or a mapping")
    if config.lag is not None:
        lag = config.lag
    return constants, fit, lag


def _bootstrap_w1(samples, sigma, seed, labels, resamples):
    """Bootstrap standard error of the empirical-vs-normal W1 distance."""
    rng = stream(seed, *labels)
    m = samples.size
    vals = [w1_empirical_vs_normal(samples[rng.integers(0, m, m)], sigma)
            for _ in range(resamples)]
    return float(np.std(vals, ddof=1))


_RATE_COLUMNS = ["n", "sigma_sq", "sigma", "k", "k_valid", "distance", "stderr",
                 "bound", "bound_variance", "bound_sixth", "bound_min",
                 "low_sigma", "degenerate"]


def run_rate_study(config):
    """Normal-approximation rate study for a sequential (cycled) schedule.

    Per N: the exact sigma_N^2 from the transfer operator, Monte Carlo W_N
    samples, the empirical W1 distance to N(0, sigma_N^2) with a bootstrap
    error bar, and the rate bound, switching to the N^(-1/6) fallback when
    sigma_N is small. Degenerate rows (sigma_N ~ 0) are excluded from the
    rate fits.
    """
    if isinstance(config, dict):
        config = StudyConfig(config, scenario="sequential")
    if config.scenario != "sequential":
        raise ConfigError("rate study needs a sequential config")
    f = config.build_observable()
    if f.d != 1:
        raise ConfigError("rate study uses a univariate observable")
    maps = config.build_maps()
    schedule = MapSchedule.cycled(maps, config.n_grid[-1])
    initial = config.build_initial()
    rho0 = density_from_function(initial.density, config.grid)
    constants, theta_fit, lag = _resolve_constants(config, schedule, f, initial)
    c_tilde = circle_C_tilde(constants.c2, constants.c4, f.sup, f.norm_lip,
                             constants.b0, constants.theta)
    profile = variance_profile(schedule, f, config.n_grid, lag, rho0)

    rows = []
    fit_points = []
    for n in config.n_grid:
        sigma_sq = max(float(profile[n][0, 0]), 0.0)
        sigma = math.sqrt(sigma_sq)
        kc = choose_K(n, constants.theta)
        degenerate = sigma < 1e-8
        w = sample_W(schedule, f, n, config.samples, config.seed, initial,
                     config.grid, labels=("rate", n))
        samples = w.component(0)
        distance = w1_empirical_vs_normal(samples, sigma)
        stderr = _bootstrap_w1(samples, sigma, config.seed, ("rate-boot", n),
                               config.bootstrap)
        bound_sixth = sixth_root_bound(c_tilde, n, constants.theta).value
        if degenerate:
            bound_variance = None
            low_sigma = True
            bound = bound_min = bound_sixth
        else:
            bound_variance = circle_rate_bound(c_tilde, n, constants.theta,
                                               c0=sigma, p=0.0).value
            low_sigma = sigma < n ** (-1.0 / 6.0)
            bound = bound_sixth if low_sigma else bound_variance
            bound_min = min(bound_variance, bound_sixth)
            if distance > 0.0:
                fit_points.append((n, distance))
        rows.append({"n": n, "sigma_sq": sigma_sq, "sigma": sigma,
                     "k": kc.k, "k_valid": kc.valid, "distance": distance,
                     "stderr": stderr, "bound": bound,
                     "bound_variance": bound_variance,
                     "bound_sixth": bound_sixth, "bound_min": bound_min,
                     "low_sigma": low_sigma, "degenerate": degenerate})

    fits = {}
    fit_degenerate = len(fit_points) < 3
    if not fit_degenerate:
        fits["rate"] = fit_rate(fit_points).to_dict()
        fits["rate_log_corrected"] = fit_rate(fit_points, True).to_dict()

    metadata = {
        "scenario": "sequential", "seed": config.seed,
        "samples": config.samples, "grid": config.grid, "lag": lag,
        "bootstrap": config.bootstrap, "theta": constants.theta,
        "c2": constants.c2, "c4": constants.c4, "b0": constants.b0,
        "d0": constants.d0, "l0": constants.l0,
        "constants_source": constants.source, "c_tilde": c_tilde,
        "observable_sup": f.sup, "observable_lip": f.lip,
        "schedule": schedule.fingerprint(), "fit_degenerate": fit_degenerate,
        "config": config.echo(),
    }
    if theta_fit is not None:
        metadata["theta_hat"] = theta_fit.theta
        metadata["theta_fit_slope"] = theta_fit.slope
        r2_vals = [r for r in theta_fit.pair_r2 if not math.isnan(r)]
        if r2_vals:
            metadata["theta_fit_r2_min"] = min(r2_vals)
    return StudyReport("rate", metadata, _RATE_COLUMNS, rows, fits)


def _trig_catalog(d):
    """Axis, all-ones, and alternating-sign frequency vectors, shift 0."""
    vs = [tuple(1.0 if i == a else 0.0 for i in range(d)) for a in range(d)]
    vs.append((1.0,) * d)
    if d >= 2:
        vs.append(tuple(1.0 if i % 2 == 0 else -1.0 for i in range(d)))
    return [TrigTestFunction(v, 0.0) for v in vs]


_QDS_COLUMNS = ["n", "t", "sigma_nt_sq", "sigma_t_sq", "refine_error",
                "variance_gap", "min_eig", "distance", "stderr"]


def run_qds_study(config):
    """Quasistatic study: variance convergence and distances for xi_n(t).

    Per (n, t): the exact Cov(xi_n(t)) along the row schedule, the
    integrated curve variance sigma_t^2 by quadrature, their gap, and (when
    sampling is enabled and the curve variance does not vanish) the
    distance of xi_n(t) to the matching normal law: W1 for univariate
    observables, the worst smooth-test gap for multivariate ones.
    """
    if isinstance(config, dict):
        config = StudyConfig(config, scenario="quasistatic")
    if config.scenario != "quasistatic":
        raise ConfigError("qds study needs a quasistatic config")
    f = config.build_observable()
    curve = config.build_curve()
    initial = config.build_initial()
    rho0 = density_from_function(initial.density, config.grid)
    lag = config.lag
    if lag is None:
        lag = max(1, math.ceil(30.0 / math.log(curve.lambda_min)))

    curve_var = {t: sigma_sq_curve(curve, f, t, quad_points=config.quad_points,
                                   M=config.grid)
                 for t in config.t_grid}
    sigma_zero = all(vc.value < 1e-10 for vc in curve_var.values())
    sample_distances = config.samples > 0 and not sigma_zero
    catalog = _trig_catalog(f.d) if f.d > 1 else None

    rows = []
    for n in config.n_grid:
        row_schedule = MapSchedule.quasistatic(curve, n)
        for t in config.t_grid:
            vc = curve_var[t]
            mat_nt = xi_variance(row_schedule, f, t, rho0, lag=lag)
            gap = float(np.abs(mat_nt - vc.matrix).max())
            row = {"n": n, "t": t, "sigma_nt_sq": float(mat_nt[0, 0]),
                   "sigma_t_sq": vc.value, "refine_error": vc.refine_error,
                   "variance_gap": gap, "min_eig": None,
                   "distance": None, "stderr": None}
            if sample_distances:
                xi = xi_samples(row_schedule, f, t, config.samples, config.seed,
                                initial, config.grid, labels=("qds", n, t))
                if f.d == 1:
                    sig_t = math.sqrt(max(vc.value, 0.0))
                    row["distance"] = w1_empirical_vs_normal(xi.component(0), sig_t)
                    row["stderr"] = _bootstrap_w1(xi.component(0), sig_t,
                                                  config.seed, ("qds-boot", n, t),
                                                  config.bootstrap)
                else:
                    min_eig = float(np.linalg.eigvalsh(mat_nt).min())
                    row["min_eig"] = min_eig
                    if min_eig <= 1e-10:
                        raise NumericalError(
                            "Cov(xi_n(t)) is not positive definite at n=%d t=%g"
                            % (n, t))
                    dists = [smooth_test_distance(xi.values, vc.matrix, h)
                             for h in catalog]
                    dist, err = max(dists, key=lambda pair: pair[0])
                    row["distance"] = dist
                    row["stderr"] = err
            rows.append(row)

    fits = {}
    for t in config.t_grid:
        label = "t=%s" % repr(float(t))
        gap_pts = [(r["n"], r["variance_gap"]) for r in rows
                   if r["t"] == t and r["variance_gap"] > 0.0]
        if len(gap_pts) >= 3:
            fits["variance_gap_%s" % label] = fit_rate(gap_pts).to_dict()
        dist_pts = [(r["n"], r["distance"]) for r in rows
                    if r["t"] == t and r.get("distance")]
        if len(dist_pts) >= 3:
            fits["distance_%s" % label] = fit_rate(dist_pts).to_dict()

    metadata = {
        "scenario": "quasistatic", "seed": config.seed,
        "samples": config.samples, "grid": config.grid, "lag": lag,
        "quad_points": config.quad_points, "eta": curve.eta, "c_h": curve.c_h,
        "lambda_min": curve.lambda_min, "sigma_zero": sigma_zero,
        "observable_d": f.d, "config": config.echo(),
    }
    return StudyReport("qds", metadata, _QDS_COLUMNS, rows, fits)


_RDS_COLUMNS = ["realization", "n", "sigma_sq", "sigma_hat_sq",
                "distance", "stderr"]


def run_rds_study(config):
    """Random-schedule study: per-realization variances and distances.

    Draws R independent map sequences from the driver. Per realization:
    sigma_N^2 along the N-grid, the stationary series estimate
    sigma_hat^2(omega) from post-burn gap averages, and W1 distances of
    W_N samples against N(0, sigma_hat^2) at the smallest and largest N.
    Aggregates report the stability of E[sigma_N^2] across the last two
    grid points and the spread of final distances.
    """
    if isinstance(config, dict):
        config = StudyConfig(config, scenario="random")
    if config.scenario != "random":
        raise ConfigError("rds study needs a random config")
    f = config.build_observable()
    if f.d != 1:
        raise ConfigError("rds study uses a univariate observable")
    driver = config.build_driver()
    initial = config.build_initial()
    rho0 = density_from_function(initial.density, config.grid)
    lam_min = min(map_bounds(m)[0] for m in driver.maps)
    lag = config.lag
    if lag is None:
        lag = max(1, math.ceil(10.0 / math.log(lam_min)))
    n_max = config.n_grid[-1]
    if n_max <= 2 * lag:
        raise ConfigError("largest N must exceed twice the lag (%d) for the "
                          "series estimate" % lag)
    distance_ns = {config.n_grid[0], config.n_grid[-1]}

    rows = []
    per_real_sigma = {}
    for real in range(config.realizations):
        sched = MapSchedule.random(driver, config.seed, n_max, realization=real)
        profile = variance_profile(sched, f, config.n_grid, lag, rho0)
        _, series = correlation_profile(sched, f, n_max, lag, rho0, burn=lag)
        sig_hat_sq = max(float(series[0, 0]), 0.0)
        sig_hat = math.sqrt(sig_hat_sq)
        per_real_sigma[real] = {n: float(profile[n][0, 0]) for n in config.n_grid}
        for n in config.n_grid:
            row = {"realization": real, "n": n,
                   "sigma_sq": per_real_sigma[real][n],
                   "sigma_hat_sq": sig_hat_sq, "distance": None, "stderr": None}
            if n in distance_ns:
                w = sample_W(sched, f, n, config.samples, config.seed, initial,
                             config.grid, labels=("rds", real, n))
                row["distance"] = w1_empirical_vs_normal(w.component(0), sig_hat)
                row["stderr"] = _bootstrap_w1(w.component(0), sig_hat,
                                              config.seed, ("rds-boot", real, n),
                                              config.bootstrap)
            rows.append(row)

    metadata = {
        "scenario": "random", "seed": config.seed, "samples": config.samples,
        "grid": config.grid, "lag": lag, "realizations": config.realizations,
        "driver_kind": driver.kind, "driver_gamma": driver.gamma,
        "driver_states": len(driver.maps), "config": config.echo(),
    }
    if len(config.n_grid) >= 2 and config.realizations >= 2:
        n_hi, n_lo = config.n_grid[-1], config.n_grid[-2]
        diffs = np.array([per_real_sigma[r][n_hi] - per_real_sigma[r][n_lo]
                          for r in range(config.realizations)])
        gap = abs(float(diffs.mean()))
        se = float(diffs.std(ddof=1) / math.sqrt(diffs.size))
        metadata["stability_gap"] = gap
        metadata["stability_stderr"] = se
        metadata["stable"] = bool(gap < 3.0 * se) if se > 0.0 else True
    first_n, last_n = config.n_grid[0], config.n_grid[-1]
    first = [r["distance"] for r in rows if r["n"] == first_n
             and r["distance"] is not None]
    last = [r["distance"] for r in rows if r["n"] == last_n
            and r["distance"] is not None]
    if first and last and last_n > first_n:
        median_first = float(np.median(first))
        metadata["median_first_distance"] = median_first
        metadata["final_below_first_median"] = bool(
            all(dv < median_first for dv in last))
    return StudyReport("rds", metadata, _RDS_COLUMNS, rows, fits=None)


DEFAULT_CONFIGS = {
    "rate": {
        "scenario": "sequential",
        "maps": [{"degree": 3, "amplitude": 0.08, "phase": 0.0},
                 {"degree": 2, "amplitude": 0.05, "phase": 0.5}],
        "observable": [[{"kind": "cos", "mode": 1, "coeff": 1.0}]],
        "epsilon": 0.3,
        "n_grid": [64, 128, 256, 512],
        "samples": 4000,
        "grid": 1024,
        "seed": 1,
    },
    "qds": {
        "scenario": "quasistatic",
        "curve": {"degree": 3,
                  "amplitude": {"base": 0.03, "scale": 0.05, "power": 0.8},
                  "phase": {"base": 0.0, "scale": 0.0, "power": 1.0},
                  "eta": 0.8, "c_h": 0.45},
        "observable": [[{"kind": "cos", "mode": 1, "coeff": 1.0}]],
        "epsilon": 0.25,
        "n_grid": [32, 64, 128, 256],
        "t_grid": [0.5, 1.0],
        "samples": 0,
        "grid": 1024,
        "quad_points": 65,
        "seed": 1,
    },
    "rds": {
        "scenario": "random",
        "driver": "default",
        "observable": [[{"kind": "cos", "mode": 1, "coeff": 1.0}]],
        "epsilon": 0.2,
        "n_grid": [64, 128, 256],
        "samples": 2000,
        "grid": 1024,
        "seed": 1,
        "realizations": 4,
    },
}
