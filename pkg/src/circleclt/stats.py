"""Observables, correlation sums, and variance estimates along schedules.

Observation times are 0-indexed: X_0 is drawn from the initial density and
X_i = T_i(X_{i-1}) uses the schedule's i-th map. The centered Birkhoff sum
is W_N = N^{-1/2} sum_{i<N} (f(X_i) - E f(X_i)), and the quasistatic
interpolation process is

    xi_n(t) = n^{-1/2} sum_{i < floor(nt)} fbar_i  +  {nt} n^{-1/2} fbar_{floor(nt)}.

All expectations are computed from the transfer-operator chain on the grid;
Monte Carlo enters only through the W / xi samplers.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .dynamics import map_bounds, map_eval, sample_initial_many
from .errors import ConfigError, NumericalError
from .streams import stream
from .transfer import (GridDensity, density_from_function, grid_points,
                       invariant_density, pushforward_density,
                       transfer_apply, transfer_apply_signed)

TWO_PI = 2.0 * math.pi

_KINDS = ("cos", "sin", "const")


@dataclass(frozen=True)
class Observable:
    """A vector observable with trigonometric-polynomial components.

    components is a tuple over coordinates; each coordinate is a tuple of
    terms (kind, mode, coeff) meaning coeff*cos(2*pi*mode*x),
    coeff*sin(2*pi*mode*x), or the constant coeff. The declared sup and
    Lipschitz constants are the coefficient sums; they are checked against
    a fine grid at construction.
    """

    components: tuple

    def __post_init__(self):
        comps = []
        for terms in self.components:
            clean = []
            for kind, mode, coeff in terms:
                if kind not in _KINDS:
                    raise ConfigError("unknown term kind %r" % (kind,))
                mode = int(mode)
                if kind != "const" and mode < 1:
                    raise ConfigError("trigonometric mode must be >= 1, got %d" % mode)
                clean.append((kind, mode if kind != "const" else 0, float(coeff)))
            if not clean:
                raise ConfigError("observable component has no terms")
            comps.append(tuple(clean))
        if not comps:
            raise ConfigError("observable has no components")
        object.__setattr__(self, "components", tuple(comps))
        x = np.arange(10001) / 10000.0
        vals = self.matrix(x)
        sup_meas = np.abs(vals).max(axis=1)
        lip_meas = (np.abs(np.diff(vals, axis=1)).max(axis=1) * 10000.0
                    if vals.shape[1] > 1 else np.zeros(self.d))
        for a in range(self.d):
            if sup_meas[a] > self.component_sup(a) + 1e-6:
                raise ConfigError("declared sup norm too small for component %d" % a)
            if lip_meas[a] > self.component_lip(a) + 1e-6:
                raise ConfigError("declared Lipschitz constant too small for component %d" % a)

    @classmethod
    def cos(cls, mode=1, coeff=1.0):
        return cls(((("cos", int(mode), float(coeff)),),))

    @classmethod
    def sin(cls, mode=1, coeff=1.0):
        return cls(((("sin", int(mode), float(coeff)),),))

    @classmethod
    def const(cls, value):
        return cls(((("const", 0, float(value)),),))

    @classmethod
    def from_terms(cls, terms):
        """One component from a list of (kind, mode, coeff) terms."""
        return cls((tuple(terms),))

    @classmethod
    def multi(cls, *observables):
        """Stack the components of several observables into one vector."""
        comps = []
        for ob in observables:
            comps.extend(ob.components)
        return cls(tuple(comps))

    @property
    def d(self):
        return len(self.components)

    def component_values(self, alpha, x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        for kind, mode, coeff in self.components[alpha]:
            if kind == "cos":
                out += coeff * np.cos(TWO_PI * mode * x)
            elif kind == "sin":
                out += coeff * np.sin(TWO_PI * mode * x)
            else:
                out += coeff
        return out

    def matrix(self, x):
        """Values of all components at the points x, shape (d, len(x))."""
        return np.stack([self.component_values(a, x) for a in range(self.d)])

    def component_sup(self, alpha):
        return sum(abs(c) for _, _, c in self.components[alpha])

    def component_lip(self, alpha):
        return sum(abs(c) * TWO_PI * m for k, m, c in self.components[alpha]
                   if k != "const")

    @property
    def sup(self):
        return max(self.component_sup(a) for a in range(self.d))

    @property
    def lip(self):
        return max(self.component_lip(a) for a in range(self.d))

    @property
    def norm_lip(self):
        """The Lipschitz norm sup + Lip used by the bound formulas."""
        return self.sup + self.lip


def _check_matrix(mat, tol=1e-8):
    """Symmetrize tiny asymmetry and reject matrices that are not PSD up to tol."""
    mat = np.asarray(mat, float)
    if np.abs(mat - mat.T).max() > 1e-8:
        raise NumericalError("covariance matrix is not symmetric")
    mat = 0.5 * (mat + mat.T)
    if mat.shape[0] and np.linalg.eigvalsh(mat).min() < -tol:
        raise NumericalError("covariance matrix has an eigenvalue below -%g" % tol)
    return mat


def _clamp_variance(value, tol=1e-8):
    if value < -tol:
        raise NumericalError("variance estimate %.3g is negative beyond tolerance" % value)
    return max(value, 0.0)


def mean_at_time(schedule, f, i, rho0):
    """E f(X_i) as a length-d array, from the pushed initial density."""
    rho = pushforward_density(schedule, rho0, i)
    return (f.matrix(rho.x) * rho.values).mean(axis=1)


def means_along(schedule, f, rho0, count):
    """E f(X_i) for i = 0..count-1 from a single transfer chain, shape (count, d)."""
    M = rho0.M
    F = f.matrix(grid_points(M))
    out = np.empty((count, f.d))
    rho = rho0
    for i in range(count):
        out[i] = (F * rho.values).mean(axis=1)
        if i + 1 < count:
            rho = transfer_apply(schedule.map_at(i + 1), rho)
    return out


def pair_correlation(schedule, f, alpha, beta, i, j, rho0):
    """Cov(f_alpha(X_i), f_beta(X_j)) for 0 <= i <= j via a signed push.

    The centered measure (f_alpha - E f_alpha(X_i)) rho_i is pushed from
    time i to time j without renormalization and integrated against the
    component beta centered at time j.
    """
    if not 0 <= i <= j:
        raise ConfigError("need 0 <= i <= j, got i=%d j=%d" % (i, j))
    rho = pushforward_density(schedule, rho0, i)
    x = rho.x
    fa = f.component_values(alpha, x)
    s = (fa - (fa * rho.values).mean()) * rho.values
    rho_j = rho
    for step in range(i + 1, j + 1):
        m = schedule.map_at(step)
        s = transfer_apply_signed(m, s)
        rho_j = transfer_apply(m, rho_j)
    fb = f.component_values(beta, x)
    return float(((fb - (fb * rho_j.values).mean()) * s).mean())


def quadruple_correlation(schedule, f, alphas, times, rho0):
    """Mixed centered moment E prod_k (f_{alpha_k}(X_{t_k}) - E f_{alpha_k}(X_{t_k})).

    times must be nondecreasing; repeats are allowed. Works for any number
    of factors, with four being the case the constant calibration uses.
    """
    times = [int(t) for t in times]
    if len(alphas) != len(times) or not times:
        raise ConfigError("alphas and times must be equal-length and nonempty")
    if any(b < a for a, b in zip(times, times[1:])) or times[0] < 0:
        raise ConfigError("times must be nondecreasing and >= 0")
    x = rho0.x
    rho = rho0.values
    s = None
    cur = 0
    for a, t in zip(alphas, times):
        for step in range(cur + 1, t + 1):
            m = schedule.map_at(step)
            rho = transfer_apply(m, GridDensity(rho)).values
            if s is not None:
                s = transfer_apply_signed(m, s)
        cur = t
        fa = f.component_values(a, x)
        fc = fa - (fa * rho).mean()
        s = fc * rho if s is None else fc * s
    return float(s.mean())


def _correlation_sweep(schedule, f, horizon, lag, rho0, weights=None,
                       checkpoints=(), profile_burn=None):
    """Accumulate S = sum_{i,j < horizon, |i-j| <= lag} w_i w_j E fhat(X_i) fhat(X_j)^T.

    Walks one renormalized density chain and a ring buffer of signed
    centered measures, pushing the whole buffer in one batched operator
    application per step. Returns (S, partial sums keyed by the requested
    checkpoint horizons, per-gap profile or None).

    The profile, when profile_burn is given, holds the sums and counts of
    the gap-g covariance matrices over pairs whose earlier index is at
    least profile_burn; it feeds the stationary series estimate for random
    schedules.
    """
    M = rho0.M
    d = f.d
    F = f.matrix(grid_points(M))
    if weights is None:
        w = np.ones(horizon)
    else:
        w = np.asarray(weights, float)
        if w.shape != (horizon,):
            raise ConfigError("weights must have length %d" % horizon)
    cpset = set(int(c) for c in checkpoints)
    partials = {}
    S = np.zeros((d, d))
    psums = np.zeros((lag + 1, d, d)) if profile_burn is not None else None
    pcounts = np.zeros(lag + 1) if profile_burn is not None else None
    rho = rho0.values
    buf = np.zeros((0, d, M))
    wbuf = np.zeros(0)
    for j in range(horizon):
        Fc = F - ((F * rho).mean(axis=1))[:, None]
        Gjj = (Fc * rho) @ Fc.T / M
        S += w[j] ** 2 * Gjj
        if buf.shape[0]:
            G_all = buf @ Fc.T / M
            T = np.tensordot(wbuf, G_all, axes=(0, 0))
            S += w[j] * (T + T.T)
        if profile_burn is not None:
            if j >= profile_burn:
                psums[0] += Gjj
                pcounts[0] += 1
            nv = min(buf.shape[0], j - profile_burn)
            if nv > 0:
                psums[1:nv + 1] += G_all[:nv]
                pcounts[1:nv + 1] += 1
        if (j + 1) in cpset:
            partials[j + 1] = S.copy()
        if j + 1 < horizon:
            entry = (Fc * rho)[None]
            buf = np.concatenate([entry, buf], axis=0)[:lag] if lag > 0 else buf
            wbuf = np.concatenate([[w[j]], wbuf])[:lag] if lag > 0 else wbuf
            m = schedule.map_at(j + 1)
            rho = transfer_apply(m, GridDensity(rho)).values
            if buf.shape[0]:
                buf = transfer_apply_signed(m, buf.reshape(-1, M)).reshape(buf.shape)
    profile = (psums, pcounts) if profile_burn is not None else None
    return S, partials, profile


class CovarianceResult:
    """Covariance matrix of W_N with the lag cutoff and its geometric tail bound."""

    def __init__(self, matrix, n, lag, tail=None):
        self.matrix = _check_matrix(matrix)
        self.n = n
        self.lag = lag
        self.tail = tail

    @property
    def sigma_sq(self):
        return _clamp_variance(float(self.matrix[0, 0]))


def covariance_matrix(schedule, f, n_steps, lag, rho0, constants=None):
    """Sigma_N = Cov(W_N) with cross terms truncated at |i - j| <= lag.

    When decay constants are supplied the neglected tail is reported as
    2*C2*theta**(lag+1)/(1 - theta) per matrix entry.
    """
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    S, _, _ = _correlation_sweep(schedule, f, n_steps, lag, rho0)
    tail = None
    if constants is not None:
        tail = 2.0 * constants.c2 * constants.theta ** (lag + 1) / (1.0 - constants.theta)
    return CovarianceResult(S / n_steps, n_steps, lag, tail)


def variance_profile(schedule, f, n_grid, lag, rho0):
    """Cov(W_N) for every N in n_grid from a single sweep, keyed by N."""
    n_grid = sorted(int(n) for n in n_grid)
    if n_grid[0] < 1:
        raise ConfigError("variance profile horizons must be >= 1")
    _, partials, _ = _correlation_sweep(schedule, f, n_grid[-1], lag, rho0,
                                        checkpoints=n_grid)
    return {n: _check_matrix(partials[n] / n) for n in n_grid}


def correlation_profile(schedule, f, horizon, lag, rho0, burn=0):
    """Average gap-g covariance matrices over the post-burn window.

    Returns (gap_matrices with shape (lag+1, d, d), series) where series is
    the stationary long-run variance estimate gap0 + 2 * sum of the rest.
    """
    _, _, prof = _correlation_sweep(schedule, f, horizon, lag, rho0,
                                    profile_burn=burn)
    psums, pcounts = prof
    if np.any(pcounts == 0):
        raise ConfigError(
            "horizon %d leaves empty gap bins (burn=%d, lag=%d)" % (horizon, burn, lag)
        )
    avg = psums / pcounts[:, None, None]
    series = avg[0] + 2.0 * avg[1:].sum(axis=0)
    return avg, _check_matrix(series, tol=np.inf)


def _fractional_split(n, t):
    """floor(nt) and {nt} with a guard against float dust at integer nt."""
    nt = n * t
    flo = int(math.floor(nt + 1e-12))
    flo = min(flo, n)
    frac = max(nt - flo, 0.0)
    if frac < 1e-12:
        frac = 0.0
    return flo, frac


def xi_weights(n, t):
    """Unnormalized weights of xi_n(t): ones up to floor(nt), then {nt}."""
    if not 0.0 <= t <= 1.0:
        raise ConfigError("t must lie in [0, 1], got %r" % (t,))
    flo, frac = _fractional_split(n, t)
    w = np.ones(flo + (1 if frac > 0.0 else 0))
    if frac > 0.0:
        w[-1] = frac
    return w


def xi_variance(schedule, f, t, rho0, lag=None):
    """Cov(xi_n(t)) for the row schedule, exact up to the requested lag.

    With lag=None every pair enters the sum. The fractional last weight is
    included exactly. Returns a (d, d) matrix.
    """
    n = schedule.horizon
    w = xi_weights(n, t)
    if w.size == 0:
        return np.zeros((f.d, f.d))
    lag = w.size - 1 if lag is None else min(int(lag), max(w.size - 1, 0))
    S, _, _ = _correlation_sweep(schedule, f, w.size, lag, rho0, weights=w)
    return _check_matrix(S / n)


class WSamples:
    """Monte Carlo draws of W_N (or xi_n(t)), shape (m, d)."""

    def __init__(self, values, n, f):
        values = np.asarray(values, float)
        self.values = values
        self.n = int(n)
        bound = 2.0 * math.sqrt(self.n) * f.sup + 1e-9
        if np.abs(values).max(initial=0.0) > bound:
            raise NumericalError("sample exceeds the a priori bound 2*sqrt(N)*sup")

    @property
    def m(self):
        return self.values.shape[0]

    def component(self, alpha=0):
        return self.values[:, alpha]


def _weighted_sum_samples(schedule, f, weights, scale, m_samples, seed, initial,
                          M=4096, labels=()):
    """Monte Carlo draws of scale * sum_i weights[i] * (f(X_i) - E f(X_i)).

    The centering means come from the transfer chain on the grid, so the
    sampler and the variance formulas share one definition of the mean.
    """
    if m_samples < 1:
        raise ConfigError("need at least one sample")
    horizon = len(weights)
    rng = stream(seed, "w-samples", *labels, "x0")
    x = sample_initial_many(initial, rng, m_samples)
    out = np.zeros((m_samples, f.d))
    if horizon == 0:
        return out
    rho0 = density_from_function(initial.density, M)
    means = means_along(schedule, f, rho0, horizon)
    for i in range(horizon):
        for a in range(f.d):
            out[:, a] += weights[i] * (f.component_values(a, x) - means[i, a])
        if i + 1 < horizon:
            x = map_eval(schedule.map_at(i + 1), x)
    out *= scale
    return out


def sample_W(schedule, f, n_steps, m_samples, seed, initial, M=4096, labels=()):
    """m_samples Monte Carlo draws of W_N with N = n_steps."""
    if n_steps < 1 or n_steps > schedule.horizon:
        raise ConfigError("n_steps must lie in 1..horizon")
    w = np.ones(n_steps)
    vals = _weighted_sum_samples(schedule, f, w, 1.0 / math.sqrt(n_steps),
                                 m_samples, seed, initial, M, labels)
    return WSamples(vals, n_steps, f)


def xi_samples(schedule, f, t, m_samples, seed, initial, M=4096, labels=()):
    """m_samples Monte Carlo draws of xi_n(t) on the row schedule (n = horizon)."""
    n = schedule.horizon
    w = xi_weights(n, t)
    vals = _weighted_sum_samples(schedule, f, w, 1.0 / math.sqrt(n),
                                 m_samples, seed, initial, M, labels)
    return WSamples(vals, n, f)


class SigmaHat:
    """Stationary long-run variance sigma_hat^2 of a single map.

    value is the (0,0) entry, matrix the full d x d version, lag the last
    gap summed, and tail the geometric bound on the dropped remainder.
    """

    def __init__(self, value, matrix, lag, tail):
        self.matrix = _check_matrix(matrix)
        self.value = _clamp_variance(value)
        self.lag = lag
        self.tail = tail


def _series_decayed(first_mag, last_mag, tol):
    """Whether a truncated correlation series can be trusted: the last term
    is below tol or at least halved relative to the first."""
    if last_mag < tol or first_mag <= 0.0:
        return True
    return last_mag <= 0.5 * first_mag


def sigma_hat_sq(m, f, tol=1e-9, lag_max=128, M=4096, theta=None):
    """Green-Kubo variance of the map m at its invariant density.

    sigma_hat^2 = mu(fhat fhat^T) + sum_{k>=1} (G_k + G_k^T) with
    G_k = mu(fhat . fhat o T^k); the sum stops once k >= 8 and two
    consecutive terms fall below tol (exact cancellations can silence a few
    early lags, as for trigonometric observables under the doubling map),
    or at lag_max provided the series has visibly decayed. The reported
    tail bounds the dropped remainder geometrically with ratio sqrt(theta),
    theta defaulting to 1/lambda(m).
    """
    rho = invariant_density(m, M=M)
    F = f.matrix(rho.x)
    Fc = F - ((F * rho.values).mean(axis=1))[:, None]
    total = (Fc * rho.values) @ Fc.T / M
    s = Fc * rho.values
    first_mag = None
    last_mag = 0.0
    below = 0
    lag = 0
    for k in range(1, lag_max + 1):
        s = transfer_apply_signed(m, s)
        Gk = s @ Fc.T / M
        term = Gk + Gk.T
        mag = float(np.abs(term).max())
        if first_mag is None:
            first_mag = mag
        total += term
        last_mag = mag
        lag = k
        below = below + 1 if mag < tol else 0
        if below >= 2 and k >= 8:
            break
    else:
        if not _series_decayed(first_mag or 0.0, last_mag, tol):
            raise NumericalError(
                "correlation series shows no decay after %d lags" % lag_max
            )
    th = theta if theta is not None else 1.0 / map_bounds(m)[0]
    if not 0.0 < th < 1.0:
        raise ConfigError("tail ratio theta must lie in (0, 1), got %r" % (th,))
    r = math.sqrt(th)
    tail = last_mag * r / (1.0 - r)
    return SigmaHat(float(total[0, 0]), total, lag, tail)


class VarianceCurve:
    """sigma_t^2 = int_0^t sigma_hat_s^2 ds with a quadrature refinement error."""

    def __init__(self, t, value, matrix, refine_error):
        self.t = t
        self.matrix = _check_matrix(matrix)
        self.value = _clamp_variance(value)
        self.refine_error = refine_error


def sigma_sq_curve(curve, f, t, quad_points=33, M=4096, tol=1e-9,
                   lag_max=128, theta=None):
    """Integrated stationary variance of a quasistatic curve up to time t.

    Simpson quadrature over an odd number of nodes on [0, t]; the
    refinement error compares against the half-resolution node set when
    the node count allows it (quad_points = 1 mod 4).
    """
    if not 0.0 <= t <= 1.0:
        raise ConfigError("t must lie in [0, 1], got %r" % (t,))
    if t == 0.0:
        return VarianceCurve(0.0, 0.0, np.zeros((f.d, f.d)), 0.0)
    q = max(int(quad_points), 3)
    if q % 2 == 0:
        q += 1
    ts = np.linspace(0.0, t, q)
    mats = np.stack([
        sigma_hat_sq(curve.map_at(s), f, tol=tol, lag_max=lag_max, M=M,
                     theta=theta).matrix
        for s in ts
    ])
    full = simpson(mats, x=ts, axis=0)
    refine = float("nan")
    if (q - 1) % 4 == 0:
        half = simpson(mats[::2], x=ts[::2], axis=0)
        refine = float(np.abs(full - half).max())
    return VarianceCurve(t, float(full[0, 0]), full, refine)


def self_normalize(values, s_n=None):
    """Divide samples by s_n (default: root mean square). Returns (scaled, degenerate).

    A vanishing s_n flags the samples as degenerate and returns zeros
    instead of dividing; a negative s_n is rejected.
    """
    v = np.asarray(values, float)
    if s_n is None:
        s_n = float(np.sqrt(np.mean(v ** 2))) if v.size else 0.0
    if s_n < 0.0:
        raise ConfigError("s_n must be >= 0, got %r" % (s_n,))
    if s_n < 1e-12:
        return np.zeros_like(v), True
    return v / s_n, False
