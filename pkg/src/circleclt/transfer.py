"""Transfer operators of expanding circle maps on uniform grid functions.

Densities live on the uniform grid x_j = j/M; integrals over S^1 are grid
means (the trapezoid rule on the circle). The transfer operator acts by
collocation: (L g)(x_j) sums g(y)/T'(y) over the preimages y of x_j, with
g(y) read off by linear interpolation between neighbouring grid nodes.
This keeps pushforwards cheap (two gathers and a weighted sum per branch)
and exact on densities the interpolation represents well.
"""

import functools

import numpy as np

from .dynamics import _solve_lift, circle_dist, map_deriv, map_eval
from .errors import ConfigError, NumericalError


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def grid_points(M):
    """The collocation nodes x_j = j/M."""
    return np.arange(M) / M


class GridDensity:
    """A probability density sampled on the uniform grid x_j = j/M.

    M must be a power of two (>= 2). Values are clipped at zero (tiny
    negative interpolation overshoot is tolerated up to -1e-12) and
    renormalized so the grid mean is exactly 1.
    """

    __slots__ = ("values",)

    def __init__(self, values, renormalize=True):
        v = np.array(values, dtype=float)
        if v.ndim != 1 or not _is_power_of_two(v.size) or v.size < 2:
            raise ConfigError("density grid size must be a power of two >= 2")
        if not np.all(np.isfinite(v)):
            raise NumericalError("density contains non-finite values")
        if v.min() < -1e-12:
            raise ConfigError("density has negative values (min %.3g)" % v.min())
        v = np.clip(v, 0.0, None)
        mass = v.mean()
        if renormalize:
            if mass <= 0.0:
                raise ConfigError("density has zero mass")
            v = v / mass
        elif abs(mass - 1.0) > 1e-10:
            raise ConfigError("density mass %.12g is not 1 within 1e-10" % mass)
        v.flags.writeable = False
        self.values = v

    @property
    def M(self):
        return self.values.size

    @property
    def x(self):
        return grid_points(self.M)


def uniform_density(M=4096):
    return GridDensity(np.ones(M))

def density_from_function(fn, M=4096):
    return GridDensity(fn(grid_points(M)))


@functools.lru_cache(maxsize=256)
def _branch_tables(m, M):
    """Interpolation tables for the collocation transfer operator.

    For each branch b and node j: y = preimage of x_j on branch b,
    i0/i1 bracket y on the grid, frac is the interpolation weight, and
    wt = 1/T'(y). Shapes are (degree, M).
    """
    if not _is_power_of_two(M) or M < 2:
        raise ConfigError("grid size must be a power of two >= 2")
    x = grid_points(M)
    f0 = m.amplitude * np.sin(2 * np.pi * m.phase)
    base = x + np.ceil(f0 - x)
    targets = base[None, :] + np.arange(m.degree, dtype=float)[:, None]
    y = _solve_lift(m, targets)
    res = circle_dist(map_eval(m, y), x[None, :])
    if res.max() > 1e-12:
        raise NumericalError("branch table residual %.3g exceeds 1e-12" % res.max())
    pos = y * M
    i0 = np.floor(pos)
    frac = pos - i0
    i0 = i0.astype(np.int32) & (M - 1)
    i1 = (i0 + 1) & (M - 1)
    wt = 1.0 / map_deriv(m, y)
    for arr in (i0, i1, frac, wt):
        arr.flags.writeable = False
    return i0, i1, frac, wt


def transfer_apply_signed(m, values):
    """Apply the transfer operator of m to grid functions, no renormalization.

    values may have shape (M,) or (..., M); the operator acts on the last
    axis. Signed inputs are allowed: this is the form used for pushing
    centered (zero-mass) measures in correlation sums.
    """
    values = np.asarray(values, float)
    i0, i1, frac, wt = _branch_tables(m, values.shape[-1])
    g = values[..., i0] * (1.0 - frac) + values[..., i1] * frac
    return (g * wt).sum(axis=-2)


def transfer_apply(m, density):
    """Push a probability density through the transfer operator of m.

    The result is renormalized to mean 1; collocation plus interpolation
    conserves mass only up to the interpolation error, and renormalizing
    after every push keeps long compositions stochastic.
    """
    return GridDensity(transfer_apply_signed(m, density.values))


def pushforward_density(schedule, density, n_steps):
    """Push a density through the first n_steps maps of a schedule."""
    if n_steps > schedule.horizon:
        raise ConfigError(
            "pushforward length %d exceeds schedule horizon %d"
            % (n_steps, schedule.horizon)
        )
    rho = density
    for i in range(1, n_steps + 1):
        rho = transfer_apply(schedule.map_at(i), rho)
    return rho


@functools.lru_cache(maxsize=64)
def invariant_density(m, M=4096, tol=1e-12, max_iter=10000):
    """Fixed point of the transfer operator by power iteration from uniform.

    Stops when the L^1 step between successive iterates falls below tol and
    the fixed-point residual ||L rho - rho||_1 is below tol; raises after
    max_iter sweeps without convergence.
    """
    rho = uniform_density(M)
    for _ in range(max_iter):
        nxt = transfer_apply(m, rho)
        step = np.abs(nxt.values - rho.values).mean()
        rho = nxt
        if step < tol:
            res = np.abs(transfer_apply(m, rho).values - rho.values).mean()
            if res < tol:
                return rho
    raise NumericalError(
        "invariant density power iteration did not reach tol=%.1g in %d sweeps"
        % (tol, max_iter)
    )


def l1_distance(d1, d2):
    """L^1(S^1) distance between two grid densities on equal grids."""
    if d1.M != d2.M:
        raise ConfigError("grid sizes differ: %d vs %d" % (d1.M, d2.M))
    return float(np.abs(d1.values - d2.values).mean())


def integrate(f, density):
    """Integral of f against a grid density: the grid mean of f * rho."""
    fv = f(density.x) if callable(f) else np.asarray(f, float)
    if fv.shape != density.values.shape:
        raise ConfigError("integrand shape %s does not match grid %d" % (fv.shape, density.M))
    return float((fv * density.values).mean())


@functools.lru_cache(maxsize=8)
def probe_pairs(M=4096):
    """Five fixed (density, uniform) probe pairs used to fit the contraction rate.

    Each probe is a low-order trigonometric perturbation of the flat
    density, positive and of unit mass by construction.
    """
    x = grid_points(M)
    s, c = np.sin, np.cos
    profiles = (
        1.0 + 0.4 * s(2 * np.pi * x) + 0.2 * c(4 * np.pi * x),
        1.0 + 0.3 * c(2 * np.pi * x) + 0.15 * s(6 * np.pi * x),
        1.0 + 0.2 * c(2 * np.pi * x) - 0.35 * s(4 * np.pi * x),
        1.0 + 0.25 * s(2 * np.pi * x) + 0.25 * c(6 * np.pi * x),
        1.0 + 0.45 * s(2 * np.pi * x) - 0.15 * c(8 * np.pi * x),
    )
    ref = uniform_density(M)
    return tuple((GridDensity(p), ref) for p in profiles)


class ThetaFit:
    """Fitted contraction of the composed transfer operators.

    theta and d0 realize the envelope ||L_n ... L_1 (rho - sigma)||_1
    <= d0 * theta**n over the usable (pre-floor) prefix of every probe
    pair; slope is the pooled log-linear slope, pair_r2 the per-pair fit
    quality, and distances the raw decay curves.
    """

    def __init__(self, theta, d0, slope, pair_r2, usable, distances):
        self.theta = theta
        self.d0 = d0
        self.slope = slope
        self.pair_r2 = pair_r2
        self.usable = usable
        self.distances = distances


def estimate_theta(schedule, probes=30, pairs=None, M=4096, floor=1e-12):
    """Fit D0 and theta from the L^1 decay of pushed probe differences.

    For each probe pair the distances d_n = ||push_n(rho) - push_n(sigma)||_1
    are recorded for n = 0..probes; entries from the first d_n <= floor
    onward are discarded (collocation noise floor). A common slope is fit
    by least squares on log d_n with per-pair intercepts; pairs need at
    least two usable points to participate.
    """
    if probes > schedule.horizon:
        raise ConfigError(
            "probes=%d exceeds schedule horizon %d" % (probes, schedule.horizon)
        )
    if pairs is None:
        pairs = probe_pairs(M)
    curves = []
    for rho, sig in pairs:
        a, b = rho.values.copy(), sig.values.copy()
        ds = [float(np.abs(a - b).mean())]
        for i in range(1, probes + 1):
            m = schedule.map_at(i)
            a = transfer_apply(m, GridDensity(a)).values
            b = transfer_apply(m, GridDensity(b)).values
            ds.append(float(np.abs(a - b).mean()))
        curves.append(ds)

    usable = []
    for ds in curves:
        k = len(ds)
        for n, d in enumerate(ds):
            if d <= floor:
                k = n
                break
        usable.append(k)
    if all(k < 2 for k in usable):
        raise NumericalError(
            "contraction collapsed to the floor after at most one step; "
            "no usable decay points to fit theta from"
        )

    xs, ys, pair_id = [], [], []
    for p, (ds, k) in enumerate(zip(curves, usable)):
        if k < 2:
            continue
        for n in range(k):
            xs.append(float(n))
            ys.append(np.log(ds[n]))
            pair_id.append(p)
    xs, ys, pair_id = np.array(xs), np.array(ys), np.array(pair_id)
    xc, yc = xs.copy(), ys.copy()
    for p in np.unique(pair_id):
        sel = pair_id == p
        xc[sel] -= xs[sel].mean()
        yc[sel] -= ys[sel].mean()
    denom = (xc ** 2).sum()
    if denom <= 0.0:
        raise NumericalError("degenerate probe design; cannot fit a slope")
    slope = float((xc * yc).sum() / denom)
    theta = float(np.exp(slope))
    if not 0.0 < theta < 1.0:
        raise NumericalError(
            "fitted contraction theta=%.6g is not in (0, 1); "
            "the schedule does not exhibit L^1 decay on the probes" % theta
        )

    d0 = 0.0
    for ds, k in zip(curves, usable):
        for n in range(k):
            d0 = max(d0, ds[n] / theta ** n)

    r2s = []
    for ds, k in zip(curves, usable):
        if k < 2:
            r2s.append(float("nan"))
            continue
        n = np.arange(k, dtype=float)
        y = np.log(np.array(ds[:k]))
        b, a = np.polyfit(n, y, 1)
        resid = y - (a + b * n)
        sst = ((y - y.mean()) ** 2).sum()
        r2s.append(1.0 if sst == 0.0 else float(1.0 - (resid ** 2).sum() / sst))

    return ThetaFit(theta, d0, slope, tuple(r2s), tuple(usable),
                    tuple(tuple(ds) for ds in curves))


def lipschitz_log(density):
    """Grid Lipschitz constant of log rho, ignoring the single largest jump.

    Returns max over cyclic edges of |log rho(x_{j+1}) - log rho(x_j)| * M
    after dropping the one largest edge, so densities with a single
    interpolation-induced seam still report their smooth-part constant.
    """
    v = density.values
    if v.min() <= 0.0:
        raise ConfigError("log-Lipschitz constant needs a strictly positive density")
    jumps = np.abs(np.diff(np.log(v), append=np.log(v[:1]))) * density.M
    if jumps.size <= 1:
        return 0.0
    order = np.sort(jumps)
    return float(order[-2])
