"""Expanding circle maps, time-dependent schedules, and initial densities.

The map family is T(x) = degree*x + amplitude*sin(2*pi*(x + phase)) mod 1
on S^1 = R/Z. Its derivative is bounded below by
lambda = degree - 2*pi*|amplitude| and above in second derivative by
a_star = 4*pi^2*|amplitude|; the amplitude constraint
|amplitude| < (degree - 1)/(2*pi) keeps lambda > 1, so every member is a
smooth expanding degree-to-one covering map.

Schedules are finite sequences T_1, ..., T_horizon drawn from the family:
an explicit list, a quasistatic row T_{n,k} = gamma(k/n) sampled from a
Holder curve of maps, or a realization of a finite-state random driver.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .streams import stream

TWO_PI = 2.0 * math.pi

# Bisection count: 44 halvings of [0, 1] give a bracket below 1e-13,
# after which a single Newton step lands at machine precision.
_BISECT_ITERS = 44


@dataclass(frozen=True)
class CircleMap:
    """One member of T(x) = degree*x + amplitude*sin(2*pi*(x + phase)) mod 1."""

    degree: int
    amplitude: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.degree != int(self.degree) or int(self.degree) < 2:
            raise ConfigError("degree must be an integer >= 2, got %r" % (self.degree,))
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "phase", float(self.phase))
        limit = (self.degree - 1) / TWO_PI
        if not abs(self.amplitude) < limit:
            raise ConfigError(
                "amplitude %g is not expanding: need |amplitude| < (degree-1)/(2*pi) = %.6g"
                % (self.amplitude, limit)
            )
        if not 0.0 <= self.phase < 1.0:
            raise ConfigError("phase must lie in [0, 1), got %r" % (self.phase,))


def map_eval(m, x):
    """Apply T to a point or array of points in [0, 1).

    Values a hair below an integer can wrap to exactly 1.0 under the mod;
    those fold back to 0.0 so the result always lies in [0, 1).
    """
    out = (m.degree * x + m.amplitude * np.sin(TWO_PI * (np.asarray(x, float) + m.phase))) % 1.0
    return np.where(out == 1.0, 0.0, out)


def map_lift(m, y):
    """Lift of T to R: degree*y + amplitude*sin(2*pi*(y + phase)), no mod."""
    return m.degree * y + m.amplitude * np.sin(TWO_PI * (np.asarray(y, float) + m.phase))


def map_deriv(m, x):
    """T'(x) = degree + 2*pi*amplitude*cos(2*pi*(x + phase)). Always > 1."""
    return m.degree + TWO_PI * m.amplitude * np.cos(TWO_PI * (np.asarray(x, float) + m.phase))


def map_second_deriv(m, x):
    """T''(x) = -4*pi^2*amplitude*sin(2*pi*(x + phase))."""
    return -(TWO_PI ** 2) * m.amplitude * np.sin(TWO_PI * (np.asarray(x, float) + m.phase))


def map_bounds(m):
    """Return (lambda, a_star): inf T' = degree - 2*pi*|amplitude|, sup |T''| = 4*pi^2*|amplitude|."""
    lam = m.degree - TWO_PI * abs(m.amplitude)
    if lam <= 1.0:
        raise ConfigError("map is not uniformly expanding: lambda = %.6g <= 1" % lam)
    return lam, (TWO_PI ** 2) * abs(m.amplitude)


def circle_dist(u, v):
    """Distance on R/Z between points (arrays broadcast)."""
    d = np.abs(np.asarray(u, float) - np.asarray(v, float)) % 1.0
    return np.minimum(d, 1.0 - d)


def _solve_lift(m, targets):
    """Solve lift(y) = t on [0, 1] for each target by bisection plus one Newton polish.

    The lift is strictly increasing, so bisection converges unconditionally;
    the Newton step only polishes the last digits.
    """
    t = np.asarray(targets, float)
    lo = np.zeros_like(t)
    hi = np.ones_like(t)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        above = map_lift(m, mid) >= t
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    y = 0.5 * (lo + hi)
    y = y - (map_lift(m, y) - t) / map_deriv(m, y)
    y = np.clip(y, 0.0, 1.0)
    return np.where(y >= 1.0, 0.0, y)


def preimages(m, x):
    """All `degree` preimages of x under T, sorted, each with residual <= 1e-12.

    Branch b solves lift(y) = x + ceil(lift(0) - x) + b on [0, 1]; the shift
    places one target inside the range of each monotone branch.
    """
    x = float(x)
    if not 0.0 <= x < 1.0:
        raise ConfigError("point must lie in [0, 1), got %r" % (x,))
    f0 = m.amplitude * math.sin(TWO_PI * m.phase)
    targets = x + math.ceil(f0 - x) + np.arange(m.degree, dtype=float)
    y = _solve_lift(m, targets)
    res = circle_dist(map_eval(m, y), x)
    if np.any(res > 1e-12):
        raise NumericalError(
            "preimage root-finding failed for x=%.17g (worst residual %.3g)"
            % (x, float(res.max()))
        )
    return np.sort(y)


def c1_distance(m1, m2, grid=4096):
    """Grid approximation of sup d(T1 x, T2 x) + sup |T1'(x) - T2'(x)|.

    Evaluated at x = j/grid; nondecreasing under grid refinement along
    nested (power of two) grids.
    """
    if grid < 2:
        raise ConfigError("grid must be >= 2, got %r" % (grid,))
    x = np.arange(grid) / grid
    pos = float(circle_dist(map_eval(m1, x), map_eval(m2, x)).max())
    der = float(np.abs(map_deriv(m1, x) - map_deriv(m2, x)).max())
    return pos + der


@dataclass(frozen=True)
class InitialDensity:
    """Initial law rho(x) = 1 + epsilon*sin(2*pi*x) on S^1.

    log rho is Lipschitz with constant 2*pi*|epsilon|/(1 - |epsilon|);
    this is the regularity number the decay-constant bookkeeping uses.
    """

    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not abs(self.epsilon) < 1.0:
            raise ConfigError("epsilon must satisfy |epsilon| < 1, got %r" % (self.epsilon,))

    def density(self, x):
        return 1.0 + self.epsilon * np.sin(TWO_PI * np.asarray(x, float))

    def cdf(self, x):
        x = np.asarray(x, float)
        return x + self.epsilon * (1.0 - np.cos(TWO_PI * x)) / TWO_PI

    @property
    def log_lip(self):
        return TWO_PI * abs(self.epsilon) / (1.0 - abs(self.epsilon))


def sample_initial_many(density, rng, size):
    """Draw `size` points by inverting the CDF x + eps*(1 - cos 2 pi x)/(2 pi).

    Bisection brackets the root, two Newton steps polish it, and the
    result is checked to satisfy |CDF(x) - u| <= 1e-12.
    """
    u = rng.random(size)
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        above = density.cdf(mid) >= u
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    y = 0.5 * (lo + hi)
    for _ in range(2):
        y = y - (density.cdf(y) - u) / density.density(y)
        y = np.clip(y, 0.0, 1.0)
    y = np.where(y >= 1.0, 0.0, y)
    res = np.abs(density.cdf(y) - u)
    if np.any(res > 1e-12):
        raise NumericalError(
            "initial-density inversion failed (worst residual %.3g)" % float(res.max())
        )
    return y


def sample_initial(density, rng):
    """Draw one point from the initial density. rng is a numpy Generator."""
    return float(sample_initial_many(density, rng, 1)[0])


class QuasistaticCurve:
    """A Holder curve t -> CircleMap(degree, amplitude_fn(t), phase_fn(t)).

    eta and c_h declare the Holder modulus of the curve in the C1 metric
    d(T1, T2) = sup d(T1 x, T2 x) + sup |T1' - T2'|; the constructor
    verifies d(gamma_s, gamma_t) <= c_h*|s - t|**eta on a check grid and
    rejects curves that leave the expanding family.
    """

    def __init__(self, degree, amplitude_fn, phase_fn, eta, c_h,
                 check_points=17, check_grid=256):
        if not 0.0 < eta <= 1.0:
            raise ConfigError("eta must lie in (0, 1], got %r" % (eta,))
        if c_h < 0.0:
            raise ConfigError("c_h must be >= 0, got %r" % (c_h,))
        self.degree = int(degree)
        self.amplitude_fn = amplitude_fn
        self.phase_fn = phase_fn
        self.eta = float(eta)
        self.c_h = float(c_h)
        ts = np.linspace(0.0, 1.0, check_points)
        maps = [self.map_at(t) for t in ts]
        for i in range(len(ts)):
            for j in range(i + 1, len(ts)):
                d = c1_distance(maps[i], maps[j], check_grid)
                allowed = self.c_h * abs(ts[i] - ts[j]) ** self.eta
                if d > allowed + 1e-9:
                    raise ConfigError(
                        "curve violates the declared Holder modulus at (s, t)=(%.4g, %.4g): "
                        "d_C1 = %.6g > c_h*|s-t|^eta = %.6g" % (ts[i], ts[j], d, allowed)
                    )
        fine = np.linspace(0.0, 1.0, 257)
        bounds = [map_bounds(self.map_at(t)) for t in fine]
        self.lambda_min = min(b[0] for b in bounds)
        self.a_star_max = max(b[1] for b in bounds)

    def map_at(self, t):
        return CircleMap(self.degree, float(self.amplitude_fn(t)),
                         float(self.phase_fn(t)) % 1.0)


def power_curve(degree, amplitude, phase, eta, c_h, **curve_kwargs):
    """Curve with amplitude_fn(t) = base + scale*t**power (same shape for phase).

    amplitude and phase are (base, scale, power) triples. t**power with
    power = eta gives a curve whose Holder exponent is exactly eta.
    """
    ab, asc, ap = (float(v) for v in amplitude)
    pb, psc, pp = (float(v) for v in phase)
    if ap <= 0.0 or pp <= 0.0:
        raise ConfigError("curve powers must be positive")
    return QuasistaticCurve(
        degree,
        lambda t, b=ab, s=asc, p=ap: b + s * t ** p,
        lambda t, b=pb, s=psc, p=pp: b + s * t ** p,
        eta, c_h, **curve_kwargs,
    )


class RandomDriver:
    """Finite-state driver selecting (amplitude, phase) pairs for random schedules.

    kind 'markov' uses the given row-stochastic transition matrix, started
    from its stationary law so the state sequence is stationary; 'iid'
    replaces every row by the first one. The chain must be irreducible and
    aperiodic. gamma is the declared polynomial mixing exponent and is
    carried through to reports only.
    """

    def __init__(self, degree, amplitudes, phases, transition, kind="markov", gamma=2.0):
        amplitudes = tuple(float(a) for a in amplitudes)
        phases = tuple(float(p) for p in phases)
        if len(amplitudes) != len(phases) or not amplitudes:
            raise ConfigError("amplitudes and phases must be equal-length, nonempty lists")
        n = len(amplitudes)
        P = np.array(transition, dtype=float)
        if kind == "iid":
            if P.ndim == 1:
                P = np.tile(P, (n, 1))
            else:
                P = np.tile(P[0], (n, 1))
        if P.shape != (n, n):
            raise ConfigError("transition matrix must be %dx%d" % (n, n))
        if np.any(P < 0.0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise ConfigError("transition matrix rows must be nonnegative and sum to 1")
        power = np.linalg.matrix_power(P, (n - 1) ** 2 + 1)
        if np.any(power <= 0.0):
            raise ConfigError("driver chain must be irreducible and aperiodic")
        self.degree = int(degree)
        self.kind = str(kind)
        self.gamma = float(gamma)
        self.amplitudes = amplitudes
        self.phases = phases
        self.transition = P
        self.transition.flags.writeable = False
        self.maps = tuple(CircleMap(self.degree, a, p) for a, p in zip(amplitudes, phases))
        evals, evecs = np.linalg.eig(P.T)
        k = int(np.argmin(np.abs(evals - 1.0)))
        pi = np.real(evecs[:, k])
        pi = np.abs(pi) / np.abs(pi).sum()
        self.stationary = pi
        self.stationary.flags.writeable = False

    @classmethod
    def default(cls, degree=2, gamma=2.0):
        """Four-state chain with a mild self-transition bias."""
        n = 4
        P = 0.5 * np.eye(n) + 0.5 / n * np.ones((n, n))
        return cls(degree, (0.0, 0.03, 0.06, 0.09), (0.0, 0.25, 0.5, 0.75), P, gamma=gamma)

    def sample_states(self, seed, length, realization=0):
        """Stationary state path of the chain, keyed by (seed, realization)."""
        rng = stream(seed, "rds-omega", int(realization))
        cums = np.cumsum(self.transition, axis=1)
        states = np.empty(length, dtype=np.int64)
        s = int(np.searchsorted(np.cumsum(self.stationary), rng.random()))
        for i in range(length):
            states[i] = s
            s = int(np.searchsorted(cums[s], rng.random()))
        return states


class MapSchedule:
    """A finite sequence of circle maps T_1, ..., T_horizon applied in order."""

    def __init__(self, maps, kind="explicit", meta=None):
        maps = tuple(maps)
        if not maps:
            raise ConfigError("schedule needs at least one map")
        self.maps = maps
        self.kind = kind
        self.meta = meta or {}
        self.horizon = len(maps)
        bounds = [map_bounds(m) for m in maps]
        self.lambda_min = min(b[0] for b in bounds)
        self.a_star_max = max(b[1] for b in bounds)

    @classmethod
    def explicit(cls, maps):
        return cls(maps, kind="explicit")

    @classmethod
    def cycled(cls, maps, horizon):
        """Repeat a base list of maps cyclically out to the given horizon."""
        base = tuple(maps)
        if not base:
            raise ConfigError("schedule needs at least one map")
        seq = [base[i % len(base)] for i in range(int(horizon))]
        return cls(seq, kind="explicit", meta={"cycle": len(base)})

    @classmethod
    def quasistatic(cls, curve, n):
        """Row n of the triangular array: T_{n,k} = gamma(k/n) for k = 1..n."""
        n = int(n)
        if n < 1:
            raise ConfigError("row length n must be >= 1")
        seq = [curve.map_at(k / n) for k in range(1, n + 1)]
        return cls(seq, kind="quasistatic", meta={"n": n, "curve": curve})

    @classmethod
    def random(cls, driver, seed, horizon, realization=0):
        states = driver.sample_states(seed, int(horizon), realization)
        seq = [driver.maps[s] for s in states]
        return cls(seq, kind="random",
                   meta={"seed": int(seed), "realization": int(realization),
                         "states": states, "driver": driver})

    def map_at(self, i):
        """The map applied at step i, for 1 <= i <= horizon."""
        if not 1 <= i <= self.horizon:
            raise ConfigError(
                "schedule step %d outside horizon 1..%d" % (i, self.horizon)
            )
        return self.maps[i - 1]

    def fingerprint(self):
        """Stable hex digest of the map sequence, for caching and report metadata."""
        import hashlib

        material = repr([(m.degree, m.amplitude, m.phase) for m in self.maps]).encode()
        return hashlib.blake2b(material, digest_size=8).hexdigest()


def iterate_orbit(schedule, x0, n_steps):
    """Orbit [x0, T_1 x0, T_2 T_1 x0, ...] with n_steps + 1 entries."""
    x0 = float(x0)
    if not 0.0 <= x0 < 1.0:
        raise ConfigError("x0 must lie in [0, 1), got %r" % (x0,))
    if n_steps > schedule.horizon:
        raise ConfigError(
            "orbit length %d exceeds schedule horizon %d" % (n_steps, schedule.horizon)
        )
    orbit = np.empty(n_steps + 1)
    orbit[0] = x0
    x = x0
    for k in range(1, n_steps + 1):
        x = float(map_eval(schedule.map_at(k), x))
        orbit[k] = x
    return orbit
