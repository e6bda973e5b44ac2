"""Closed-form constants and error bounds for the normal approximation.

Every operation evaluates an explicit formula with all constants passed
in; nothing here measures anything. Correlation decay enters through a
geometric profile rho(i) = theta^i, for which the two recurring sums are
exact: sum_{i>K} theta^i = theta^(K+1)/(1-theta) and
sqrt(sum (i+1) theta^i) = 1/(1-theta).
"""

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class DecayConstants:
    """Correlation-decay constants of a schedule.

    theta is the geometric decay ratio; c2 and c4 bound pair and quadruple
    correlations; d0 is the density-contraction prefactor; b0 the boundary
    constant (taken equal to d0 when calibrated); l0 the log-Lipschitz
    constant of the initial density. source records whether the values
    were configured by hand or calibrated from transfer-operator
    measurements.
    """

    theta: float
    c2: float
    c4: float
    b0: float
    d0: float
    l0: float = 0.0
    source: str = "configured"

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ConfigError("theta must lie in (0, 1), got %r" % (self.theta,))
        for name in ("c2", "c4", "b0", "d0"):
            if getattr(self, name) <= 0.0:
                raise ConfigError("%s must be positive" % name)
        if self.l0 < 0.0:
            raise ConfigError("l0 must be >= 0")
        if self.source not in ("configured", "calibrated"):
            raise ConfigError("source must be 'configured' or 'calibrated'")

    def floored(self, lambda_min):
        """Raise theta to its schedule floor 1/lambda_min if needed."""
        floor = 1.0 / lambda_min
        if self.theta >= floor:
            return self
        return DecayConstants(floor, self.c2, self.c4, self.b0, self.d0,
                              self.l0, self.source)


class BoundReport:
    """A bound value split into its additive pieces.

    pieces maps piece names to nonnegative values; value is their sum.
    flags carries validity information (for instance whether N clears the
    threshold a bound requires).
    """

    def __init__(self, pieces, flags=None, n=None, k=None):
        for name, val in pieces.items():
            if val < 0.0:
                raise ConfigError("bound piece %s is negative: %r" % (name, val))
        self.pieces = dict(pieces)
        self.flags = dict(flags or {})
        self.n = n
        self.k = k

    @property
    def value(self):
        return float(sum(self.pieces.values()))

    def to_dict(self):
        out = {"value": self.value, "pieces": dict(self.pieces)}
        if self.flags:
            out["flags"] = dict(self.flags)
        if self.n is not None:
            out["n"] = self.n
        if self.k is not None:
            out["k"] = self.k
        return out


@dataclass(frozen=True)
class KChoice:
    """Block length K = ceil(2 ln N / -ln theta) with its validity data.

    valid means N >= 16/(1-theta)^2, which guarantees K < N; the reported
    k_plus_one_bound is the companion estimate K + 1 <= 4 ln N / (1-theta).
    """

    k: int
    valid: bool
    n_threshold: float
    k_plus_one_bound: float

    def __iter__(self):
        return iter((self.k, self.valid))


def _check_theta(theta):
    if not 0.0 < theta < 1.0:
        raise ConfigError("theta must lie in (0, 1), got %r" % (theta,))


def choose_K(n, theta):
    """Block length for splitting a length-N sum into bulk and tail."""
    _check_theta(theta)
    n = int(n)
    if n < 1:
        raise ConfigError("N must be >= 1, got %d" % n)
    k = int(math.ceil(2.0 * math.log(n) / (-math.log(theta))))
    threshold = 16.0 / (1.0 - theta) ** 2
    return KChoice(k, n >= threshold, threshold,
                   4.0 * math.log(n) / (1.0 - theta) if n > 1 else 0.0)


def geometric_tail(theta, k):
    """sum_{i > K} theta^i = theta^(K+1)/(1 - theta)."""
    _check_theta(theta)
    return theta ** (k + 1) / (1.0 - theta)


def geometric_weighted_sqrt(theta):
    """sqrt(sum_{i>=0} (i+1) theta^i) = 1/(1 - theta), exact for geometric decay."""
    _check_theta(theta)
    return 1.0 / (1.0 - theta)


def sum_lemma_check(rho):
    """Verify (sum rho)^2 <= 2 sum (i+1) rho(i) for an admissible profile.

    rho must start at 1, stay in [0, 1], and be nonincreasing. Returns
    (lhs, rhs, holds).
    """
    rho = [float(r) for r in rho]
    if not rho:
        raise ConfigError("rho must be nonempty")
    if abs(rho[0] - 1.0) > 1e-12:
        raise ConfigError("rho(0) must equal 1, got %r" % (rho[0],))
    if any(r < 0.0 or r > 1.0 for r in rho):
        raise ConfigError("rho values must lie in [0, 1]")
    if any(b > a + 1e-12 for a, b in zip(rho, rho[1:])):
        raise ConfigError("rho must be nonincreasing")
    total = sum(rho)
    lhs = total * total
    rhs = 2.0 * sum((i + 1) * r for i, r in enumerate(rho))
    return lhs, rhs, lhs <= rhs


def c_star(d, c2, c4, sup_f, d2h, d3h, theta):
    """Smooth-test constant 6 d^3 max{C2, sqrt(C4)} (sup_f d3h + d2h) / (1-theta)."""
    _check_theta(theta)
    if min(d, c2, c4) <= 0 or min(sup_f, d2h, d3h) < 0:
        raise ConfigError("constants must be positive (norms nonnegative)")
    return (6.0 * d ** 3 * max(c2, math.sqrt(c4))
            * (sup_f * d3h + d2h) * geometric_weighted_sqrt(theta))


def thm_main_bound(c_star_value, n, k, theta, rho_tilde_k):
    """Smooth-test gap bound C*((K+1)/sqrt(N) + tail) + sqrt(N) rho_tilde(K)."""
    _check_theta(theta)
    n, k = int(n), int(k)
    if k >= n:
        raise ConfigError("need K < N, got K=%d N=%d" % (k, n))
    if c_star_value < 0.0 or rho_tilde_k < 0.0:
        raise ConfigError("constants must be nonnegative")
    root_n = math.sqrt(n)
    pieces = {
        "bulk": c_star_value * (k + 1) / root_n,
        "tail": c_star_value * geometric_tail(theta, k),
        "centering": root_n * rho_tilde_k,
    }
    return BoundReport(pieces, n=n, k=k)


def c_sharp(sigma_n, c2, c4, sup_f, theta):
    """Wasserstein constants (C#, C#') of the univariate bound.

    C# = 12 max{1/sigma, 1/sigma^2} max{C2, sqrt(C4)} (1 + sup_f)/(1-theta)
    and C#' = 2 max{1, 1/sigma^2}.
    """
    _check_theta(theta)
    if sigma_n <= 0.0:
        raise ConfigError("sigma_N must be positive; a vanishing variance "
                          "short-circuits to distance 0")
    if min(c2, c4) <= 0 or sup_f < 0:
        raise ConfigError("constants must be positive (norms nonnegative)")
    inv = 1.0 / sigma_n
    sharp = (12.0 * max(inv, inv * inv) * max(c2, math.sqrt(c4))
             * (1.0 + sup_f) * geometric_weighted_sqrt(theta))
    return sharp, 2.0 * max(1.0, inv * inv)


def thm_w1_bound(c_sharp_value, c_sharp_prime, n, k, theta, rho_tilde_k):
    """Wasserstein gap bound C#((K+1)/sqrt(N) + tail) + C#' sqrt(N) rho_tilde(K)."""
    _check_theta(theta)
    n, k = int(n), int(k)
    if k >= n:
        raise ConfigError("need K < N, got K=%d N=%d" % (k, n))
    if min(c_sharp_value, c_sharp_prime, rho_tilde_k) < 0.0:
        raise ConfigError("constants must be nonnegative")
    root_n = math.sqrt(n)
    pieces = {
        "bulk": c_sharp_value * (k + 1) / root_n,
        "tail": c_sharp_value * geometric_tail(theta, k),
        "centering": c_sharp_prime * root_n * rho_tilde_k,
    }
    return BoundReport(pieces, n=n, k=k)


def rho_tilde_univar(k, theta, b0, f_lip_norm):
    """Centering defect of the K-step conditioning, univariate form.

    2 L^2 theta^((K-1)/2)/(theta^(-1)-1) + 4 B0 L theta^(K/2)
    + 2 L theta^((K-1)/2) with L the Lipschitz norm of f.
    """
    _check_theta(theta)
    if k < 0:
        raise ConfigError("K must be >= 0")
    if b0 < 0.0 or f_lip_norm < 0.0:
        raise ConfigError("constants must be nonnegative")
    half = theta ** ((k - 1) / 2.0)
    return (2.0 * f_lip_norm ** 2 * half / (1.0 / theta - 1.0)
            + 4.0 * b0 * f_lip_norm * theta ** (k / 2.0)
            + 2.0 * f_lip_norm * half)


def rho_tilde_multivar(k, d, theta, b0, f_lip_norm, d1h, d2h):
    """Centering defect, multivariate form with test-function derivative norms."""
    _check_theta(theta)
    if k < 0:
        raise ConfigError("K must be >= 0")
    if d < 1:
        raise ConfigError("dimension must be >= 1")
    if min(b0, f_lip_norm, d1h, d2h) < 0.0:
        raise ConfigError("constants must be nonnegative")
    half = theta ** ((k - 1) / 2.0)
    return (2.0 * d * d * d2h * f_lip_norm ** 2 * half / (1.0 / theta - 1.0)
            + 4.0 * d * b0 * d1h * f_lip_norm * theta ** (k / 2.0)
            + 2.0 * d * d1h * f_lip_norm * half)


def circle_C_multivar(d, c2, c4, sup_f, f_lip_norm, b0, d1h, d2h, d3h, theta):
    """Assembled smooth-test constant for expanding-circle schedules.

    30 d^3 max{C2, sqrt(C4)}(sup_f d3h + d2h)/(1-theta)^2
    + 2 d^2 d2h L^2/(theta^(-1/2) - theta^(1/2)) + 4 d B0 L d1h
    + 2 d d1h L / theta^(1/2).
    """
    _check_theta(theta)
    if d < 1 or min(c2, c4, b0) <= 0 or min(sup_f, f_lip_norm, d1h, d2h, d3h) < 0:
        raise ConfigError("constants must be positive (norms nonnegative)")
    rt = math.sqrt(theta)
    return (30.0 * d ** 3 * max(c2, math.sqrt(c4)) * (sup_f * d3h + d2h)
            / (1.0 - theta) ** 2
            + 2.0 * d * d * d2h * f_lip_norm ** 2 / (1.0 / rt - rt)
            + 4.0 * d * b0 * f_lip_norm * d1h
            + 2.0 * d * d1h * f_lip_norm / rt)


def circle_C_tilde(c2, c4, sup_f, f_lip_norm, b0, theta):
    """Assembled Wasserstein constant for expanding-circle schedules.

    60 max{C2, sqrt(C4)}(1 + sup_f)/(1-theta)^2
    + 4 L^2/(theta^(-1/2) - theta^(1/2)) + 8 B0 L + 4 L/theta^(1/2).
    """
    _check_theta(theta)
    if min(c2, c4, b0) <= 0 or min(sup_f, f_lip_norm) < 0:
        raise ConfigError("constants must be positive (norms nonnegative)")
    rt = math.sqrt(theta)
    return (60.0 * max(c2, math.sqrt(c4)) * (1.0 + sup_f) / (1.0 - theta) ** 2
            + 4.0 * f_lip_norm ** 2 / (1.0 / rt - rt)
            + 8.0 * b0 * f_lip_norm
            + 4.0 * f_lip_norm / rt)


def circle_rate_bound(c_tilde, n, theta, c0=1.0, p=0.0):
    """Wasserstein rate bound C~ max{1, C0^-2} N^(-1/2 + 2p) log N.

    Valid on the branch sigma_N >= C0 N^-p with 0 <= p < 1/8; the flag
    records whether N clears the threshold 16/(1-theta)^2.
    """
    _check_theta(theta)
    n = int(n)
    if n < 2:
        raise ConfigError("N must be >= 2 for a log N bound")
    if c_tilde < 0.0 or c0 <= 0.0:
        raise ConfigError("need c_tilde >= 0 and C0 > 0")
    if not 0.0 <= p < 0.125:
        raise ConfigError("p must lie in [0, 1/8), got %r" % (p,))
    value = c_tilde * max(1.0, c0 ** -2) * n ** (-0.5 + 2.0 * p) * math.log(n)
    return BoundReport({"rate": value},
                       flags={"n_valid": n >= 16.0 / (1.0 - theta) ** 2},
                       n=n)


def sixth_root_bound(c_tilde, n, theta):
    """Unconditional fallback bound max{C~, 2} N^(-1/6) log N."""
    _check_theta(theta)
    n = int(n)
    if n < 2:
        raise ConfigError("N must be >= 2 for a log N bound")
    if c_tilde < 0.0:
        raise ConfigError("c_tilde must be >= 0")
    value = max(c_tilde, 2.0) * n ** (-1.0 / 6.0) * math.log(n)
    return BoundReport({"rate": value},
                       flags={"n_valid": n >= 16.0 / (1.0 - theta) ** 2},
                       n=n)


def self_normalized_bound(c_tilde, n, c0, p):
    """Rate bound for the self-normalized sum: C~ max{C0^-1/2, C0^-3/2} N^(1-3p/2) log N.

    Covers the branch where the empirical variance satisfies
    s_N^2 >= C0 N^p with 0 <= p <= 1; p = 1 recovers the N^-1/2 shape.
    """
    n = int(n)
    if n < 2:
        raise ConfigError("N must be >= 2 for a log N bound")
    if c_tilde < 0.0 or c0 <= 0.0:
        raise ConfigError("need c_tilde >= 0 and C0 > 0")
    if not 0.0 <= p <= 1.0:
        raise ConfigError("p must lie in [0, 1], got %r" % (p,))
    value = (c_tilde * max(c0 ** -0.5, c0 ** -1.5)
             * n ** (1.0 - 1.5 * p) * math.log(n))
    return BoundReport({"rate": value}, n=n)


def splitting_bound(m, lip_g, sup_g, sup_h, lam, d0, theta):
    """Pair-correlation splitting bound sup_h (2 lip_g lambda^-floor(m/2)
    + sup_g D0 theta^ceil(m/2))."""
    _check_theta(theta)
    m = int(m)
    if m < 0:
        raise ConfigError("m must be >= 0")
    if lam <= 1.0:
        raise ConfigError("lambda must exceed 1")
    if min(lip_g, sup_g, sup_h) < 0.0 or d0 <= 0.0:
        raise ConfigError("constants must be positive (norms nonnegative)")
    return sup_h * (2.0 * lip_g * lam ** -(m // 2)
                    + sup_g * d0 * theta ** math.ceil(m / 2))


def l_star(lam, a_star):
    """Distortion ceiling A* lambda (1 - 1/lambda)^-2 of an expanding map.

    Log-Lipschitz constants of pushed densities settle below this level;
    it is reporting metadata, not an input to any bound formula.
    """
    if lam <= 1.0:
        raise ConfigError("lambda must exceed 1")
    if a_star < 0.0:
        raise ConfigError("A* must be >= 0")
    return a_star * lam / (1.0 - 1.0 / lam) ** 2
