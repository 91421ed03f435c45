"""Running maximum of drifted Brownian motion and the two-barrier viability probability."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, log_ndtr

from .boundary import DomainError


@dataclass(frozen=True)
class MaxLaw:
    """Law of X*_t = sup_{s<=t} X_s for X_s = mu s + sigma W_s, X_0 = 0."""

    mu: float
    sigma: float
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be > 0")

    @property
    def scale(self):
        return self.sigma * math.sqrt(self.t)


def norm_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _reflected_term(law, m):
    """exp(2 mu m / sigma^2) * Phi(-(m + mu t) / (sigma sqrt t)).

    Evaluated as a plain product in the ordinary range (so it cancels exactly
    against the first CDF term at m = 0) and in log space otherwise.
    """
    s = law.scale
    expo = 2.0 * law.mu * m / law.sigma**2
    x = -(m + law.mu * law.t) / s
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        direct = np.exp(expo) * norm_cdf(x)
        logged = np.exp(expo + log_ndtr(x))
    return np.where((np.abs(expo) < 600) & (x > -30), direct, logged)


def running_max_cdf(law: MaxLaw, m):
    """Pr(X*_t <= m) for m >= 0."""
    m = np.asarray(m, dtype=float)
    s = law.scale
    out = norm_cdf((m - law.mu * law.t) / s) - _reflected_term(law, m)
    return np.clip(out, 0.0, 1.0)


def running_max_density(law: MaxLaw, a):
    """Density of X*_t at a > 0 (derivative of :func:`running_max_cdf`)."""
    a = np.asarray(a, dtype=float)
    s = law.scale
    return 2.0 / s * norm_pdf((a - law.mu * law.t) / s) - 2.0 * law.mu / law.sigma**2 * _reflected_term(law, a)


def running_max_joint_density(law: MaxLaw, a, b):
    """Joint density of (X*_t, X_t) at (a, b), a > max(b, 0)."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any(a <= np.maximum(b, 0.0)):
        raise DomainError("joint density requires a > max(b, 0)")
    return _joint(law, a, b)


def _joint(law, a, b):
    mu, s2, t = law.mu, law.sigma**2, law.t
    drift = np.exp(mu / s2 * b - mu * mu / s2 * t / 2.0)
    u = 2.0 * a - b
    return drift * u / (s2 * t) * 2.0 / math.sqrt(2.0 * math.pi * s2 * t) * np.exp(-u * u / (2.0 * s2 * t))


def running_max_conditional_density(law: MaxLaw, a, b):
    """Density of X*_t at a given X_t = b (drift-free)."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any(a <= np.maximum(b, 0.0)):
        raise DomainError("conditional density requires a > max(b, 0)")
    s2t = law.sigma**2 * law.t
    return 2.0 * (2.0 * a - b) / s2t * np.exp(-2.0 * a * (a - b) / s2t)


def endpoint_density(law: MaxLaw, b):
    """Gaussian density of X_t at b."""
    s = law.scale
    return norm_pdf((np.asarray(b, dtype=float) - law.mu * law.t) / s) / s


def hitting_probability(mu, sigma, lower, upper, x0=0.0):
    """Pr(X hits ``upper`` before ``lower``) from ``x0``, lower < x0 < upper.

    Uses the scale function exp(-2 mu x / sigma^2) of the drifted motion.
    """
    k = 2.0 * mu / sigma**2
    if k == 0:
        return (x0 - lower) / (upper - lower)
    # (e^{k(lower-x0)} - 1) / (e^{k(lower-upper)} - 1), all exponents <= 0 for mu > 0
    num = math.expm1(k * (lower - x0))
    den = math.expm1(k * (lower - upper))
    return num / den


def viability_probability(b, params) -> float:
    """Probability that the running maximum reaches m0 before the abort line.

    With no exploration stage (m0 = 0) the project is viable from the start.
    """
    if b.m0 <= 0:
        return 1.0
    z0 = b.z0
    return hitting_probability(params.mu, params.sigma, lower=z0, upper=b.m0)


def viability_formula(mu, sigma, z_star_0, z_star_m0):
    """Closed form in terms of z*(0) and z*(m0) = z*(0) - m0."""
    if z_star_0 == z_star_m0:
        return 1.0
    k = 2.0 * mu / sigma**2
    return math.expm1(k * z_star_0) / math.expm1(k * z_star_m0)


# -- Monte Carlo oracles -----------------------------------------------------

def simulate_running_max(law: MaxLaw, n_paths, dt, seed=0, batch=64):
    """Discretely monitored X*_t samples (Euler, step dt)."""
    rng = np.random.default_rng(seed)
    n_steps = int(round(law.t / dt))
    out = np.empty(n_paths)
    sd = law.sigma * math.sqrt(dt)
    for s in range(0, n_paths, batch):
        k = min(batch, n_paths - s)
        x = np.zeros(k)
        best = np.zeros(k)
        # time-chunked to bound memory
        for c0 in range(0, n_steps, 8192):
            c = min(8192, n_steps - c0)
            inc = rng.standard_normal((k, c))
            inc *= sd
            inc += law.mu * dt
            path = np.cumsum(inc, axis=1)
            path += x[:, None]
            np.maximum(best, path.max(axis=1), out=best)
            x = path[:, -1]
        out[s:s + k] = best
    return out


def simulate_gamblers_ruin(mu, sigma, lower, upper, n_paths, dt, seed=0, t_max=None):
    """Fraction of Euler paths from 0 that reach ``upper`` before ``lower``.

    Returns ``(p_hat, se, n_undecided)``.
    """
    rng = np.random.default_rng(seed)
    x = np.zeros(n_paths)
    up = np.zeros(n_paths, dtype=bool)
    active = np.arange(n_paths)
    t_max = t_max or 200.0 * (upper - lower) ** 2 / sigma**2 + 50 * (upper - lower) / max(mu, 1e-12)
    sd = sigma * math.sqrt(dt)
    t = 0.0
    while active.size and t < t_max:
        x[active] += mu * dt + sd * rng.standard_normal(active.size)
        xa = x[active]
        hit_up = xa >= upper
        hit_lo = xa <= lower
        up[active[hit_up]] = True
        active = active[~(hit_up | hit_lo)]
        t += dt
    p = float(np.mean(up))
    se = math.sqrt(max(p * (1 - p), 0.0) / n_paths)
    return p, se, int(active.size)
