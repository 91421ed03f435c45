"""Fixed-step RK4 re-solve of the free boundary.

Deliberately independent of :mod:`gritquit.boundary`: scalar ``math`` code,
its own kernel and root formulas, no adaptive control and no shared helpers.
Used as a cross-check of the adaptive solver.
"""

import math


def reference_cutoffs(mu, sigma, r, c, R, L, pi, dpi, d2pi, qbar, h=1e-5):
    """Return ``(m0, m1, z_star_0)`` from a fixed-step RK4 march at step ``h``."""
    s2 = sigma * sigma
    disc = math.sqrt((mu / s2) ** 2 + 2.0 * r / s2)
    a1 = -mu / s2 + disc
    a2 = -mu / s2 - disc
    den = a1 - a2

    def gm1(x):  # g(x) - 1
        return (a1 * math.expm1(a2 * x) - a2 * math.expm1(a1 * x)) / den

    def gp(x):
        return a1 * a2 * (math.expm1(a2 * x) - math.expm1(a1 * x)) / den

    def f_final(m, z):
        return (1.0 + gm1(-z)) / gp(-z) * dpi(m) / (pi(m) - L + c) - 1.0

    def f_iter(m, z):
        return gm1(-z)

    slope = math.sqrt(d2pi(qbar) / ((pi(qbar) - L + c) * a1 * a2) + 0.25) - 0.5

    def march(f, event, m, z):
        """Step towards m = 0 until ``event`` changes sign; linear root location."""
        e = event(m, z)
        while m > 0:
            step = min(h, m)
            k1 = f(m, z)
            k2 = f(m - step / 2, z - step / 2 * k1)
            k3 = f(m - step / 2, z - step / 2 * k2)
            k4 = f(m - step, z - step * k3)
            z_new = z - step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            m_new = m - step
            e_new = event(m_new, z_new)
            if e <= 0 < e_new:
                w = e / (e - e_new)
                return m - w * step, z + w * (z_new - z), True
            m, z, e = m_new, z_new, e_new
        return 0.0, z, False

    m, z = qbar - h, -slope * h
    m1, z1, found = march(f_final, lambda m, z: gm1(-z) - R / (pi(m) - L + c), m, z)
    if not found:
        raise RuntimeError("no launch cutoff")
    m0, zm0, found = march(f_iter, lambda m, z: gm1(-z) - R / c, m1, z1)
    if not found:
        m0 = 0.0
    return m0, m1, zm0 + m0
