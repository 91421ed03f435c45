"""Closed-form value function, optimal decisions and optimality-condition residuals."""

from __future__ import annotations

import csv
import enum
import io

import numpy as np

from .boundary import Boundary, boundary_lookup
from .model import g_eval, g_minus_one, g_prime, g_dprime


class Decision(str, enum.Enum):
    CONTINUE = "Continue"
    ABORT = "Abort"
    RESTART = "Restart"
    LAUNCH = "Launch"


def _scale(m, zs, b, params, profit, roots):
    """A(m) such that W + c = A(m) g(z - z*(m)) inside the band."""
    code = b.stage_codes(m)
    c = params.c
    with np.errstate(divide="ignore", invalid="ignore"):
        itr = params.R / g_minus_one(-zs, roots)
    fp = profit.pi(m) - params.L + c
    return np.select([code == 0, code == 1, code == 2], [np.full_like(zs, c), itr, fp], fp)


def _formula(z, m, b, params, profit, roots):
    """The stage formula evaluated without clamping z to the band (smooth in z)."""
    z, m = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(m, dtype=float))
    zs = boundary_lookup(b, m)
    a = _scale(m, zs, b, params, profit, roots)
    w = a * g_eval(z - zs, roots) - params.c
    post = m >= b.m_star
    return np.where(post, profit.pi(m) - params.L, w)


def value(z, m, b: Boundary, params, profit, roots):
    """W(z, m); states below the boundary take the boundary value."""
    z, m = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(m, dtype=float))
    zs = boundary_lookup(b, m)
    out = _formula(np.maximum(z, zs), m, b, params, profit, roots)
    return out[()] if out.ndim == 0 else out


def decide(z, m, b: Boundary):
    """Optimal action at (z, m)."""
    z, m = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(m, dtype=float))
    zs = boundary_lookup(b, m)
    code = b.stage_codes(m)
    hit = z <= zs
    out = np.where(
        code >= 3,
        Decision.LAUNCH.value,
        np.where(
            ~hit,
            Decision.CONTINUE.value,
            np.where(code == 0, Decision.ABORT.value,
                     np.where(code == 1, Decision.RESTART.value, Decision.LAUNCH.value)),
        ),
    )
    if out.ndim == 0:
        return Decision(str(out))
    return out.astype(object)


def value_z_derivatives(z, m, b, params, profit, roots):
    """Analytic (W_z, W_zz) inside the band."""
    zs = boundary_lookup(b, m)
    a = _scale(np.asarray(m, dtype=float), zs, b, params, profit, roots)
    return a * g_prime(z - zs, roots), a * g_dprime(z - zs, roots)


def interior_grid(b: Boundary, n_m=40, n_z=20, margin=None):
    """States strictly inside {z*(m) < z < 0, 0 < m < m*}, away from the cutoffs."""
    margin = margin if margin is not None else 2e-3 * b.m_star
    m = np.linspace(margin, b.m_star - margin, n_m)
    keep = np.abs(m - b.m1) > margin
    if b.m0 > 0:
        keep &= np.abs(m - b.m0) > margin
    m = m[keep]
    zs = boundary_lookup(b, m)
    frac = np.linspace(0.05, 0.95, n_z)
    Z = zs[:, None] * (1 - frac[None, :])
    M = np.broadcast_to(m[:, None], Z.shape)
    return Z.ravel(), M.ravel().copy()


def bhj_residual(b, params, profit, roots, grid=None, h_fd=None, value_fn=None):
    """Max of |mu W_z + sigma^2/2 W_zz - r (W + c)| over interior states.

    Returns ``(analytic, finite_difference)``. ``value_fn(z, m)`` replaces the
    closed form for the finite-difference route when given.
    """
    z, m = grid if grid is not None else interior_grid(b)
    h = h_fd if h_fd is not None else 1e-4 * b.m_star
    mu, s2, r, c = params.mu, params.sigma**2, params.r, params.c

    if value_fn is None:
        w = _formula(z, m, b, params, profit, roots)
        wz, wzz = value_z_derivatives(z, m, b, params, profit, roots)
        analytic = float(np.max(np.abs(mu * wz + 0.5 * s2 * wzz - r * (w + c))))
        f = lambda zz: _formula(zz, m, b, params, profit, roots)
    else:
        analytic = float("nan")
        f = lambda zz: value_fn(zz, m)
    w0 = f(z)
    wp, wm = f(z + h), f(z - h)
    wz = (wp - wm) / (2 * h)
    wzz = (wp - 2 * w0 + wm) / (h * h)
    fd = float(np.max(np.abs(mu * wz + 0.5 * s2 * wzz - r * (w0 + c))))
    return analytic, fd


def reflection_residual(b, params, profit, roots, m_grid=None, h_fd=None):
    """Per-node |W_m(0, m) - W_z(0, m)| by central differences.

    Returns ``(m, residual, W(0, m))``; nodes within one stencil of m0/m1 and
    nodes at or beyond m* are dropped.
    """
    h = h_fd if h_fd is not None else 1e-4 * b.m_star
    if m_grid is None:
        m_grid = np.linspace(0.0, b.m_star, 121)[1:-1]
    m = np.asarray(m_grid, dtype=float)
    keep = (m - h > 0) & (m + h < b.m_star) & (np.abs(m - b.m1) > 2 * h)
    if b.m0 > 0:
        keep &= np.abs(m - b.m0) > 2 * h
    m = m[keep]
    zero = np.zeros_like(m)
    w_m = (_formula(zero, m + h, b, params, profit, roots) - _formula(zero, m - h, b, params, profit, roots)) / (2 * h)
    w_z = (_formula(zero + h, m, b, params, profit, roots) - _formula(zero - h, m, b, params, profit, roots)) / (2 * h)
    return m, np.abs(w_m - w_z), _formula(zero, m, b, params, profit, roots)


def smooth_pasting_residual(b, params, profit, roots, m_grid=None, h_fd=None):
    """Max |W_z(z*(m), m)|: ``(analytic, finite_difference)``."""
    h = h_fd if h_fd is not None else 1e-4 * b.m_star
    m = _default_m(b, m_grid)
    zs = boundary_lookup(b, m)
    wz, _ = value_z_derivatives(zs, m, b, params, profit, roots)
    fd = (_formula(zs + h, m, b, params, profit, roots) - _formula(zs - h, m, b, params, profit, roots)) / (2 * h)
    return float(np.max(np.abs(wz))), float(np.max(np.abs(fd)))


def value_matching_residual(b, params, profit, roots, m_grid=None):
    """Max |W(z*(m), m) - max{0, pi(m) - L, W(0, m) - R}|."""
    m = _default_m(b, m_grid)
    zs = boundary_lookup(b, m)
    w_b = value(zs, m, b, params, profit, roots)
    target = np.maximum.reduce([
        np.zeros_like(m),
        profit.pi(m) - params.L,
        value(np.zeros_like(m), m, b, params, profit, roots) - params.R,
    ])
    return float(np.max(np.abs(w_b - target)))


def _default_m(b, m_grid):
    if m_grid is not None:
        return np.asarray(m_grid, dtype=float)
    return np.linspace(0.0, b.m_star, 301)[:-1]


def value_surface(b, params, profit, roots, m_res=60, z_res=40, z_min=None):
    """Rectangular (m, z) grid with W, stage and decision, for Figure-1-style plots."""
    z_min = z_min if z_min is not None else 1.25 * float(np.min(b.z))
    m = np.linspace(0.0, b.m_star, m_res)
    z = np.linspace(z_min, 0.0, z_res)
    M, Z = np.meshgrid(m, z, indexing="ij")
    M, Z = M.ravel(), Z.ravel()
    return {
        "m": M,
        "z": Z,
        "W": value(Z, M, b, params, profit, roots),
        "stage": b.stage_of(M),
        "decision": decide(Z, M, b),
    }


def value_surface_csv(surface) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "z", "W", "stage", "decision"])
    for row in zip(surface["m"], surface["z"], surface["W"], surface["stage"], surface["decision"]):
        w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), row[3], row[4]])
    return buf.getvalue()
