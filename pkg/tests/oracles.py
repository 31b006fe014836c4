"""Independent reference implementations used to check the package.

These deliberately avoid the code paths they verify: finite differences
for analytic Jacobians, a fixed-step RK4 integrator for the matrix
exponential, and closed-form arithmetic for frozen expected values.
"""

from __future__ import annotations

import numpy as np


def fd_jacobian(model, params, rel_step=1e-6):
    """Central-difference Jacobian of model(params)[0]."""
    params = np.asarray(params, dtype=float)
    y0 = model(params)[0]
    jac = np.empty((y0.size, params.size))
    for j in range(params.size):
        h = rel_step * max(abs(params[j]), 1.0)
        up = params.copy()
        dn = params.copy()
        up[j] += h
        dn[j] -= h
        jac[:, j] = (model(up)[0] - model(dn)[0]) / (2.0 * h)
    return jac


def rk4_evolve(matrix, p0, t_total, dt):
    """Classical fixed-step RK4 for dp/dt = M p."""
    m = np.asarray(matrix, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    n_steps = int(round(t_total / dt))
    for _ in range(n_steps):
        k1 = m @ p
        k2 = m @ (p + 0.5 * dt * k1)
        k3 = m @ (p + 0.5 * dt * k2)
        k4 = m @ (p + dt * k3)
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return p


def lorentzian_coverage(half_width_ratio):
    """Analytic area of a unit-area Lorentzian within +/- L = ratio*FWHM."""
    return (2.0 / np.pi) * np.arctan(2.0 * half_width_ratio)
