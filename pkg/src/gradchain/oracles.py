"""Closed-form reference solutions for the harmonic constitutive law.

With V(r) = r^2/2 the tension equals the strain, so the macroscopic equation
reduces to the heat equation

    dt r = (eps gamma)^-1 dxx r,   dx r|_{x=0} = 0,   r(1, t) = taubar(t),

whose solution for constant initial data is an eigenfunction series over
cos(lambda_k x), lambda_k = (k + 1/2) pi.  For the cubic smoothstep schedule
the mode amplitudes have exact closed forms, which makes this an independent
oracle for the finite-volume solver.
"""

from __future__ import annotations

import numpy as np

__all__ = ["heat_series_solution", "mode_amplitude"]


def _ramp_coeffs(schedule):
    dtau = schedule.tau1 - schedule.tau0
    t1 = schedule.t1
    # taubar'(s) = c1 s + c2 s^2 on [0, t1] (time measured from ramp start)
    c1 = 6.0 * dtau / t1**2
    c2 = -6.0 * dtau / t1**3
    return c1, c2


def mode_amplitude(schedule, mu, t):
    """h(t) = int_0^t exp(-mu (t - s)) taubar'(s) ds, exactly.

    ``mu`` may be an array of decay rates; the schedule must be constant or a
    smoothstep.  Exact antiderivatives of exp(mu s) (c1 s + c2 s^2) are used,
    so no quadrature error enters the oracle.
    """
    mu = np.asarray(mu, dtype=float)
    if schedule.kind == "constant":
        return np.zeros_like(mu)
    T = t - schedule.t_start
    if T <= 0:
        return np.zeros_like(mu)
    m = min(T, schedule.t1)
    c1, c2 = _ramp_coeffs(schedule)
    poly = (
        c1 * m / mu
        - c1 / mu**2
        + c2 * m**2 / mu
        - 2.0 * c2 * m / mu**2
        + 2.0 * c2 / mu**3
    )
    const = c1 / mu**2 - 2.0 * c2 / mu**3
    return np.exp(-mu * (T - m)) * poly + np.exp(-mu * T) * const


def heat_series_solution(x, t, schedule, gamma=1.0, eps=1.0, n_modes=600):
    """Exact solution r(x, t) for initial data r0 = taubar(0).

    Valid for the harmonic constitutive law only.  beta(x) plays no role
    because the harmonic tension does not depend on temperature.
    """
    x = np.asarray(x, dtype=float)
    lam = (np.arange(n_modes) + 0.5) * np.pi
    mu = lam**2 / (eps * gamma)
    a = 2.0 * (-1.0) ** np.arange(n_modes) / lam
    h = mode_amplitude(schedule, mu, t)
    # r = taubar(t) - sum_k a_k h_k cos(lambda_k x)
    return schedule.tau(t) - np.cos(np.outer(x, lam)) @ (a * h)
