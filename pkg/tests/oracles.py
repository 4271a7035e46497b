"""Reference values computed independently of the package code paths."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize

# harmonic trap V = r^2: 2 pi int_0^sqrt(lam) (lam - r^2) r dr = pi lam^2 / 2 = 1
HARMONIC_LAMBDA0 = math.sqrt(2.0 / math.pi)
HARMONIC_R = (2.0 / math.pi) ** 0.25
HARMONIC_F0_SUP = HARMONIC_LAMBDA0 / 4.0
HARMONIC_OMEGA0 = math.sqrt(2.0 * math.pi)
# max of r (lam0 - r^2) at r = sqrt(lam0 / 3)
HARMONIC_SUP_R_A = 2.0 * (HARMONIC_LAMBDA0 / 3.0) ** 1.5


def harmonic_level_radius(delta: float) -> float:
    return math.sqrt(HARMONIC_LAMBDA0 + delta)


def harmonic_f0(r):
    r = np.asarray(r, dtype=float)
    return np.where(r < HARMONIC_R, (HARMONIC_LAMBDA0 - r**2) / 4.0, 0.0)


def harmonic_xi0(r):
    r = np.asarray(r, dtype=float)
    return np.where(r < HARMONIC_R, (HARMONIC_LAMBDA0 - r**2) ** 2 / 4.0, 0.0)


def lambda0_by_quad(V, r_hi: float) -> float:
    """Root of ``2 pi int (lam - V)^+ r dr = 1`` with adaptive Gauss-Kronrod and Brent."""

    def mass(lam):
        # the sublevel set is assumed to be a disk here; integrate to its edge
        edge = optimize.brentq(lambda r: V(r) - lam, 0.0, r_hi) if V(0.0) < lam else 0.0
        val, _ = integrate.quad(lambda r: (lam - V(r)) * r, 0.0, edge, epsabs=1e-14, epsrel=1e-13, limit=200)
        return 2.0 * math.pi * val - 1.0

    lo = V(0.0) + 1e-9
    hi = lo + 1.0
    while mass(hi) < 0:
        hi *= 2.0
    return optimize.brentq(mass, lo, hi, xtol=1e-14, rtol=1e-14)


def wkb_f(r, V, lam: float, eps: float):
    """Leading-order exterior behaviour ``f ~ eps r / (2 sqrt(V - lam))``.

    Follows from ``eta ~ exp(-int sqrt(V - lam) / eps)`` and integrating
    ``s eta^2`` by Laplace's method.
    """
    r = np.asarray(r, dtype=float)
    return eps * r / (2.0 * np.sqrt(V(r) - lam))


def loop_winding(v: np.ndarray, i0: int, i1: int, j0: int, j1: int) -> int:
    """Winding of ``v`` along the rectangle of nodes ``[i0, i1] x [j0, j1]``, counter-clockwise.

    Walks the node loop explicitly and wraps every step; independent of the
    package's plaquette and edge bookkeeping.
    """
    path = []
    path += [(i, j0) for i in range(i0, i1 + 1)]
    path += [(i1, j) for j in range(j0 + 1, j1 + 1)]
    path += [(i, j1) for i in range(i1 - 1, i0 - 1, -1)]
    path += [(i0, j) for j in range(j1 - 1, j0 - 1, -1)]
    total = 0.0
    for (a, b), (c, d) in zip(path, path[1:]):
        step = math.remainder(float(np.angle(v[c, d]) - np.angle(v[a, b])), 2.0 * math.pi)
        total += step
    return int(round(total / (2.0 * math.pi)))


def central_difference(fun, x0: float, step: float) -> float:
    return (fun(x0 + step) - fun(x0 - step)) / (2.0 * step)
