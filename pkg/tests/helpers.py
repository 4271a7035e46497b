"""Cached builders shared by the test modules."""
from __future__ import annotations

import functools

from gpvortex import gp2d
from gpvortex.potentials import harmonic, solve_lambda0
from gpvortex.radial import make_grid, minimize_radial
from gpvortex.sweep import prepare

SWEEP_EPS = (0.1, 0.05, 0.025)


@functools.lru_cache(maxsize=None)
def harmonic_geometry():
    spec = harmonic()
    return spec, solve_lambda0(spec)


@functools.lru_cache(maxsize=None)
def harmonic_profile(eps: float, h: float | None = None):
    spec, geom = harmonic_geometry()
    grid = make_grid(spec, geom, eps, h=h)
    return minimize_radial(spec, geom, eps, grid)


@functools.lru_cache(maxsize=None)
def small_context(eps: float = 0.2, n: int = 63, box_factor: float = 2.0):
    """A coarse 2D setup that keeps unit tests fast."""
    spec, geom = harmonic_geometry()
    return prepare(spec, eps, n, box_factor, geom)


def normalized(u, grid: gp2d.Grid2D):
    return u / grid.norm2(u) ** 0.5
