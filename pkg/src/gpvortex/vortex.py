"""Phase singularities of a field on the Cartesian grid, classified by region."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .gp2d import ComplexField2D, Grid2D, GroundState2D
from .potentials import TrapGeometry
from .radial import RadialProfile

DEGENERATE_MODULUS = 1e-30
SCAN_ETA_FLOOR = 1e-12


class Region(str, Enum):
    BULK = "Bulk"
    BOUNDARY_LAYER = "BoundaryLayer"
    EXTERIOR = "Exterior"


@dataclass(frozen=True)
class Vortex:
    x: float
    y: float
    charge: int
    region: Region
    local_modulus: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "x": self.x,
            "y": self.y,
            "charge": self.charge,
            "region": self.region.value,
            "local_modulus": self.local_modulus,
        }


@dataclass
class VortexReport:
    vortices: list[Vortex]
    total_charge: int
    boundary_winding: int
    scan_radius: float
    threshold: float
    degenerate_plaquettes: int = 0
    note: str = (
        "plaquettes are scanned only where the radial profile exceeds 1e-12; "
        "phases beyond that radius carry no information"
    )
    counts: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.counts = {r.value: 0 for r in Region}
        for v in self.vortices:
            self.counts[v.region.value] += 1

    @property
    def bulk(self) -> int:
        return self.counts[Region.BULK.value]

    @property
    def boundary_layer(self) -> int:
        return self.counts[Region.BOUNDARY_LAYER.value]

    @property
    def exterior(self) -> int:
        return self.counts[Region.EXTERIOR.value]

    def __len__(self) -> int:
        return len(self.vortices)

    def to_dict(self) -> dict[str, Any]:
        return {
            "vortices": [v.to_dict() for v in self.vortices],
            "total_charge": self.total_charge,
            "boundary_winding": self.boundary_winding,
            "counts": dict(self.counts),
            "scan_radius": self.scan_radius,
            "threshold": self.threshold,
            "degenerate_plaquettes": self.degenerate_plaquettes,
            "note": self.note,
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def _wrap(d: np.ndarray) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    return d - 2.0 * np.pi * np.ceil((d - np.pi) / (2.0 * np.pi))


def edge_phases(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Wrapped phase increments along x-edges ``(i,j)->(i+1,j)`` and y-edges ``(i,j)->(i,j+1)``."""
    theta = np.angle(v)
    return _wrap(np.diff(theta, axis=0)), _wrap(np.diff(theta, axis=1))


def winding_field(v) -> np.ndarray:
    """Integer winding of every plaquette, counter-clockwise (x then y).

    Plaquette ``(i, j)`` has corners ``(i, j), (i+1, j), (i+1, j+1), (i, j+1)``.
    """
    if isinstance(v, ComplexField2D):
        v = v.u
    dx, dy = edge_phases(v)
    circ = dx[:, :-1] + dy[1:, :] - dx[:, 1:] - dy[:-1, :]
    return np.rint(circ / (2.0 * np.pi)).astype(int)


def degenerate_mask(v: np.ndarray) -> np.ndarray:
    small = np.abs(v) < DEGENERATE_MODULUS
    return small[:-1, :-1] | small[1:, :-1] | small[:-1, 1:] | small[1:, 1:]


def boundary_winding(v: np.ndarray, cells: np.ndarray) -> int:
    """Phase circulation around the boundary of a set of plaquettes.

    Each edge is counted with the net orientation it receives from the
    selected cells, so interior edges cancel and only the outer loop(s)
    remain.
    """
    dx, dy = edge_phases(v)
    c = cells.astype(float)
    # x-edge (i, j) is the bottom of cell (i, j) (+) and the top of cell (i, j-1) (-)
    wx = np.zeros_like(dx)
    wx[:, :-1] += c
    wx[:, 1:] -= c
    # y-edge (i, j) is the right side of cell (i-1, j) (+) and the left of cell (i, j) (-)
    wy = np.zeros_like(dy)
    wy[1:, :] += c
    wy[:-1, :] -= c
    return int(round(float(np.sum(wx * dx) + np.sum(wy * dy)) / (2.0 * np.pi)))


def scan_radius(profile: RadialProfile, floor: float = SCAN_ETA_FLOOR) -> float:
    """Largest radius up to which the radial profile stays above ``floor``."""
    above = np.nonzero(profile.eta > floor)[0]
    if above.size == 0:
        return 0.0
    return float(profile.grid.r[above[-1]])


def classify(rc: np.ndarray, geom: TrapGeometry, eps: float) -> np.ndarray:
    """0 = Bulk, 1 = BoundaryLayer, 2 = Exterior."""
    d1 = abs(math.log(eps)) ** -1.5
    out = np.ones(rc.shape, dtype=int)
    out[geom.R - rc >= d1] = 0
    out[rc > geom.R] = 2
    return out


_REGIONS = (Region.BULK, Region.BOUNDARY_LAYER, Region.EXTERIOR)


def detect(
    u,
    profile: RadialProfile,
    geom: TrapGeometry,
    eps: float,
    threshold: float = 0.75,
    grid: Grid2D | None = None,
    eta=None,
) -> VortexReport:
    """Vortices of ``v = u / eta``: nonzero plaquette winding and min corner ``|v| < threshold``.

    ``eta`` may be a GroundState2D, an array on the grid, or None (radial
    profile interpolated onto the grid).
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if isinstance(u, ComplexField2D):
        grid = u.grid
        u = u.u
    if grid is None:
        raise ValueError("grid required for raw arrays")
    if abs(profile.eps - eps) > 0:
        raise ValueError(f"profile eps={profile.eps} differs from eps={eps}")
    r = grid.radius()
    if isinstance(eta, GroundState2D):
        eta = eta.eta
    elif eta is None:
        eta = profile(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = u / eta
    v = np.where(np.isfinite(v), v, 0.0)

    rs = scan_radius(profile)
    inside = r <= rs
    cells = inside[:-1, :-1] & inside[1:, :-1] & inside[:-1, 1:] & inside[1:, 1:]
    wind = winding_field(u)  # phase of v equals phase of u where eta > 0
    wind = np.where(cells, wind, 0)
    mod = np.abs(v)
    corner_min = np.minimum(np.minimum(mod[:-1, :-1], mod[1:, :-1]), np.minimum(mod[:-1, 1:], mod[1:, 1:]))
    hits = cells & (wind != 0) & (corner_min < threshold)
    x = grid.x
    xc = 0.5 * (x[:-1] + x[1:])
    ii, jj = np.nonzero(hits)
    rc = np.hypot(xc[ii], xc[jj])
    region = classify(rc, geom, eps)
    vortices = [
        Vortex(float(xc[i]), float(xc[j]), int(wind[i, j]), _REGIONS[k], float(corner_min[i, j]))
        for i, j, k in zip(ii, jj, region)
    ]
    return VortexReport(
        vortices=vortices,
        total_charge=int(np.sum(wind)),
        boundary_winding=boundary_winding(u, cells),
        scan_radius=rs,
        threshold=threshold,
        degenerate_plaquettes=int(np.sum(degenerate_mask(v) & cells)),
    )
