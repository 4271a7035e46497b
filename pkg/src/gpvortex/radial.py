"""Positive radial ground state of the non-rotating energy under unit mass.

The radial slice is discretized by finite volumes on nodes ``r_i = i h``
(``i = 0 .. n-1``) with a homogeneous Dirichlet point at ``R_max = n h``.
Node ``i >= 1`` owns the annulus ``[r_i - h/2, r_i + h/2]`` and the axis node
owns the disk of radius ``h/2``, so the discrete Laplacian is the exact
variational derivative of the discrete Dirichlet energy and automatically
enforces ``eta'(0) = 0``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.linalg import solve_banded

from .potentials import PotentialSpec, TrapGeometry, eval_potential, level_radius


class RadialSolveError(RuntimeError):
    pass


class MaxIterations(RadialSolveError):
    pass


class NonPositive(RadialSolveError):
    pass


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialGrid:
    h: float
    n: int

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @property
    def R_max(self) -> float:
        return self.n * self.h

    @property
    def weights(self) -> np.ndarray:
        """Cell areas divided by 2 pi."""
        w = self.r * self.h
        w[0] = self.h**2 / 8.0
        return w

    @property
    def r_half(self) -> np.ndarray:
        """Radii of the cell faces r_{i+1/2}, i = 0 .. n-1."""
        return (np.arange(self.n) + 0.5) * self.h

    def integrate(self, values) -> float:
        """Discrete ``int_{R^2} values dx`` for radial values on the nodes."""
        return 2.0 * math.pi * float(np.dot(self.weights, values))


def wkb_decay_radius(spec: PotentialSpec, geom: TrapGeometry, eps: float, target: float = 1e-14) -> float:
    """Radius where the WKB tail ``exp(-int_R^r sqrt(V - lambda0)/eps)`` reaches ``target``."""
    need = -math.log(target)
    r = np.linspace(geom.R, 50.0 * geom.R, 200001)
    kappa = np.sqrt(np.clip(eval_potential(spec, r) - geom.lambda0, 0.0, None)) / eps
    phase = np.concatenate([[0.0], np.cumsum(0.5 * (kappa[1:] + kappa[:-1]) * np.diff(r))])
    idx = int(np.searchsorted(phase, need))
    return float(r[min(idx, len(r) - 1)])


def make_grid(
    spec: PotentialSpec,
    geom: TrapGeometry,
    eps: float,
    h: float | None = None,
    r_max: float | None = None,
    decay_target: float = 1e-14,
) -> RadialGrid:
    """Uniform grid with ``h <= eps/3`` reaching past the predicted decay radius.

    The Airy boundary layer of width ``eps**(2/3)`` is added to the WKB radius
    as a margin so the Dirichlet wall sits well inside the decayed tail.
    """
    if h is None:
        h = eps / 10.0
    if h > eps / 3.0 + 1e-15:
        raise ValueError(f"h={h} does not resolve the healing length (need h <= eps/3)")
    if r_max is None:
        r_max = wkb_decay_radius(spec, geom, eps, decay_target) + 2.0 * eps ** (2.0 / 3.0)
    n = int(math.ceil(r_max / h))
    return RadialGrid(h=float(h), n=n)


# ---------------------------------------------------------------------------
# discrete operators
# ---------------------------------------------------------------------------


def laplacian_bands(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(lower, diag, upper) of the finite-volume radial Laplacian with eta_n = 0."""
    w = grid.weights
    rh = grid.r_half
    h = grid.h
    upper = rh / (h * w)
    lower = np.zeros(grid.n)
    lower[1:] = rh[:-1] / (h * w[1:])
    diag = -(upper + lower)
    return lower, diag, upper


def apply_laplacian(grid: RadialGrid, eta: np.ndarray) -> np.ndarray:
    lower, diag, upper = laplacian_bands(grid)
    out = diag * eta
    out[:-1] += upper[:-1] * eta[1:]
    out[1:] += lower[1:] * eta[:-1]
    return out


def dirichlet_energy(grid: RadialGrid, eta: np.ndarray) -> float:
    """``int |eta'|^2`` from face differences (eta = 0 at R_max)."""
    ext = np.append(eta, 0.0)
    return 2.0 * math.pi * float(np.sum(grid.r_half * np.diff(ext) ** 2) / grid.h)


def energy(grid: RadialGrid, eta: np.ndarray, V: np.ndarray, eps: float) -> float:
    """Discrete non-rotating energy G_eps."""
    pot = grid.integrate(0.25 * eta**4 + 0.5 * V * eta**2) / eps**2
    return 0.5 * dirichlet_energy(grid, eta) + pot


def energy_gradient(grid: RadialGrid, eta: np.ndarray, V: np.ndarray, eps: float) -> np.ndarray:
    """L^2 gradient of G_eps: ``-Lap eta + eps^-2 (V + eta^2) eta``."""
    return -apply_laplacian(grid, eta) + (V + eta**2) * eta / eps**2


def mass(grid: RadialGrid, eta: np.ndarray) -> float:
    return grid.integrate(eta**2)


def normalize(grid: RadialGrid, eta: np.ndarray) -> np.ndarray:
    return eta / math.sqrt(mass(grid, eta))


def rayleigh_multiplier(grid: RadialGrid, eta: np.ndarray, V: np.ndarray, eps: float) -> float:
    """lambda_eps as ``eps^2 <eta, grad G> / <eta, eta>`` (nodal form)."""
    g = energy_gradient(grid, eta, V, eps)
    return eps**2 * grid.integrate(eta * g) / mass(grid, eta)


def residual(grid: RadialGrid, eta: np.ndarray, V: np.ndarray, eps: float, lam: float) -> float:
    """``eps^2 || -Lap eta + eps^-2 (V + eta^2 - lam) eta ||_{L^2}``."""
    r = energy_gradient(grid, eta, V, eps) - lam * eta / eps**2
    return eps**2 * math.sqrt(grid.integrate(r**2))


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


@dataclass
class RadialProfile:
    grid: RadialGrid
    eta: np.ndarray
    lambda_eps: float
    eps: float
    residual: float
    iterations: int
    energies: list[float] = field(default_factory=list, repr=False)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def __call__(self, radius):
        """Linear interpolation of eta at arbitrary radii (0 beyond R_max)."""
        r_nodes = np.append(self.grid.r, self.grid.R_max)
        vals = np.append(self.eta, 0.0)
        return np.interp(radius, r_nodes, vals, right=0.0)

    def metadata(self) -> dict[str, Any]:
        return {
            "eps": self.eps,
            "lambda_eps": self.lambda_eps,
            "residual": self.residual,
            "iterations": self.iterations,
            "h": self.grid.h,
            "R_max": self.grid.R_max,
        }

    def dump(self, path, spec: PotentialSpec) -> None:
        """CSV ``r,eta,V`` plus a ``.json`` metadata sidecar."""
        path = Path(path)
        V = eval_potential(spec, self.grid.r)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "eta", "V"])
            for row in zip(self.grid.r, self.eta, V):
                w.writerow([repr(float(x)) for x in row])
        path.with_suffix(".json").write_text(json.dumps(self.metadata(), indent=2))


def tf_profile(geom: TrapGeometry, spec: PotentialSpec, grid: RadialGrid) -> RadialProfile:
    """Thomas-Fermi seed ``sqrt((lambda0 - V)^+)``, renormalized to unit discrete mass."""
    a = geom.lambda0 - eval_potential(spec, grid.r)
    eta = normalize(grid, np.sqrt(np.clip(a, 0.0, None)))
    return RadialProfile(grid, eta, geom.lambda0, float("nan"), float("nan"), 0)


@dataclass
class FlowConfig:
    """Semi-implicit normalized gradient flow settings.

    ``tol`` bounds the Euler-Lagrange residual measured relative to eps^-2.
    """

    dt_factor: float = 0.5
    tol: float = 1e-8
    max_iter: int = 200000
    floor: float = 1e-30
    stagnation_window: int = 5000


def minimize_radial(
    spec: PotentialSpec,
    geom: TrapGeometry,
    eps: float,
    grid: RadialGrid,
    cfg: FlowConfig | None = None,
    seed: np.ndarray | None = None,
) -> RadialProfile:
    """Positive minimizer eta_eps of G_eps on the unit-mass sphere.

    Each step solves ``(1/dt - Lap + V/eps^2) eta* = eta/dt - eta^3/eps^2 +
    lam eta/eps^2`` and renormalizes; converged profiles are fixed points.
    A step that raises the energy is retried with half the time step.
    """
    cfg = cfg or FlowConfig()
    if not 0 < eps <= 0.2:
        raise ValueError("eps must lie in (0, 0.2]")
    if grid.h > eps / 3.0 + 1e-15:
        raise ValueError("grid does not resolve the healing length")
    V = eval_potential(spec, grid.r)
    eta = normalize(grid, np.asarray(seed, dtype=float).copy()) if seed is not None else tf_profile(geom, spec, grid).eta
    eta = normalize(grid, np.maximum(eta, cfg.floor))
    lower, diag, upper = laplacian_bands(grid)
    inv_e2 = 1.0 / eps**2
    dt = cfg.dt_factor * eps**2

    def banded(dt_):
        ab = np.zeros((3, grid.n))
        ab[0, 1:] = -upper[:-1]
        ab[1] = 1.0 / dt_ - diag + V * inv_e2
        ab[2, :-1] = -lower[1:]
        return ab

    ab = banded(dt)
    G = energy(grid, eta, V, eps)
    energies = [G]
    lam = rayleigh_multiplier(grid, eta, V, eps)
    res = residual(grid, eta, V, eps, lam)
    best_res, best_it = res, 0
    it = 0
    while res > cfg.tol:
        if it >= cfg.max_iter or it - best_it > cfg.stagnation_window:
            raise MaxIterations(f"residual {res:.3e} after {it} iterations (tol {cfg.tol:.1e})")
        rhs = eta / dt + inv_e2 * (lam - eta**2) * eta
        new = solve_banded((1, 1), ab, rhs)
        if np.any(new <= 0):
            if np.any(new < -1e-8 * np.max(new)):
                raise NonPositive(f"flow produced negative nodes at iteration {it}")
            new = np.maximum(new, cfg.floor)
        new = normalize(grid, new)
        G_new = energy(grid, new, V, eps)
        if G_new > G + 1e-13 * abs(G):
            dt *= 0.5
            ab = banded(dt)
            if dt < 1e-6 * eps**2:
                raise MaxIterations("time step collapsed while enforcing energy descent")
            continue
        eta, G = new, G_new
        energies.append(G)
        it += 1
        lam = rayleigh_multiplier(grid, eta, V, eps)
        res = residual(grid, eta, V, eps, lam)
        if res < 0.5 * best_res:
            best_res, best_it = res, it
    return RadialProfile(grid, eta, lam, eps, res, it, energies)


def lagrange_multiplier(profile: RadialProfile, spec: PotentialSpec) -> float:
    """``eps^2 int |eta'|^2 + int (V + eta^2) eta^2`` from face differences."""
    grid = profile.grid
    eta = profile.eta
    V = eval_potential(spec, grid.r)
    return profile.eps**2 * dirichlet_energy(grid, eta) + grid.integrate((V + eta**2) * eta**2)


def multiplier_of(eta: np.ndarray, grid: RadialGrid, spec: PotentialSpec, eps: float) -> float:
    """Same identity evaluated on an arbitrary normalized profile (e.g. the TF seed)."""
    V = eval_potential(spec, grid.r)
    return eps**2 * dirichlet_energy(grid, eta) + grid.integrate((V + eta**2) * eta**2)


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------


@dataclass
class ProfileEstimates:
    decay_rate: float
    decay_prefactor: float
    tf_ratio: float
    grad_ratio: float
    monotone_boundary: bool
    monotone_window: tuple[float, float]
    eta_at_rmax: float
    multiplier_ratio: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "decay_rate": self.decay_rate,
            "decay_prefactor": self.decay_prefactor,
            "tf_ratio": self.tf_ratio,
            "grad_ratio": self.grad_ratio,
            "monotone_boundary": self.monotone_boundary,
            "monotone_window": list(self.monotone_window),
            "eta_at_rmax": self.eta_at_rmax,
            "multiplier_ratio": self.multiplier_ratio,
        }


def verify_profile_estimates(profile: RadialProfile, spec: PotentialSpec, geom: TrapGeometry) -> ProfileEstimates:
    eps = profile.eps
    grid = profile.grid
    r = grid.r
    eta = profile.eta
    R = geom.R
    a = geom.lambda0 - eval_potential(spec, r)

    # exterior decay: log eta ~ log(C eps^(1/6)) + c * eps^(-1/3) (sqrt R - sqrt r)
    sel = (r > R) & (r < R + 0.9 * (grid.R_max - R)) & (eta > 1e-250)
    if np.count_nonzero(sel) >= 3:
        x = eps ** (-1.0 / 3.0) * (math.sqrt(R) - np.sqrt(r[sel]))
        slope, intercept = np.polyfit(x, np.log(eta[sel]), 1)
        prefactor = math.exp(intercept) / eps ** (1.0 / 6.0)
    else:
        slope, prefactor = float("nan"), float("nan")

    inner = (r <= R - eps ** (1.0 / 3.0)) & (a > 0)
    tf_ratio = float(np.max(np.abs(eta[inner] ** 2 - a[inner]) / (eps ** (1.0 / 3.0) * a[inner]))) if inner.any() else float("nan")

    d_eta = np.diff(np.append(eta, 0.0)) / grid.h  # at faces r_{i+1/2}
    grad_ratio = eps * float(np.max(np.abs(d_eta)))

    lo = level_radius(geom, spec, -geom.delta0)
    hi = level_radius(geom, spec, geom.delta0)
    faces = grid.r_half
    win = (faces > lo) & (faces < hi)
    monotone = bool(np.all(d_eta[win] <= 1e-8))

    mult = abs(profile.lambda_eps - geom.lambda0) / (eps * math.sqrt(abs(math.log(eps))))
    return ProfileEstimates(
        decay_rate=float(slope),
        decay_prefactor=float(prefactor),
        tf_ratio=tf_ratio,
        grad_ratio=grad_ratio,
        monotone_boundary=monotone,
        monotone_window=(lo, hi),
        eta_at_rmax=float(eta[-1]),
        multiplier_ratio=mult,
    )
