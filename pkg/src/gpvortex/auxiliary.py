"""Auxiliary functions xi, f = xi / eta^2 and the critical-velocity constant omega0."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from scipy import optimize

from .potentials import PotentialSpec, TrapGeometry, eval_potential, solve_lambda0
from .radial import FlowConfig, RadialGrid, RadialProfile, make_grid, minimize_radial


class TruncationTooTight(RuntimeError):
    pass


def compute_xi(profile: RadialProfile) -> np.ndarray:
    """``xi(r_i) = int_{r_i}^inf s eta^2(s) ds`` consistent with the cell quadrature.

    The sum runs inward from the Dirichlet wall: every cell beyond ``r_i``
    contributes its full mass, cell ``i`` only its outer half-annulus, and the
    axis cell all of its mass. Hence ``xi(0) = mass / 2 pi`` exactly.
    """
    grid = profile.grid
    e2 = profile.eta**2
    cell = grid.weights * e2
    beyond = np.concatenate([np.cumsum(cell[::-1])[::-1][1:], [0.0]])
    own = (grid.r * grid.h / 2.0 + grid.h**2 / 8.0) * e2
    own[0] = cell[0]
    return beyond + own


def compute_f(profile: RadialProfile, xi: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Pointwise ``xi / eta^2`` with its sup and argmax radius."""
    f = xi / profile.eta**2
    i = int(np.argmax(f))
    return f, float(f[i]), float(profile.grid.r[i])


_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def tf_xi(spec: PotentialSpec, geom: TrapGeometry, r) -> np.ndarray:
    """``xi0(r) = int_r^R s a(s) ds`` (zero beyond R) by Gauss-Legendre on [r, R]."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    lo = np.minimum(r, geom.R)
    half = 0.5 * (geom.R - lo)
    mid = 0.5 * (geom.R + lo)
    s = mid[:, None] + half[:, None] * _GL_X[None, :]
    integrand = s * (geom.lambda0 - eval_potential(spec, s))
    return half * (integrand @ _GL_W)


def tf_f(spec: PotentialSpec, geom: TrapGeometry, r) -> np.ndarray:
    """``f0 = xi0 / a`` inside the bulk, 0 outside."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    a = geom.lambda0 - eval_potential(spec, r)
    out = np.zeros_like(r)
    inside = (r < geom.R) & (a > 0)
    out[inside] = tf_xi(spec, geom, r[inside]) / a[inside]
    return out


def f0_supremum(spec: PotentialSpec, geom: TrapGeometry, n_scan: int = 2001) -> tuple[float, float]:
    """``(||f0||_inf, argmax)``: grid scan refined by a bounded scalar search."""
    r = np.linspace(0.0, geom.R, n_scan)
    f = tf_f(spec, geom, r)
    i = int(np.argmax(f))
    lo = r[max(i - 1, 0)]
    hi = r[min(i + 1, n_scan - 1)]
    res = optimize.minimize_scalar(
        lambda x: -float(tf_f(spec, geom, [x])[0]), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
    )
    best_r, best_f = (float(res.x), float(-res.fun)) if -res.fun >= f[i] else (float(r[i]), float(f[i]))
    return best_f, best_r


@dataclass
class AuxBundle:
    r: np.ndarray
    xi_eps: np.ndarray
    f_eps: np.ndarray
    xi0: np.ndarray
    f0: np.ndarray
    f0_sup: float
    omega0: float
    argmax_f0: float
    f_eps_sup: float
    argmax_f_eps: float

    def summary(self, bound_ratios: dict[str, float] | None = None) -> dict[str, Any]:
        out = {
            "f0_sup": self.f0_sup,
            "omega0": self.omega0,
            "argmax_f0": self.argmax_f0,
            "f_eps_sup": self.f_eps_sup,
            "argmax_f_eps": self.argmax_f_eps,
        }
        if bound_ratios is not None:
            out["bound_ratios"] = bound_ratios
        return out

    def dump(self, path, bound_ratios: dict[str, float] | None = None) -> None:
        """CSV ``r,xi_eps,f_eps,xi0,f0`` plus a JSON summary sidecar."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "xi_eps", "f_eps", "xi0", "f0"])
            for row in zip(self.r, self.xi_eps, self.f_eps, self.xi0, self.f0):
                w.writerow([repr(float(x)) for x in row])
        path.with_suffix(".json").write_text(json.dumps(self.summary(bound_ratios), indent=2))


def aux_bundle(profile: RadialProfile, spec: PotentialSpec, geom: TrapGeometry) -> AuxBundle:
    r = profile.grid.r
    xi = compute_xi(profile)
    f, f_sup, f_arg = compute_f(profile, xi)
    f0_sup, f0_arg = f0_supremum(spec, geom)
    return AuxBundle(
        r=r,
        xi_eps=xi,
        f_eps=f,
        xi0=tf_xi(spec, geom, r),
        f0=tf_f(spec, geom, r),
        f0_sup=f0_sup,
        omega0=1.0 / (2.0 * f0_sup),
        argmax_f0=f0_arg,
        f_eps_sup=f_sup,
        argmax_f_eps=f_arg,
    )


def omega0(spec: PotentialSpec, geom: TrapGeometry | None = None) -> float:
    geom = geom or solve_lambda0(spec)
    return 1.0 / (2.0 * f0_supremum(spec, geom)[0])


@dataclass
class AuxBounds:
    exterior_ratio: float
    interior_ratio: float
    grad_xi_sup: float
    f_diff_ratio: float

    def to_dict(self) -> dict[str, float]:
        return {
            "exterior_ratio": self.exterior_ratio,
            "interior_ratio": self.interior_ratio,
            "grad_xi_sup": self.grad_xi_sup,
            "f_diff_ratio": self.f_diff_ratio,
        }


def verify_aux_bounds(aux: AuxBundle, profile: RadialProfile, geom: TrapGeometry, eps: float) -> AuxBounds:
    r = aux.r
    R = geom.R
    e23 = eps ** (2.0 / 3.0)
    # the node next to the Dirichlet wall is excluded: f there is a wall artifact
    body = np.arange(len(r)) < len(r) - 1
    ext = (r >= R) & body
    inn = r < R
    return AuxBounds(
        exterior_ratio=float(np.max(aux.f_eps[ext]) / e23),
        interior_ratio=float(np.max(aux.f_eps[inn] / ((R - r[inn]) + e23))),
        grad_xi_sup=float(np.max(r * profile.eta**2)),
        f_diff_ratio=float(np.max(np.abs(aux.f_eps[body] - aux.f0[body])) / eps ** (1.0 / 3.0)),
    )


# ---------------------------------------------------------------------------
# subquadratic traps
# ---------------------------------------------------------------------------


@dataclass
class DivergenceReport:
    eps: float
    growth_exponent: float
    subquadratic: bool
    f_at: dict[str, float]
    strictly_increasing_2R_4R: bool
    ratio_4R_R: float
    loglog_slope_2R_4R: float
    lower_bound_exponent: float
    eta_tail_max: float

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def subquadratic_divergence(
    spec: PotentialSpec,
    eps: float,
    grid: RadialGrid | None = None,
    geom: TrapGeometry | None = None,
    cfg: FlowConfig | None = None,
    tail_limit: float = 1e-10,
) -> DivergenceReport:
    """Sample f_eps on [R, 4R] for a (typically subquadratic) trap at zero rotation.

    Raises TruncationTooTight when eta has not decayed below ``tail_limit``
    over the outer tenth of the grid.
    """
    geom = geom or solve_lambda0(spec)
    R = geom.R
    if grid is None:
        base = make_grid(spec, geom, eps)
        grid = base if base.R_max >= 5.0 * R else make_grid(spec, geom, eps, r_max=5.0 * R)
    if grid.R_max < 4.0 * R * 1.05:
        raise TruncationTooTight(f"R_max={grid.R_max:.4g} does not reach past 4R={4 * R:.4g}")
    profile = minimize_radial(spec, geom, eps, grid, cfg)
    tail = profile.eta[grid.r >= 0.9 * grid.R_max]
    tail_max = float(np.max(tail)) if tail.size else float(profile.eta[-1])
    if tail_max > tail_limit:
        raise TruncationTooTight(f"eta={tail_max:.3e} near R_max; extend the grid")
    xi = compute_xi(profile)
    f, _, _ = compute_f(profile, xi)
    r = grid.r
    at = {k: float(np.interp(m * R, r, f)) for k, m in (("R", 1.0), ("2R", 2.0), ("4R", 4.0))}
    win = (r >= 2.0 * R) & (r <= 4.0 * R)
    slope = float(np.polyfit(np.log(r[win]), np.log(f[win]), 1)[0])
    p = geom.growth_exponent
    return DivergenceReport(
        eps=eps,
        growth_exponent=p,
        subquadratic=geom.subquadratic,
        f_at=at,
        strictly_increasing_2R_4R=bool(np.all(np.diff(f[win]) > 0)),
        ratio_4R_R=at["4R"] / at["R"],
        loglog_slope_2R_4R=slope,
        lower_bound_exponent=1.0 - p / 2.0,
        eta_tail_max=tail_max,
    )
