"""Rotating energy on a Cartesian grid: minimization, energy splitting, diagnostics.

Discretization
--------------
Interior nodes ``x_j = -L + j h`` (``j = 1..n``, ``h = 2L/(n+1)``) with
``u = 0`` on the boundary. The kinetic term is the 5-point Dirichlet form
``1/2 sum_edges |u_j - u_i|^2``; the rotation term uses centered differences
and the real antisymmetric operator ``A = x D_y - y D_x``, so
``x_perp . (iu, grad u) = Im(conj(u) A u)``. With this convention
``(iu, grad u) = rho^2 grad(phase)``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy.fft as sfft
from scipy import ndimage
from scipy.interpolate import RectBivariateSpline
from scipy.sparse import diags, identity, kron
from scipy.sparse.linalg import splu

from .auxiliary import compute_xi
from .potentials import PotentialSpec, TrapGeometry, eval_potential
from .radial import RadialProfile


class GP2DError(RuntimeError):
    pass


class MaxIterations(GP2DError):
    pass


class ConfinementViolated(ValueError):
    pass


class ProfileMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# grid and stencils
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid2D:
    n: int
    L: float

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n + 1)

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(1, self.n + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    def radius(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.hypot(X, Y)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Real inner product ``Re sum conj(a) b h^2``."""
        return float(np.real(np.vdot(a, b))) * self.h**2

    def norm2(self, a: np.ndarray) -> float:
        return float(np.sum(np.abs(a) ** 2)) * self.h**2

    def check_resolution(self, eps: float) -> None:
        if self.h > eps / 3.0 + 1e-12:
            raise ValueError(f"h={self.h:.4g} exceeds eps/3={eps / 3:.4g}")


def laplacian(u: np.ndarray, h: float) -> np.ndarray:
    out = -4.0 * u
    out[1:, :] += u[:-1, :]
    out[:-1, :] += u[1:, :]
    out[:, 1:] += u[:, :-1]
    out[:, :-1] += u[:, 1:]
    return out / h**2


def _dx(u: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(u)
    out[1:-1, :] = u[2:, :] - u[:-2, :]
    out[0, :] = u[1, :]
    out[-1, :] = -u[-2, :]
    return out / (2.0 * h)


def _dy(u: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(u)
    out[:, 1:-1] = u[:, 2:] - u[:, :-2]
    out[:, 0] = u[:, 1]
    out[:, -1] = -u[:, -2]
    return out / (2.0 * h)


class _Operators:
    """Cached coordinate arrays and the DST preconditioner for one grid."""

    def __init__(self, grid: Grid2D, V: np.ndarray, eps: float, Omega: float):
        self.grid = grid
        self.h = grid.h
        self.X, self.Y = grid.mesh()
        self.V = V
        self.eps = eps
        self.Omega = Omega
        k = np.arange(1, grid.n + 1)
        mu = 4.0 / self.h**2 * np.sin(np.pi * k / (2 * (grid.n + 1))) ** 2
        self.lap_eig = mu[:, None] + mu[None, :]

    def rot(self, u: np.ndarray) -> np.ndarray:
        """``A u = x D_y u - y D_x u``."""
        return self.X * _dy(u, self.h) - self.Y * _dx(u, self.h)

    def H(self, u: np.ndarray) -> np.ndarray:
        """Quadratic part of the gradient: ``-Lap u + V u / eps^2 + 2 i Omega A u``."""
        out = -laplacian(u, self.h) + self.V * u / self.eps**2
        if self.Omega != 0.0:
            out = out + 2j * self.Omega * self.rot(u)
        return out

    def precondition(self, r: np.ndarray, shift: float) -> np.ndarray:
        rt = sfft.dstn(r, type=1, norm="ortho")
        rt /= self.lap_eig + shift
        return sfft.idstn(rt, type=1, norm="ortho")

    def sparse_H(self):
        """``H`` as a sparse matrix acting on ``u.ravel()``."""
        if getattr(self, "_Hs", None) is None:
            n, h = self.grid.n, self.h
            one = np.ones(n - 1)
            T = diags([-one, 2.0 * np.ones(n), -one], [-1, 0, 1]) / h**2
            D = diags([-one, one], [-1, 1]) / (2.0 * h)
            I = identity(n)
            Hs = kron(T, I) + kron(I, T) + diags(self.V.ravel() / self.eps**2)
            if self.Omega != 0.0:
                A = diags(self.X.ravel()) @ kron(I, D) - diags(self.Y.ravel()) @ kron(D, I)
                Hs = Hs + 2j * self.Omega * A
            self._Hs = Hs.tocsr()
        return self._Hs

    def tail_solver(self, mask: np.ndarray, lam: float):
        """Factorization of ``H - lam`` restricted to the masked nodes (cached per mask)."""
        key = mask.tobytes()
        cache = getattr(self, "_tail", None)
        if cache is None or cache[0] != key:
            idx = np.flatnonzero(mask.ravel())
            rest = np.flatnonzero(~mask.ravel())
            Hs = self.sparse_H()
            rows = Hs[idx]
            M = rows[:, idx] - lam * identity(idx.size, format="csr")
            self._tail = (key, idx, rest, splu(M.tocsc()))
        return self._tail[1:]


def potential_on_grid(spec: PotentialSpec, grid: Grid2D) -> np.ndarray:
    return eval_potential(spec, grid.radius())


def energy_terms(u: np.ndarray, grid: Grid2D, V: np.ndarray, eps: float, Omega: float) -> dict[str, float]:
    """The four terms of the rotating energy and their sum."""
    h = grid.h
    dxs = np.diff(u, axis=0, prepend=0, append=0)
    dys = np.diff(u, axis=1, prepend=0, append=0)
    kinetic = 0.5 * (np.sum(np.abs(dxs) ** 2) + np.sum(np.abs(dys) ** 2))
    rho = np.abs(u) ** 2
    quartic = 0.25 / eps**2 * float(np.sum(rho**2)) * h**2
    potential = 0.5 / eps**2 * float(np.sum(V * rho)) * h**2
    if Omega != 0.0:
        X, Y = grid.mesh()
        Au = X * _dy(u, h) - Y * _dx(u, h)
        rotation = -Omega * float(np.sum(np.imag(np.conj(u) * Au))) * h**2
    else:
        rotation = 0.0
    kinetic = float(kinetic)
    return {
        "kinetic": kinetic,
        "quartic": quartic,
        "potential": potential,
        "rotation": rotation,
        "total": kinetic + quartic + potential + rotation,
    }


def energy(u, spec: PotentialSpec, eps: float, Omega: float, grid: Grid2D | None = None) -> dict[str, float]:
    """Term-by-term rotating energy of a field (array or ComplexField2D)."""
    if isinstance(u, ComplexField2D):
        grid = u.grid
        u = u.u
    if grid is None:
        raise ValueError("grid required for raw arrays")
    return energy_terms(u, grid, potential_on_grid(spec, grid), eps, Omega)


def energy_gradient(u: np.ndarray, grid: Grid2D, V: np.ndarray, eps: float, Omega: float) -> np.ndarray:
    """L^2 gradient (real inner product with weight h^2) of the discrete energy."""
    ops = _Operators(grid, V, eps, Omega)
    return ops.H(u) + np.abs(u) ** 2 * u / eps**2


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass
class ComplexField2D:
    grid: Grid2D
    u: np.ndarray
    eps: float
    Omega: float
    energy: float = float("nan")
    residual: float = float("nan")
    seed: int | None = None
    init: str = ""
    iterations: int = 0
    converged: bool = False
    runs: list[dict[str, Any]] = field(default_factory=list)

    def metadata(self) -> dict[str, Any]:
        return {
            "n": self.grid.n,
            "L": self.grid.L,
            "eps": self.eps,
            "Omega": self.Omega,
            "energy": self.energy,
            "residual": self.residual,
            "seed": self.seed,
            "init": self.init,
            "iterations": self.iterations,
            "converged": self.converged,
            "runs": self.runs,
        }

    def dump(self, path, fmt: str = "npz") -> Path:
        """Binary ``.npz`` (x, y, re_u, im_u) or CSV ``x,y,re_u,im_u``; JSON sidecar."""
        path = Path(path)
        X, Y = self.grid.mesh()
        if fmt == "npz":
            path = path.with_suffix(".npz")
            np.savez_compressed(path, x=X, y=Y, re_u=self.u.real, im_u=self.u.imag)
        elif fmt == "csv":
            path = path.with_suffix(".csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x", "y", "re_u", "im_u"])
                for row in zip(X.ravel(), Y.ravel(), self.u.real.ravel(), self.u.imag.ravel()):
                    w.writerow([repr(float(v)) for v in row])
        else:
            raise ValueError(f"unknown field format {fmt!r}")
        path.with_suffix(".json").write_text(json.dumps(self.metadata(), indent=2))
        return path

    @classmethod
    def load(cls, path) -> "ComplexField2D":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        grid = Grid2D(int(meta["n"]), float(meta["L"]))
        if path.suffix == ".csv":
            data = np.loadtxt(path, delimiter=",", skiprows=1)
            u = (data[:, 2] + 1j * data[:, 3]).reshape(grid.n, grid.n)
        else:
            with np.load(path) as z:
                u = z["re_u"] + 1j * z["im_u"]
        out = cls(grid, u, float(meta["eps"]), float(meta["Omega"]))
        for key in ("energy", "residual", "seed", "init", "iterations", "converged", "runs"):
            if key in meta:
                setattr(out, key, meta[key])
        return out


# ---------------------------------------------------------------------------
# non-rotating ground state on the grid
# ---------------------------------------------------------------------------


@dataclass
class GroundState2D:
    """The positive minimizer at zero rotation, solved on the 2D grid itself."""

    grid: Grid2D
    eta: np.ndarray
    lam: float  # multiplier of the gradient, i.e. lambda_eps / eps^2
    eps: float
    residual: float
    newton_steps: int

    @property
    def lambda_eps(self) -> float:
        return self.lam * self.eps**2


def _neg_laplacian_matrix(grid: Grid2D):
    n = grid.n
    one = -np.ones(n - 1)
    T = diags([one, 2.0 * np.ones(n), one], [-1, 0, 1]) / grid.h**2
    I = identity(n)
    return (kron(T, I) + kron(I, T)).tocsc()


def ground_state_2d(
    profile: RadialProfile,
    spec: PotentialSpec,
    grid: Grid2D,
    tol: float = 1e-12,
    max_steps: int = 30,
) -> GroundState2D:
    """Bordered Newton iteration for ``-Lap eta + (V + eta^2 - lam) eta / eps^2 = 0``, unit mass.

    Seeded by the radial profile interpolated onto the grid. The discrete
    equation is solved to round-off so that the energy splitting holds
    exactly at the discrete level.
    """
    eps = profile.eps
    r = grid.radius()
    V = eval_potential(spec, r)
    eta = np.maximum(profile(r), 1e-300)
    eta /= math.sqrt(grid.norm2(eta))
    K = _neg_laplacian_matrix(grid)
    Vf = V.ravel()
    e = eta.ravel()
    h2 = grid.h**2
    inv_e2 = 1.0 / eps**2

    def F(e_, lam_):
        return K @ e_ + inv_e2 * (Vf + e_**2) * e_ - lam_ * e_

    lam = float(e @ (K @ e) + inv_e2 * np.sum((Vf + e**2) * e**2)) * h2
    res = float("inf")
    steps = 0
    for steps in range(1, max_steps + 1):
        Fe = F(e, lam)
        c = 0.5 * (h2 * float(e @ e) - 1.0)
        res = eps**2 * math.sqrt(h2 * float(Fe @ Fe))
        if res < tol and abs(c) < 1e-14:
            break
        J = (K + diags(inv_e2 * (Vf + 3.0 * e**2) - lam)).tocsc()
        lu = splu(J)
        a = lu.solve(-Fe)
        b = lu.solve(e)
        dlam = (-c - h2 * float(e @ a)) / (h2 * float(e @ b))
        e = e + a + dlam * b
        lam = lam + dlam
        if np.any(e <= 0):
            e = np.maximum(e, 1e-300)
    else:
        raise GP2DError(f"Newton did not converge: residual {res:.3e}")
    eta = e.reshape(grid.n, grid.n)
    eta = eta / math.sqrt(grid.norm2(eta))
    return GroundState2D(grid, eta, lam, eps, res, steps)


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------


@dataclass
class SolverConfig:
    """Settings for the 2D minimization.

    ``tol`` bounds ``eps^2 ||grad E - lambda u||_{L^2}``. ``inits`` cycles over
    ``uniform`` (vortex-free), ``noise`` (smooth random phase of amplitude
    ``noise`` radians) and ``vortex`` (a +1 phase singularity at
    ``vortex_at``; ``None`` puts it at the maximizer of f0 on the positive
    x axis). ``base`` selects the seed modulus: the grid ground state
    ``eta`` or the Thomas-Fermi profile ``tf``.

    When a grid with half the resolution still has ``h <= eps / coarse_ratio``
    each run is first relaxed there and the result interpolated back as the
    starting point (``coarse_ratio = 0`` disables this). ``projection``
    removes the radial component of the preconditioned residual either
    orthogonally or in the preconditioner metric.

    ``tail_level``: after each run the nodes where the grid ground state is
    below this fraction of its peak are re-solved exactly with the rest of
    the field frozen (``None`` disables). The change is kept only if it does
    not raise the energy.
    """

    tol: float = 1e-6
    max_iter: int = 3000
    restarts: int = 3
    inits: tuple[str, ...] = ("uniform", "noise", "vortex")
    noise: float = 0.5
    noise_length: float | None = None
    vortex_at: tuple[float, float] | None = None
    base: str = "eta"
    seed: int = 0
    precond_shift: float | None = None
    refresh: int = 25
    tie_rtol: float = 1e-12
    raise_on_max_iter: bool = False
    projection: str = "orthogonal"
    coarse_ratio: float = 2.5
    tail_level: float | None = 1e-3


@dataclass
class RunResult:
    u: np.ndarray
    energy: float
    residual: float
    iterations: int
    converged: bool
    energies: list[float]
    lam: float
    residuals: list[float] = field(default_factory=list)


def _trig_coefficients(Q0: float, Q1: float, Q2: float, T: tuple[float, ...]) -> np.ndarray:
    """Fourier coefficients (cos/sin up to 4 theta) of E along the great circle."""
    thetas = 2 * np.pi * np.arange(9) / 9
    c = np.cos(thetas)
    s = np.sin(thetas)
    vals = (
        0.5 * (c * c * Q0 + 2 * c * s * Q1 + s * s * Q2)
        + T[0] * c**4
        + 4 * T[1] * c**3 * s
        + T[2] * c**2 * s**2
        + 4 * T[3] * c * s**3
        + T[4] * s**4
    )
    return np.fft.rfft(vals) / 9


def _trig_eval(coef: np.ndarray, theta: float, deriv: int = 0) -> float:
    k = np.arange(len(coef))
    a = 2 * coef.real
    b = -2 * coef.imag
    a[0] = coef[0].real
    b[0] = 0.0
    ck = np.cos(k * theta)
    sk = np.sin(k * theta)
    if deriv == 0:
        return float(np.sum(a * ck + b * sk))
    if deriv == 1:
        return float(np.sum(k * (-a * sk + b * ck)))
    return float(np.sum(k * k * (-a * ck - b * sk)))


def _line_search(coef: np.ndarray) -> float:
    """First local minimizer of E(theta) for theta > 0 (E'(0) < 0 assumed)."""
    e0 = _trig_eval(coef, 0.0)
    d1 = _trig_eval(coef, 0.0, 1)
    d2 = _trig_eval(coef, 0.0, 2)
    theta = -d1 / d2 if d2 > 0 else 1e-3
    theta = min(max(theta, 1e-12), 0.5)
    for _ in range(50):
        g = _trig_eval(coef, theta, 1)
        c2 = _trig_eval(coef, theta, 2)
        if c2 <= 0:
            break
        step = -g / c2
        new = min(max(theta + step, 0.25 * theta), 2.0 * theta, 0.5)
        if abs(new - theta) <= 1e-14 * max(theta, 1e-300):
            theta = new
            break
        theta = new
    while _trig_eval(coef, theta) > e0 and theta > 1e-16:
        theta *= 0.5
    return theta


def _polish_tail(u: np.ndarray, ops: _Operators, mask: np.ndarray, lam: float, steps: int = 4) -> np.ndarray:
    """Solve the stationarity equation on the low-density nodes with the rest of u held fixed.

    There ``|u|^2`` is negligible against ``V - lambda``, so the equation is
    linear to working precision and one factorization (reused across
    restarts, refined with the exact residual) fixes the tail to relative
    accuracy even where u is many orders of magnitude below its peak. The
    global residual is blind to those nodes.
    """
    idx, _, lu = ops.tail_solver(mask, lam)
    inv_e2 = 1.0 / ops.eps**2
    uf = u.ravel().copy()
    Hs = ops.sparse_H()
    Hrows = Hs[idx]
    for _ in range(steps):
        r = Hrows @ uf + inv_e2 * np.abs(uf[idx]) ** 2 * uf[idx] - lam * uf[idx]
        if np.iscomplexobj(r) and lu.U.dtype.kind != "c":
            delta = lu.solve(np.ascontiguousarray(r.real)) + 1j * lu.solve(np.ascontiguousarray(r.imag))
        else:
            delta = lu.solve(r)
        uf[idx] -= delta
        if np.max(np.abs(delta)) <= 1e-14 * np.max(np.abs(uf)):
            break
    return uf.reshape(u.shape)


def _pcg(
    u0: np.ndarray,
    ops: _Operators,
    cfg: SolverConfig,
) -> RunResult:
    """Preconditioned nonlinear CG on the unit-mass sphere with exact great-circle steps."""
    grid = ops.grid
    eps = ops.eps
    inv_e2 = 1.0 / eps**2
    h2 = grid.h**2
    u = u0 / math.sqrt(grid.norm2(u0))
    Hu = ops.H(u)
    rho = np.abs(u) ** 2
    g = Hu + inv_e2 * rho * u
    lam = grid.inner(u, g)
    shift = cfg.precond_shift if cfg.precond_shift is not None else max(lam, 1.0)

    def total_energy(Hu_, u_, rho_):
        return 0.5 * grid.inner(u_, Hu_) + 0.25 * inv_e2 * float(np.sum(rho_**2)) * h2

    E = total_energy(Hu, u, rho)
    energies = [E]
    residuals: list[float] = []
    d_prev = None
    r_prev = None
    p_prev_dot = None
    res = float("inf")
    it = 0
    while True:
        r = g - lam * u
        res = eps**2 * math.sqrt(grid.norm2(r))
        residuals.append(res)
        if res <= cfg.tol or it >= cfg.max_iter:
            break
        p = ops.precondition(r, shift)
        if cfg.projection == "metric":
            Pu = ops.precondition(u, shift)
            p = p - grid.inner(u, p) / grid.inner(u, Pu) * Pu
        else:
            p = p - grid.inner(u, p) * u
        rp = grid.inner(r, p)
        d = -p
        if d_prev is not None and p_prev_dot is not None and p_prev_dot > 0:
            beta = max(0.0, (rp - grid.inner(r_prev, p)) / p_prev_dot)
            if beta > 0:
                dp = d_prev - grid.inner(u, d_prev) * u
                d = -p + beta * dp
        d = d - grid.inner(u, d) * u
        if grid.inner(d, r) >= 0:
            d = -p
            d = d - grid.inner(u, d) * u
        dn = math.sqrt(grid.norm2(d))
        if dn == 0.0:
            break
        dh = d / dn
        Hd = ops.H(dh)
        Q0 = grid.inner(u, Hu)
        Q1 = grid.inner(u, Hd)
        Q2 = grid.inner(dh, Hd)
        A = rho
        B = np.abs(dh) ** 2
        C = np.real(np.conj(u) * dh)
        q = 0.25 * inv_e2 * h2
        T = (
            q * float(np.sum(A * A)),
            q * float(np.sum(A * C)),
            q * float(np.sum(2 * A * B + 4 * C * C)),
            q * float(np.sum(B * C)),
            q * float(np.sum(B * B)),
        )
        coef = _trig_coefficients(Q0, Q1, Q2, T)
        theta = _line_search(coef)
        c, s = math.cos(theta), math.sin(theta)
        u_new = c * u + s * dh
        nrm = math.sqrt(grid.norm2(u_new))
        u_new /= nrm
        it += 1
        if it % cfg.refresh == 0:
            Hu_new = ops.H(u_new)
        else:
            Hu_new = (c * Hu + s * Hd) / nrm
        rho_new = np.abs(u_new) ** 2
        E_new = total_energy(Hu_new, u_new, rho_new)
        if E_new > E + 1e-13 * abs(E):
            # round-off level; restart CG from steepest descent
            Hu_new = ops.H(u_new)
            E_new = total_energy(Hu_new, u_new, rho_new)
            if E_new > E + 1e-12 * abs(E):
                d_prev = None
                p_prev_dot = None
                continue
        u, Hu, rho, E = u_new, Hu_new, rho_new, E_new
        energies.append(E)
        g = Hu + inv_e2 * rho * u
        lam = grid.inner(u, g)
        d_prev = dh * dn
        r_prev = r
        p_prev_dot = rp
    Hu = ops.H(u)
    g = Hu + inv_e2 * np.abs(u) ** 2 * u
    lam = grid.inner(u, g)
    res = eps**2 * math.sqrt(grid.norm2(g - lam * u))
    E = total_energy(Hu, u, np.abs(u) ** 2)
    return RunResult(u, E, res, it, res <= cfg.tol, energies, lam, residuals)


def resample(u: np.ndarray, src: Grid2D, dst: Grid2D) -> np.ndarray:
    """Bicubic interpolation between grids on the same box (zero on the boundary)."""
    xs = np.concatenate([[-src.L], src.x, [src.L]])
    pad = np.pad(u, 1)
    out = RectBivariateSpline(xs, xs, pad.real)(dst.x, dst.x)
    if np.iscomplexobj(u):
        out = out + 1j * RectBivariateSpline(xs, xs, pad.imag)(dst.x, dst.x)
    return out


def _apply_tail(run: RunResult, ops: _Operators, mask: np.ndarray, cfg: SolverConfig) -> tuple[RunResult, float | None]:
    grid = ops.grid
    u = _polish_tail(run.u, ops, mask, run.lam)
    u = u / math.sqrt(grid.norm2(u))
    terms = energy_terms(u, grid, ops.V, ops.eps, ops.Omega)
    change = terms["total"] - run.energy
    if change > 1e-12 * abs(run.energy):
        return run, None
    g = ops.H(u) + np.abs(u) ** 2 * u / ops.eps**2
    lam = grid.inner(u, g)
    res = ops.eps**2 * math.sqrt(grid.norm2(g - lam * u))
    out = RunResult(u, terms["total"], res, run.iterations, res <= cfg.tol, run.energies + [terms["total"]], lam, run.residuals)
    return out, change


def vortex_seed(base: np.ndarray, grid: Grid2D, x0: float, y0: float, core: float, charge: int = 1) -> np.ndarray:
    X, Y = grid.mesh()
    z = (X - x0) + 1j * np.sign(charge) * (Y - y0)
    mod = np.abs(z)
    return base * (z / np.sqrt(mod**2 + core**2)) ** abs(charge)


def _smooth_noise(grid: Grid2D, length: float, rng: np.random.Generator) -> np.ndarray:
    field_ = rng.standard_normal((grid.n, grid.n))
    sm = ndimage.gaussian_filter(field_, sigma=max(length / grid.h, 1.0), mode="constant")
    return sm / max(float(np.std(sm)), 1e-300)


def make_seed(
    kind: str,
    base: np.ndarray,
    grid: Grid2D,
    eps: float,
    cfg: SolverConfig,
    rng: np.random.Generator,
    vortex_at: tuple[float, float] = (0.0, 0.0),
    core: float | None = None,
) -> np.ndarray:
    if kind == "uniform":
        return base.astype(complex)
    if kind == "noise":
        length = cfg.noise_length if cfg.noise_length is not None else 2.0 * eps
        return base * np.exp(1j * cfg.noise * _smooth_noise(grid, length, rng))
    if kind == "vortex":
        return vortex_seed(base, grid, vortex_at[0], vortex_at[1], core if core is not None else eps)
    raise ValueError(f"unknown init {kind!r}")


def minimize_2d(
    spec: PotentialSpec,
    geom: TrapGeometry,
    eps: float,
    Omega: float,
    grid: Grid2D,
    cfg: SolverConfig | None = None,
    ground: GroundState2D | None = None,
    profile: RadialProfile | None = None,
    argmax_f0: float = 0.0,
) -> ComplexField2D:
    """Lowest-energy result of ``cfg.restarts`` minimizations from different seeds.

    Either ``ground`` (the grid ground state) or ``profile`` (radial) must be
    supplied; the ground state is computed from the profile when absent.
    Runs whose energies agree to ``cfg.tie_rtol`` are ranked by restart
    order, so the vortex-free seed wins exact ties.
    """
    cfg = cfg or SolverConfig()
    if abs(Omega) * eps >= 1.0:
        raise ConfinementViolated(f"|Omega|={abs(Omega)} must be below 1/eps={1 / eps}")
    grid.check_resolution(eps)
    if ground is None:
        if profile is None:
            raise ValueError("need a radial profile or a grid ground state")
        ground = ground_state_2d(profile, spec, grid)
    if ground.eps != eps:
        raise ProfileMismatch("ground state computed at a different eps")
    V = potential_on_grid(spec, grid)
    ops = _Operators(grid, V, eps, Omega)
    if cfg.base == "eta":
        base = ground.eta
    elif cfg.base == "tf":
        base = np.sqrt(np.clip(geom.lambda0 - V, 0.0, None))
    else:
        raise ValueError(f"unknown base {cfg.base!r}")
    vortex_at = cfg.vortex_at if cfg.vortex_at is not None else (argmax_f0, 0.0)
    rmin = math.hypot(*vortex_at)
    core = eps / max(math.sqrt(max(geom.lambda0 - eval_potential(spec, rmin), 1e-6)), 0.1)

    coarse = None
    n_coarse = (grid.n + 1) // 2 - 1
    if cfg.coarse_ratio > 0 and n_coarse >= 16 and 2.0 * grid.L / (n_coarse + 1) <= eps / cfg.coarse_ratio:
        cgrid = Grid2D(n_coarse, grid.L)
        coarse = (_Operators(cgrid, potential_on_grid(spec, cgrid), eps, Omega), cgrid)

    tail_mask = None
    if cfg.tail_level is not None:
        tail_mask = ground.eta < cfg.tail_level * float(np.max(ground.eta))
        if not tail_mask.any():
            tail_mask = None

    ss = np.random.SeedSequence(int(cfg.seed) & 0xFFFFFFFFFFFFFFFF)
    child = ss.spawn(cfg.restarts)
    results: list[tuple[str, RunResult]] = []
    summaries: list[dict[str, Any]] = []
    for k in range(cfg.restarts):
        kind = cfg.inits[k % len(cfg.inits)]
        rng = np.random.default_rng(child[k])
        u0 = make_seed(kind, base, grid, eps, cfg, rng, vortex_at=vortex_at, core=core)
        coarse_iters = 0
        if coarse is not None:
            cops, cgrid = coarse
            pre = _pcg(resample(u0, grid, cgrid), cops, cfg)
            u0 = resample(pre.u, cgrid, grid)
            coarse_iters = pre.iterations
        run = _pcg(u0, ops, cfg)
        tail_change = None
        if tail_mask is not None:
            run, tail_change = _apply_tail(run, ops, tail_mask, cfg)
        if not run.converged and cfg.raise_on_max_iter:
            raise MaxIterations(f"{kind} run: residual {run.residual:.3e} after {run.iterations} iterations")
        results.append((kind, run))
        summaries.append(
            {
                "init": kind,
                "energy": run.energy,
                "residual": run.residual,
                "iterations": run.iterations,
                "converged": run.converged,
                "energy_nonincreasing": bool(np.all(np.diff(run.energies) <= 1e-12 * abs(run.energy))),
                "coarse_iterations": coarse_iters,
                "tail_energy_change": tail_change,
            }
        )
    pool = [i for i, (_, r) in enumerate(results) if r.converged] or list(range(len(results)))
    e_min = min(results[i][1].energy for i in pool)
    best = next(i for i in pool if results[i][1].energy <= e_min + cfg.tie_rtol * abs(e_min))
    kind, run = results[best]
    return ComplexField2D(
        grid=grid,
        u=run.u,
        eps=eps,
        Omega=Omega,
        energy=run.energy,
        residual=run.residual,
        seed=cfg.seed,
        init=kind,
        iterations=run.iterations,
        converged=run.converged,
        runs=summaries,
    )


# ---------------------------------------------------------------------------
# energy splitting
# ---------------------------------------------------------------------------


@dataclass
class ChiConfig:
    """Cutoff equal to 1 at distance >= 2 delta from the bulk edge, 0 at <= delta.

    ``delta = |log eps|^(-3/2)`` by default; the ramp is a C^1 smoothstep with
    slope at most ``1.5 / delta``.
    """

    delta: float | None = None

    def resolve(self, eps: float) -> float:
        return self.delta if self.delta is not None else abs(math.log(eps)) ** -1.5


def chi_field(dist: np.ndarray, delta: float) -> np.ndarray:
    t = np.clip((dist - delta) / delta, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass
class EnergyBreakdown:
    E_total: float
    kinetic: float
    quartic: float
    potential: float
    rotation: float
    G_eta: float
    F_v: float
    F_v_jacobian: float
    A1: float
    A2: float
    B: float
    chi: dict[str, float]
    eps_tilde: float

    @property
    def splitting_residual(self) -> float:
        return abs(self.E_total - self.G_eta - self.F_v) / abs(self.E_total)

    def to_dict(self) -> dict[str, Any]:
        out = dict(self.__dict__)
        out["splitting_residual"] = self.splitting_residual
        return out


def radial_xi(profile: RadialProfile, radius: np.ndarray) -> np.ndarray:
    """xi_eps interpolated at arbitrary radii (0 beyond R_max)."""
    xi = compute_xi(profile)
    r_nodes = np.append(profile.grid.r, profile.grid.R_max)
    return np.interp(radius, r_nodes, np.append(xi, 0.0), right=0.0)


def _weighted_edges(u: np.ndarray, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``eta_i eta_j |v_j - v_i|^2`` on x- and y-edges, from u-side expressions.

    Boundary edges (to the u = eta = 0 ghost layer) carry zero weight.
    """
    s = np.sqrt(eta)

    def edge(a, b, sa, sb):
        return np.abs(b * (sa / sb) - a * (sb / sa)) ** 2

    ex = edge(u[:-1, :], u[1:, :], s[:-1, :], s[1:, :])
    ey = edge(u[:, :-1], u[:, 1:], s[:, :-1], s[:, 1:])
    return ex, ey


def _plaquette_jacobian(v: np.ndarray, h: float) -> np.ndarray:
    """``Jv = Im(conj(v_x) v_y)`` at plaquette centres."""
    v00 = v[:-1, :-1]
    v10 = v[1:, :-1]
    v01 = v[:-1, 1:]
    v11 = v[1:, 1:]
    vx = ((v10 - v00) + (v11 - v01)) / (2 * h)
    vy = ((v01 - v00) + (v11 - v10)) / (2 * h)
    return np.imag(np.conj(vx) * vy)


def split_energy(
    u,
    ground: GroundState2D,
    profile: RadialProfile,
    spec: PotentialSpec,
    eps: float,
    Omega: float,
    geom: TrapGeometry,
    chi_cfg: ChiConfig | None = None,
) -> EnergyBreakdown:
    """Density/phase decomposition ``E(u) = G(eta) + F(u/eta)`` and the cutoff split of F."""
    if isinstance(u, ComplexField2D):
        u = u.u
    if abs(profile.eps - eps) > 0 or abs(ground.eps - eps) > 0:
        raise ProfileMismatch(f"profile eps={profile.eps}, ground eps={ground.eps}, requested eps={eps}")
    grid = ground.grid
    h = grid.h
    h2 = h * h
    eta = ground.eta
    V = potential_on_grid(spec, grid)
    terms = energy_terms(u, grid, V, eps, Omega)
    G = energy_terms(eta.astype(complex), grid, V, eps, 0.0)["total"]

    ex, ey = _weighted_edges(u, eta)
    pot_density = 0.25 / eps**2 * (np.abs(u) ** 2 - eta**2) ** 2
    F_kin = 0.5 * (float(np.sum(ex)) + float(np.sum(ey)))
    F_pot = float(np.sum(pot_density)) * h2
    F_rot = terms["rotation"]
    F_v = F_kin + F_pot + F_rot

    # Jacobian form on plaquettes
    X, Y = grid.mesh()
    xc = 0.5 * (grid.x[:-1] + grid.x[1:])
    Xc, Yc = np.meshgrid(xc, xc, indexing="ij")
    rc = np.hypot(Xc, Yc)
    xi_c = radial_xi(profile, rc)
    v = u / eta
    Jv = _plaquette_jacobian(v, h)
    xiJ = xi_c * Jv
    xiJ[~np.isfinite(xiJ)] = 0.0
    F_J = F_kin + F_pot - 2.0 * Omega * float(np.sum(xiJ)) * h2

    delta = (chi_cfg or ChiConfig()).resolve(eps)
    r = grid.radius()
    chi_n = chi_field(geom.R - r, delta)
    chi_c = chi_field(geom.R - rc, delta)
    chi_ex = 0.5 * (chi_n[:-1, :] + chi_n[1:, :])
    chi_ey = 0.5 * (chi_n[:, :-1] + chi_n[:, 1:])
    A1 = 0.5 * (float(np.sum(chi_ex * ex)) + float(np.sum(chi_ey * ey))) + float(np.sum(chi_n * pot_density)) * h2
    A2 = 2.0 * Omega * float(np.sum(chi_c * xiJ)) * h2
    B = (
        0.5 * (float(np.sum((1 - chi_ex) * ex)) + float(np.sum((1 - chi_ey) * ey)))
        + float(np.sum((1 - chi_n) * pot_density)) * h2
        - 2.0 * Omega * float(np.sum((1 - chi_c) * xiJ)) * h2
    )
    d1 = abs(math.log(eps)) ** -1.5
    in_d1 = geom.R - r >= d1
    eps_tilde = eps / float(np.min(eta[in_d1])) if in_d1.any() else float("nan")
    return EnergyBreakdown(
        E_total=terms["total"],
        kinetic=terms["kinetic"],
        quartic=terms["quartic"],
        potential=terms["potential"],
        rotation=terms["rotation"],
        G_eta=G,
        F_v=F_v,
        F_v_jacobian=F_J,
        A1=A1,
        A2=A2,
        B=B,
        chi={"delta": delta, "inner": 2 * delta, "max_grad": 1.5 / delta},
        eps_tilde=eps_tilde,
    )


# ---------------------------------------------------------------------------
# subcriticality
# ---------------------------------------------------------------------------


def bulk_core_mask(grid: Grid2D, geom: TrapGeometry, eps: float) -> np.ndarray:
    """Nodes of D1 = {dist(x, boundary of D) >= |log eps|^(-3/2)}."""
    return geom.R - grid.radius() >= abs(math.log(eps)) ** -1.5


def subcritical_check(u, ground: GroundState2D, geom: TrapGeometry, eps: float) -> tuple[bool, float]:
    """``(min_{D1} |u|/eta >= 1/2, min_{D1} |u|/eta)``."""
    if isinstance(u, ComplexField2D):
        u = u.u
    if ground.eps != eps:
        raise ProfileMismatch("ground state computed at a different eps")
    mask = bulk_core_mask(ground.grid, geom, eps)
    margin = float(np.min(np.abs(u[mask]) / ground.eta[mask]))
    return margin >= 0.5, margin
