"""Trapping potentials, Thomas-Fermi geometry and structural assumption checks.

All quantities are dimensionless. A potential is radial, so everything here
works with the radius ``r = |x|``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize


class PotentialError(ValueError):
    pass


class NoDiskBulk(PotentialError):
    """The sublevel set {V < lambda0} is not a disk centred at the origin."""


class LevelSetNotDisk(PotentialError):
    pass


class Family(str, enum.Enum):
    HARMONIC = "harmonic"
    HARMONIC_QUARTIC = "harmonic_quartic"
    GAUSSIAN_BUMP = "gaussian_bump"
    POWER_LAW = "power_law"


_DEFAULT_PARAMS: dict[Family, dict[str, float]] = {
    Family.HARMONIC: {},
    Family.HARMONIC_QUARTIC: {"b": 0.5, "k": 1.0},
    Family.GAUSSIAN_BUMP: {"V0": 2.0, "w0": 1.0},
    Family.POWER_LAW: {"p": 1.0, "scale": 1.0},
}


@dataclass(frozen=True)
class PotentialSpec:
    """A radial trap ``V(r)``.

    Families:

    * ``harmonic``: ``r**2``
    * ``harmonic_quartic``: ``(1 - b) r**2 + (k / 4) r**4``
    * ``gaussian_bump``: ``r**2 + V0 exp(-r**2 / w0)``
    * ``power_law``: ``scale * r**p``; only meaningful for the subquadratic
      (``p < 2``) divergence experiment.
    """

    family: Family
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        merged = dict(_DEFAULT_PARAMS[fam])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise PotentialError(f"unknown parameters for {fam.value}: {sorted(unknown)}")
        merged.update({k: float(v) for k, v in self.params.items()})
        object.__setattr__(self, "params", merged)
        if fam is Family.POWER_LAW and (merged["p"] <= 0 or merged["scale"] <= 0):
            raise PotentialError("power_law needs p > 0 and scale > 0")
        if fam is Family.GAUSSIAN_BUMP and merged["w0"] <= 0:
            raise PotentialError("gaussian_bump needs w0 > 0")

    # -- evaluation -------------------------------------------------------
    def __call__(self, r):
        return eval_potential(self, r)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        p = self.params
        if self.family is Family.HARMONIC:
            return 2.0 * r
        if self.family is Family.HARMONIC_QUARTIC:
            return 2.0 * (1.0 - p["b"]) * r + p["k"] * r**3
        if self.family is Family.GAUSSIAN_BUMP:
            return 2.0 * r - 2.0 * r / p["w0"] * p["V0"] * np.exp(-(r**2) / p["w0"])
        return p["scale"] * p["p"] * np.power(r, p["p"] - 1.0, where=r > 0, out=np.zeros_like(r))

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PotentialSpec":
        return cls(Family(data["family"]), dict(data.get("params", {})))

    @classmethod
    def from_json(cls, text: str) -> "PotentialSpec":
        return cls.from_dict(json.loads(text))


def harmonic() -> PotentialSpec:
    return PotentialSpec(Family.HARMONIC)


def eval_potential(spec: PotentialSpec, r):
    """V(r); scalar in, float out, array in, array out."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("radius must be finite and nonnegative")
    p = spec.params
    if spec.family is Family.HARMONIC:
        out = arr**2
    elif spec.family is Family.HARMONIC_QUARTIC:
        out = (1.0 - p["b"]) * arr**2 + 0.25 * p["k"] * arr**4
    elif spec.family is Family.GAUSSIAN_BUMP:
        out = arr**2 + p["V0"] * np.exp(-(arr**2) / p["w0"])
    else:
        out = p["scale"] * arr ** p["p"]
    return float(out) if np.ndim(r) == 0 else out


# ---------------------------------------------------------------------------
# Thomas-Fermi geometry
# ---------------------------------------------------------------------------


@dataclass
class TrapGeometry:
    lambda0: float
    R: float
    growth_exponent: float
    c1: float
    delta0: float
    subquadratic: bool = False
    assumption_flags: dict[str, bool] = field(default_factory=dict)

    def a(self, spec: PotentialSpec, r):
        """Thomas-Fermi density ``lambda0 - V`` (not clipped)."""
        return self.lambda0 - eval_potential(spec, r)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda0": self.lambda0,
            "R": self.R,
            "growth_exponent": self.growth_exponent,
            "c1": self.c1,
            "delta0": self.delta0,
            "subquadratic": self.subquadratic,
            "assumption_flags": dict(self.assumption_flags),
        }


def _outer_scale(spec: PotentialSpec) -> float:
    """A radius beyond which V is certainly large (used to bound scans)."""
    r = 1.0
    while eval_potential(spec, r) < 1e3 and r < 1e6:
        r *= 2.0
    return r


def _sign_changes(spec: PotentialSpec, level: float, r_hi: float, n: int = 20001):
    """Brackets of the roots of V(r) = level on [0, r_hi], refined by brentq."""
    r = np.linspace(0.0, r_hi, n)
    g = level - eval_potential(spec, r)
    pos = g > 0
    idx = np.nonzero(pos[1:] != pos[:-1])[0]
    roots = [
        optimize.brentq(lambda s: level - eval_potential(spec, s), r[i], r[i + 1], xtol=1e-15, rtol=1e-15)
        for i in idx
    ]
    return roots, bool(pos[0])


def _midpoint_romberg(fun, lo: float, hi: float, rtol: float) -> float:
    """Composite midpoint rule with interval doubling and Richardson extrapolation."""
    n = 16
    prev = None
    prev_mid = None
    while True:
        h = (hi - lo) / n
        x = lo + (np.arange(n) + 0.5) * h
        mid = float(np.sum(fun(x)) * h)
        if prev_mid is not None:
            est = (4.0 * mid - prev_mid) / 3.0
            if prev is not None and abs(est - prev) <= rtol * max(abs(est), 1e-300):
                return est
            prev = est
        prev_mid = mid
        n *= 2
        if n > 2**24:
            return (4.0 * mid - prev_mid) / 3.0


def tf_mass(spec: PotentialSpec, lam: float, quad_tol: float = 1e-10) -> float:
    """``2 pi int_0^inf (lam - V(r))^+ r dr``, integrating piecewise between crossings."""
    r_hi = _outer_scale(spec)
    while eval_potential(spec, r_hi) <= lam:
        r_hi *= 2.0
    roots, starts_pos = _sign_changes(spec, lam, r_hi)
    edges = [0.0] + roots + [r_hi]
    total = 0.0
    inside = starts_pos
    for lo, hi in zip(edges[:-1], edges[1:]):
        if inside and hi > lo:
            total += _midpoint_romberg(lambda s: (lam - eval_potential(spec, s)) * s, lo, hi, quad_tol)
        inside = not inside
    return 2.0 * math.pi * total


def _find_lambda0(spec: PotentialSpec, quad_tol: float) -> float:
    r_hi = _outer_scale(spec)
    v_min = float(np.min(eval_potential(spec, np.linspace(0.0, r_hi, 20001))))
    lo = v_min
    hi = max(v_min, 0.0) + 1.0
    while tf_mass(spec, hi, quad_tol) < 1.0:
        lo, hi = hi, hi + 2.0 * (hi - v_min)
    # the mass is strictly increasing once positive, so bisection never loses the root
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tf_mass(spec, mid, quad_tol) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def _disk_radius(spec: PotentialSpec, level: float) -> float | None:
    """R with {V < level} = [0, R), or None when the sublevel set is not a disk."""
    r_hi = _outer_scale(spec)
    while eval_potential(spec, r_hi) <= level:
        r_hi *= 2.0
    roots, starts_pos = _sign_changes(spec, level, r_hi)
    if not starts_pos or len(roots) != 1:
        return None
    return roots[0]


def fit_growth_exponent(spec: PotentialSpec, R: float, c0: float = 0.0) -> tuple[float, float]:
    """Least-squares slope of log V against log r on [max(2R, c0), 8R].

    Returns ``(p, c0)`` where c0 is the smallest constant with
    ``r**p / c0 <= V <= c0 r**p`` on the fitting window (and at least the
    window start).
    """
    lo = max(2.0 * R, c0, 1e-12)
    hi = max(8.0 * R, 2.0 * lo)
    r = np.geomspace(lo, hi, 200)
    v = eval_potential(spec, r)
    if np.any(v <= 0):
        return float("nan"), float("inf")
    p = float(np.polyfit(np.log(r), np.log(v), 1)[0])
    ratio = v / r**p
    const = float(max(np.max(ratio), np.max(1.0 / ratio), lo))
    return p, const


def estimate_c1(spec: PotentialSpec, lambda0: float, R: float, n: int = 400) -> tuple[float, float]:
    """min over r in (R, 10R] of (V - lambda0)/(r^2 - R^2); returns (c1, argmin)."""
    r = R * np.geomspace(1.0 + 1e-4, 10.0, n)
    q = (eval_potential(spec, r) - lambda0) / (r**2 - R**2)
    i = int(np.argmin(q))
    return float(q[i]), float(r[i])


def _choose_delta0(spec: PotentialSpec, lambda0: float, n_samples: int = 21) -> tuple[float, float]:
    """Largest delta0 <= 0.2 lambda0 (halving) with disk level sets and monotone R_delta.

    Returns ``(delta0, C)`` with C the bound 1/C <= dR/dlambda <= C over the window.
    """
    d0 = 0.2 * abs(lambda0) if lambda0 != 0 else 0.1
    for _ in range(30):
        deltas = np.linspace(-2 * d0, 2 * d0, n_samples)
        radii = [_disk_radius(spec, lambda0 + d) for d in deltas]
        if all(rr is not None for rr in radii):
            radii = np.asarray(radii)
            slopes = np.diff(radii) / np.diff(deltas)
            if np.all(slopes > 0):
                C = float(max(np.max(slopes), 1.0 / np.min(slopes)))
                return float(d0), C
        d0 *= 0.5
    return 0.0, float("inf")


def solve_lambda0(spec: PotentialSpec, quad_tol: float = 1e-10) -> TrapGeometry:
    """Chemical potential lambda0 with unit Thomas-Fermi mass and the radius R.

    Raises NoDiskBulk when {V < lambda0} is not a disk (annular bulk).
    """
    lam = _find_lambda0(spec, quad_tol)
    R = _disk_radius(spec, lam)
    if R is None:
        raise NoDiskBulk(f"{{V < lambda0}} is not a disk for {spec.to_dict()} (lambda0={lam:.6g})")
    p, _ = fit_growth_exponent(spec, R)
    c1, _ = estimate_c1(spec, lam, R)
    delta0, _ = _choose_delta0(spec, lam)
    return TrapGeometry(
        lambda0=lam,
        R=R,
        growth_exponent=p,
        c1=c1,
        delta0=delta0,
        subquadratic=bool(p < 2.0 - 0.05),
    )


def level_radius(geom: TrapGeometry, spec: PotentialSpec, delta: float) -> float:
    """R_delta with {V < lambda0 + delta} = B(0, R_delta)."""
    if delta == 0.0:
        return geom.R
    if geom.delta0 > 0 and abs(delta) > 2 * geom.delta0 * (1 + 1e-12):
        raise ValueError(f"|delta| must be <= 2 delta0 = {2 * geom.delta0:.6g}")
    rad = _disk_radius(spec, geom.lambda0 + delta)
    if rad is None:
        raise LevelSetNotDisk(f"level set at delta={delta} is not a disk")
    return rad


# ---------------------------------------------------------------------------
# assumption report
# ---------------------------------------------------------------------------


@dataclass
class AssumptionEntry:
    id: str
    passed: bool
    constants: dict[str, float] = field(default_factory=dict)
    worst_offender_r: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "pass": self.passed,
            "constants": self.constants,
            "worst_offender_r": self.worst_offender_r,
        }


@dataclass
class AssumptionReport:
    entries: list[AssumptionEntry]
    lambda0: float
    R: float | None

    def __getitem__(self, key: str) -> AssumptionEntry:
        for e in self.entries:
            if e.id == key:
                return e
        raise KeyError(key)

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def flags(self) -> dict[str, bool]:
        return {e.id: e.passed for e in self.entries}

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda0": self.lambda0,
            "R": self.R,
            "assumptions": [e.to_dict() for e in self.entries],
        }


def check_assumptions(spec: PotentialSpec, geom: TrapGeometry | None = None) -> AssumptionReport:
    """Evaluate the structural assumptions on the trap; failures are flags, never raised.

    ``geom`` may be omitted (or be unavailable, as for annular bulks); lambda0
    is then recomputed here.
    """
    lam = geom.lambda0 if geom is not None else _find_lambda0(spec, 1e-10)
    R = geom.R if geom is not None else _disk_radius(spec, lam)
    scale = R if R is not None else _outer_scale(spec) / 8
    entries: list[AssumptionEntry] = []

    # nonnegative, radial, C^1
    r = np.linspace(0.0, 10.0 * scale, 20001)
    v = eval_potential(spec, r)
    i_min = int(np.argmin(v))
    dv = spec.derivative(r)
    fd = np.gradient(v, r)
    c1_jump = float(np.max(np.abs(fd[1:-1] - dv[1:-1])) / max(1.0, float(np.max(np.abs(dv)))))
    entries.append(
        AssumptionEntry(
            "nonneg_radial_C1",
            bool(v[i_min] >= 0 and np.all(np.isfinite(dv)) and c1_jump < 1e-3),
            {"min_V": float(v[i_min]), "derivative_mismatch": c1_jump},
            float(r[i_min]),
        )
    )

    # growth r^p / c0 <= V <= c0 r^p for r >= c0, with p >= 2
    if R is not None:
        p, c0 = fit_growth_exponent(spec, R)
    else:
        p, c0 = fit_growth_exponent(spec, scale)
    entries.append(
        AssumptionEntry(
            "growth",
            bool(np.isfinite(p) and p >= 2.0 - 0.05),
            {"p": p, "c0": c0},
            None,
        )
    )

    # disk bulk and disk level sets with 1/C <= dR/dlambda <= C
    if R is None:
        entries.append(AssumptionEntry("disk_bulk", False, {"lambda0": lam}, None))
        entries.append(AssumptionEntry("level_sets", False, {}, None))
        entries.append(AssumptionEntry("quadratic_lower_bound", False, {}, None))
        return AssumptionReport(entries, lam, None)

    entries.append(AssumptionEntry("disk_bulk", True, {"R": R}, R))
    d0, C = _choose_delta0(spec, lam)
    entries.append(
        AssumptionEntry("level_sets", bool(d0 > 0 and np.isfinite(C)), {"delta0": d0, "C": C}, None)
    )

    # V - lambda0 >= c1 (r^2 - R^2) for r >= R. On a bounded window the
    # minimum is always positive for a growing V, so the bound only holds
    # uniformly when the growth is at least quadratic.
    c1, r_worst = estimate_c1(spec, lam, R)
    entries.append(
        AssumptionEntry(
            "quadratic_lower_bound",
            bool(c1 > 0 and np.isfinite(p) and p >= 2.0 - 0.05),
            {"c1": c1},
            r_worst,
        )
    )
    return AssumptionReport(entries, lam, R)
