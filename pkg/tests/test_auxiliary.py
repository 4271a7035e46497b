import json
import math

import numpy as np
import pytest

from gpvortex.auxiliary import (
    TruncationTooTight,
    aux_bundle,
    compute_f,
    compute_xi,
    f0_supremum,
    omega0,
    subquadratic_divergence,
    tf_f,
    tf_xi,
    verify_aux_bounds,
)
from gpvortex.potentials import Family, PotentialSpec, eval_potential, solve_lambda0
from gpvortex.radial import make_grid

import oracles
from helpers import SWEEP_EPS, harmonic_profile


# -- xi ---------------------------------------------------------------------


@pytest.mark.parametrize("eps", SWEEP_EPS)
def test_xi_at_origin_is_inverse_two_pi(eps):
    xi = compute_xi(harmonic_profile(eps))
    assert abs(xi[0] - 1.0 / (2.0 * math.pi)) <= 1e-8


@pytest.mark.parametrize("eps", SWEEP_EPS)
def test_xi_strictly_decreasing_and_empty_tail(eps):
    prof = harmonic_profile(eps)
    xi = compute_xi(prof)
    assert np.all(np.diff(xi) < 0)
    # only the wall node's own half cell remains
    assert xi[-1] <= prof.grid.R_max * prof.grid.h * prof.eta[-1] ** 2


def test_xi_derivative_identity_second_order(spec, geom):
    eps = 0.1
    errs = []
    for h in (eps / 4, eps / 8, eps / 16):
        prof = harmonic_profile(eps, h)
        r = prof.grid.r
        xi = compute_xi(prof)
        d = (xi[2:] - xi[:-2]) / (2 * h)
        sel = (r[1:-1] > 0.1) & (r[1:-1] < 0.8 * geom.R)
        errs.append(np.max(np.abs(d[sel] + r[1:-1][sel] * prof.eta[1:-1][sel] ** 2)))
    assert math.log2(errs[0] / errs[1]) >= 1.8
    assert math.log2(errs[1] / errs[2]) >= 1.8


def test_tf_xi_closed_form(spec, geom):
    r = np.linspace(0.0, 1.5 * geom.R, 101)
    np.testing.assert_allclose(tf_xi(spec, geom, r), oracles.harmonic_xi0(r), atol=1e-13)
    assert tf_xi(spec, geom, [0.0])[0] == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-12)


# -- f ----------------------------------------------------------------------


def test_f0_closed_form(spec, geom):
    r = np.linspace(0.0, 1.5 * geom.R, 301)
    np.testing.assert_allclose(tf_f(spec, geom, r), oracles.harmonic_f0(r), atol=1e-8)
    assert np.all(tf_f(spec, geom, r[r >= geom.R]) == 0.0)


def test_f0_sup_and_omega0(spec, geom):
    sup, arg = f0_supremum(spec, geom)
    assert sup == pytest.approx(oracles.HARMONIC_F0_SUP, abs=1e-4)
    assert sup == pytest.approx(0.199471, abs=1e-6)
    assert arg == pytest.approx(0.0, abs=1e-3)
    assert omega0(spec, geom) == pytest.approx(oracles.HARMONIC_OMEGA0, abs=1e-4)
    assert omega0(spec, geom) == pytest.approx(2.506628, abs=1e-6)


def test_omega0_invariant_under_refinement(spec, geom):
    coarse = 1.0 / (2.0 * f0_supremum(spec, geom, n_scan=501)[0])
    fine = 1.0 / (2.0 * f0_supremum(spec, geom, n_scan=8001)[0])
    assert abs(coarse - fine) / fine <= 1e-4


def test_f0_sup_off_axis_for_bump():
    # a central bump pushes the density, hence the maximizer of f0, off the origin
    spec = PotentialSpec(Family.GAUSSIAN_BUMP, {"V0": 0.3, "w0": 0.1})
    geom = solve_lambda0(spec)
    sup, arg = f0_supremum(spec, geom)
    r = np.linspace(0.0, geom.R, 20001)
    scan = tf_f(spec, geom, r)
    assert sup >= np.max(scan) - 1e-12
    assert arg == pytest.approx(r[np.argmax(scan)], abs=2 * r[1])


@pytest.mark.parametrize("eps", SWEEP_EPS)
def test_f_positive(eps):
    prof = harmonic_profile(eps)
    f, sup, arg = compute_f(prof, compute_xi(prof))
    assert np.all(f > 0)
    assert sup == np.max(f)


def test_f_equals_f0_where_inputs_coincide(spec, geom):
    prof = harmonic_profile(0.05)
    r = prof.grid.r
    inside = r < 0.5 * geom.R
    fake = type(prof)(prof.grid, prof.eta.copy(), prof.lambda_eps, prof.eps, prof.residual, prof.iterations)
    fake.eta[inside] = np.sqrt(geom.lambda0 - r[inside] ** 2)
    xi = compute_xi(fake)
    xi[inside] = oracles.harmonic_xi0(r[inside])
    f, _, _ = compute_f(fake, xi)
    np.testing.assert_allclose(f[inside], oracles.harmonic_f0(r[inside]), rtol=1e-14)


def test_argmax_f_eps_approaches_argmax_f0(spec, geom):
    prof = harmonic_profile(0.025)
    aux = aux_bundle(prof, spec, geom)
    assert abs(aux.argmax_f_eps - aux.argmax_f0) <= 2 * prof.grid.h


# -- bounds -----------------------------------------------------------------


def test_aux_bounds_bounded_across_sweep(spec, geom, profiles):
    rows = []
    for eps in SWEEP_EPS:
        prof = profiles[eps]
        rows.append(verify_aux_bounds(aux_bundle(prof, spec, geom), prof, geom, eps).to_dict())
    for key in rows[0]:
        vals = [row[key] for row in rows]
        assert all(v <= 2.0 * vals[0] for v in vals), (key, vals)


def test_exterior_ratio_non_growing(spec, geom, profiles):
    vals = []
    for eps in SWEEP_EPS:
        prof = profiles[eps]
        vals.append(verify_aux_bounds(aux_bundle(prof, spec, geom), prof, geom, eps).exterior_ratio)
    assert vals[0] >= vals[1] >= vals[2]


def test_grad_xi_sup_near_closed_form(spec, geom, profiles):
    for eps in SWEEP_EPS:
        prof = profiles[eps]
        b = verify_aux_bounds(aux_bundle(prof, spec, geom), prof, geom, eps)
        assert b.grad_xi_sup <= geom.lambda0 * geom.R
        assert abs(b.grad_xi_sup - oracles.HARMONIC_SUP_R_A) / oracles.HARMONIC_SUP_R_A <= 0.05


def test_bundle_dump(tmp_path, spec, geom):
    prof = harmonic_profile(0.1)
    aux = aux_bundle(prof, spec, geom)
    b = verify_aux_bounds(aux, prof, geom, 0.1).to_dict()
    aux.dump(tmp_path / "aux.csv", b)
    assert (tmp_path / "aux.csv").read_text().splitlines()[0] == "r,xi_eps,f_eps,xi0,f0"
    summary = json.loads((tmp_path / "aux.json").read_text())
    assert set(summary) >= {"f0_sup", "omega0", "argmax_f0", "bound_ratios"}


# -- subquadratic divergence --------------------------------------------------


@pytest.fixture(scope="module")
def divergence(power_law):
    return subquadratic_divergence(power_law, 0.05)


def test_power_law_f_strictly_increasing_on_2R_4R(divergence):
    assert divergence.subquadratic
    assert divergence.strictly_increasing_2R_4R
    assert divergence.f_at["4R"] > divergence.f_at["2R"]


def test_power_law_matches_wkb_tail(power_law, divergence):
    geom = solve_lambda0(power_law)
    V = lambda s: eval_potential(power_law, s)  # noqa: E731
    for key, m in (("2R", 2.0), ("4R", 4.0)):
        want = float(oracles.wkb_f(m * geom.R, V, geom.lambda0, 0.05))
        assert divergence.f_at[key] == pytest.approx(want, rel=0.05)
    r = np.linspace(2 * geom.R, 4 * geom.R, 200)
    wkb_slope = np.polyfit(np.log(r), np.log(oracles.wkb_f(r, V, geom.lambda0, 0.05)), 1)[0]
    assert divergence.loglog_slope_2R_4R == pytest.approx(wkb_slope, abs=0.05)


@pytest.mark.xfail(
    strict=True,
    reason="eps=0.05 is pre-asymptotic: measured slope ~0.26 on [2R, 4R], leading-order WKB gives ~0.22; "
    "see the subquadratic acceptance criterion",
)
def test_power_law_loglog_slope_at_least_03(divergence):
    assert divergence.loglog_slope_2R_4R >= 0.3


def test_harmonic_control_not_increasing(spec, geom):
    eps = 0.05
    prof = harmonic_profile(eps)
    aux = aux_bundle(prof, spec, geom)
    r = prof.grid.r
    win = (r >= 2 * geom.R) & (r <= 0.9 * prof.grid.R_max)
    assert not np.all(np.diff(aux.f_eps[win]) > 0)
    b = verify_aux_bounds(aux, prof, geom, eps)
    assert np.max(aux.f_eps[r >= geom.R][:-1]) == pytest.approx(b.exterior_ratio * eps ** (2 / 3), rel=1e-12)


def test_truncation_too_tight(power_law):
    geom = solve_lambda0(power_law)
    with pytest.raises(TruncationTooTight):
        subquadratic_divergence(power_law, 0.05, grid=make_grid(power_law, geom, 0.05, r_max=3.0 * geom.R), geom=geom)
    with pytest.raises(TruncationTooTight):
        subquadratic_divergence(power_law, 0.2, grid=make_grid(power_law, geom, 0.2, r_max=4.5 * geom.R), geom=geom)
