import csv
import json
import math

import pytest

from gpvortex.potentials import Family, PotentialSpec
from gpvortex.sweep import (
    CSV_COLUMNS,
    CellStore,
    CheckConfig,
    ConfigError,
    OmegaStrategy,
    SweepConfig,
    bisect_threshold,
    bounded_sequence,
    cell_seed,
    evaluate_cell,
    load_potential,
    run_check,
    run_sweep,
)

from helpers import small_context

EPS = 0.2


def tiny(out_dir=None, **kw):
    base = dict(
        eps_list=(EPS,),
        grid_n=63,
        box_factor=2.0,
        omega_strategy=OmegaStrategy("multiples", (0.3, 1.2)),
        rel_width=0.05,
        out_dir=out_dir,
    )
    base.update(kw)
    return SweepConfig(**base)


# -- configuration ----------------------------------------------------------


def test_eps_out_of_range_rejected():
    with pytest.raises(ConfigError):
        SweepConfig(eps_list=(0.5,)).validate()
    with pytest.raises(ConfigError):
        CheckConfig(eps_list=(0.5,)).validate()
    with pytest.raises(ConfigError):
        SweepConfig(eps_list=(0.0,)).validate()


def test_omega_above_confinement_rejected():
    with pytest.raises(ConfigError):
        tiny(omega_strategy=OmegaStrategy("absolute", (1.0, 1.0 / EPS))).validate()


def test_coarse_grid_rejected():
    with pytest.raises(ConfigError):
        tiny(grid_n=31).validate()


def test_strategy_validation_and_resolve():
    with pytest.raises(ConfigError):
        OmegaStrategy("relative", (1.0,))
    with pytest.raises(ConfigError):
        OmegaStrategy("absolute", ())
    with pytest.raises(ConfigError):
        OmegaStrategy("absolute", (-1.0,))
    s = OmegaStrategy("multiples", (0.5, 1.5))
    w0 = math.sqrt(2 * math.pi)
    assert s.resolve(0.05, w0) == pytest.approx([0.5 * w0 * abs(math.log(0.05)), 1.5 * w0 * abs(math.log(0.05))])
    assert OmegaStrategy("absolute", (2.0,)).resolve(0.05, w0) == [2.0]


def test_load_potential(tmp_path):
    assert load_potential("harmonic").family is Family.HARMONIC
    p = tmp_path / "trap.json"
    p.write_text(json.dumps({"family": "power_law", "params": {"p": 1.5}}))
    assert load_potential(str(p)) == PotentialSpec(Family.POWER_LAW, {"p": 1.5})
    with pytest.raises(ConfigError):
        load_potential("no-such-trap")


def test_fingerprint_tracks_result_affecting_fields():
    a = tiny()
    assert a.fingerprint() == tiny().fingerprint()
    assert a.fingerprint() != tiny(seed=1).fingerprint()
    assert a.fingerprint() != tiny(grid_n=95).fingerprint()


# -- bisection --------------------------------------------------------------


@pytest.mark.parametrize("cut", [0.61, 0.9, 1.37])
def test_bisection_brackets_threshold(cut):
    calls = []

    def pred(x):
        calls.append(x)
        return x >= cut

    c, last_false, status = bisect_threshold(0.5, 1.5, pred, 0.02)
    assert status == "bracketed"
    assert last_false < cut <= c
    assert c - last_false <= 0.02 * c
    assert len(calls) == len(set(calls))


def test_bisection_statuses():
    assert bisect_threshold(0.5, 1.5, lambda x: True, 0.02)[2] == "below_bracket"
    assert bisect_threshold(0.5, 1.5, lambda x: False, 0.02)[2] == "above_bracket"
    assert bisect_threshold(0.5, 1.5, lambda x: None if x > 1 else False, 0.02)[2] == "failed"


def test_bounded_sequence():
    assert bounded_sequence([3.0, 2.0, 1.0], 2.0)
    assert bounded_sequence([1.0, 1.9, 1.5], 2.0)
    assert not bounded_sequence([1.0, 2.1], 2.0)
    assert not bounded_sequence([1.0, float("nan")], 2.0)


# -- cells ------------------------------------------------------------------


def test_cell_seed_deterministic_and_distinct():
    a = cell_seed(0, 0.05, 3.0)
    assert a == cell_seed(0, 0.05, 3.0)
    assert len({a, cell_seed(1, 0.05, 3.0), cell_seed(0, 0.025, 3.0), cell_seed(0, 0.05, 3.0000001)}) == 4
    assert 0 <= a < 2**64


def test_zero_rotation_cell():
    ctx = small_context()
    cell = evaluate_cell(ctx, 0.0, tiny().solver_config(), seed=0)
    assert cell["bulk_vortices"] == cell["boundary_layer_vortices"] == cell["exterior_vortices"] == 0
    assert cell["subcritical_margin"] == pytest.approx(1.0, abs=1e-4)
    assert cell["splitting_residual"] <= 1e-8
    assert cell["error"] is None


def test_cell_store_roundtrip(tmp_path):
    store = CellStore(tmp_path, "abc")
    cell = {"eps": 0.05, "omega": 1.0 / 3.0, "bulk_vortices": 0}
    store.put(cell)
    assert CellStore(tmp_path, "abc").get(0.05, 1.0 / 3.0) == cell
    assert CellStore(tmp_path, "other").get(0.05, 1.0 / 3.0) is None
    assert CellStore(tmp_path, "abc").get(0.05, 0.3333) is None


# -- sweep ------------------------------------------------------------------


@pytest.fixture(scope="module")
def reference(tmp_path_factory):
    out = tmp_path_factory.mktemp("ref")
    return out, run_sweep(tiny(out))


def test_sweep_outputs(reference):
    out, res = reference
    rows = list(csv.reader((out / "phase_diagram.csv").open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert tuple(rows[0][:6]) == ("eps", "omega", "bulk_vortices", "exterior_vortices", "subcritical_margin", "F_v")
    keys = [(float(r[0]), float(r[1])) for r in rows[1:]]
    assert keys == sorted(keys)
    assert len(keys) == len(res.cells)
    data = json.loads((out / "sweep_result.json").read_text())
    assert data["per_eps"][0]["predicted"] == pytest.approx(res.per_eps[0].predicted)
    assert "omega1_empirical" in data["per_eps"][0]


def test_sweep_is_deterministic(reference, tmp_path):
    out, res = reference
    again = run_sweep(tiny(tmp_path))
    assert (tmp_path / "phase_diagram.csv").read_bytes() == (out / "phase_diagram.csv").read_bytes()
    assert again.to_dict() == res.to_dict()


def test_interrupted_sweep_resumes_to_same_result(reference, tmp_path):
    out, res = reference
    seen = []

    def stop_after_three(cell):
        seen.append(cell)
        if len(seen) == 3:
            raise KeyboardInterrupt

    with pytest.raises(KeyboardInterrupt):
        run_sweep(tiny(tmp_path), on_cell=stop_after_three)
    assert len(list((tmp_path / "cells").glob("*.json"))) == 3
    fresh = []
    resumed = run_sweep(tiny(tmp_path), on_cell=fresh.append)
    assert len(fresh) == len(res.cells) - 3
    assert resumed.to_dict() == res.to_dict()
    assert (tmp_path / "phase_diagram.csv").read_bytes() == (out / "phase_diagram.csv").read_bytes()


def test_sweep_without_bisection(tmp_path):
    cfg = tiny(tmp_path, omega_strategy=OmegaStrategy("absolute", (0.0, 2.0)), bisect=False)
    res = run_sweep(cfg)
    (r,) = res.per_eps
    assert [c["omega"] for c in r.cells] == [0.0, 2.0]
    assert r.bulk_status == "not_run"
    zero = r.cells[0]
    assert zero["bulk_vortices"] + zero["boundary_layer_vortices"] + zero["exterior_vortices"] == 0
    assert zero["subcritical_margin"] == pytest.approx(1.0, abs=1e-4)


def test_failed_cell_is_recorded(tmp_path, monkeypatch):
    import gpvortex.sweep as sweep_mod

    def boom(*a, **k):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(sweep_mod, "evaluate_cell", boom)
    res = run_sweep(tiny(tmp_path, omega_strategy=OmegaStrategy("absolute", (1.0,)), bisect=False))
    (cell,) = res.cells
    assert cell["error"].startswith("RuntimeError")


# -- check ------------------------------------------------------------------


def test_check_harmonic_passes():
    rep = run_check(CheckConfig())
    assert rep["pass"], rep["failed"]
    names = {e["name"] for e in rep["checks"]}
    assert {"closed_form:omega0", "splitting_identity", "gauge_invariance", "rate:tf_ratio"} <= names


def test_check_power_law(power_law):
    rep = run_check(CheckConfig(potential=power_law))
    by = {e["name"]: e for e in rep["checks"]}
    assert by["subquadratic_flag"]["value"] is True
    assert by["subquadratic_divergence"]["status"] == "pass"
    assert by["assumption:quadratic_lower_bound"]["status"] == "expected_fail"
    assert rep["pass"], rep["failed"]
