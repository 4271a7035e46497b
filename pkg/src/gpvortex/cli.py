"""Command-line front end: ``gpvortex <command> [options]``."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import click

from . import gp2d
from .auxiliary import aux_bundle, verify_aux_bounds
from .potentials import check_assumptions, solve_lambda0
from .radial import FlowConfig, make_grid, minimize_radial, verify_profile_estimates
from .sweep import CheckConfig, ConfigError, OmegaStrategy, SweepConfig, load_potential, prepare, run_check, run_sweep
from .vortex import detect as detect_vortices


def _emit(data) -> None:
    click.echo(json.dumps(data, indent=2, default=str))


def _out_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def parse_omega(text: str) -> tuple[str, float]:
    """``"7.5"`` is an absolute Omega; ``"1.5x"`` means 1.5 * omega0 |log eps|."""
    t = text.strip().lower()
    try:
        if t.endswith("x"):
            return "multiples", float(t[:-1])
        return "absolute", float(t)
    except ValueError:
        raise click.BadParameter(f"cannot parse Omega {text!r}") from None


def _check_eps(ctx, param, value):
    vals = value if isinstance(value, tuple) else (value,)
    for e in vals:
        if not 0.0 < e <= 0.2:
            raise click.BadParameter(f"eps must lie in (0, 0.2], got {e}")
    return value


def _load(potential: str):
    try:
        return load_potential(potential)
    except ConfigError as exc:
        raise click.BadParameter(str(exc), param_hint="--potential") from None


potential_opt = click.option(
    "--potential", default="harmonic", show_default=True, help="Preset family name or JSON file {family, params}."
)
out_opt = click.option("--out", "out", default=".", show_default=True, help="Output directory.")
seed_opt = click.option("--seed", default=0, show_default=True, type=int, help="64-bit seed.")
restarts_opt = click.option("--restarts", default=3, show_default=True, type=int)
grid_opt = click.option("--grid-n", default=512, show_default=True, type=int, help="Interior nodes per axis.")
box_opt = click.option(
    "--box-factor", default=None, type=float, help="Box half-width in units of R (default: radial decay radius)."
)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    """Rotating condensates in a trap: profiles, 2D minimizers and vortex census."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(asctime)s %(message)s")


def _profile(spec, eps, tol):
    geom = solve_lambda0(spec)
    grid = make_grid(spec, geom, eps)
    prof = minimize_radial(spec, geom, eps, grid, FlowConfig(tol=tol))
    return geom, prof


@main.command()
@potential_opt
@click.option("--eps", required=True, type=float, callback=_check_eps)
@click.option("--tol", default=1e-8, show_default=True, type=float)
@out_opt
def profile(potential, eps, tol, out):
    """Radial ground state: profile.csv and profile.json."""
    spec = _load(potential)
    geom, prof = _profile(spec, eps, tol)
    d = _out_dir(out)
    prof.dump(d / "profile.csv", spec)
    est = verify_profile_estimates(prof, spec, geom)
    _emit({"profile": prof.metadata(), "estimates": est.to_dict(), "geometry": geom.to_dict()})


@main.command()
@potential_opt
@click.option("--eps", required=True, type=float, callback=_check_eps)
@click.option("--tol", default=1e-8, show_default=True, type=float)
@out_opt
def aux(potential, eps, tol, out):
    """Auxiliary functions xi, f and omega0: aux.csv and aux.json."""
    spec = _load(potential)
    geom, prof = _profile(spec, eps, tol)
    bundle = aux_bundle(prof, spec, geom)
    bounds = verify_aux_bounds(bundle, prof, geom, eps).to_dict()
    bundle.dump(_out_dir(out) / "aux.csv", bounds)
    _emit(bundle.summary(bounds))


@main.command()
@potential_opt
@click.option("--eps", required=True, type=float, callback=_check_eps)
@click.option("--omega", required=True, help="Absolute value, or multiple of omega0|log eps| with an 'x' suffix.")
@grid_opt
@box_opt
@restarts_opt
@seed_opt
@click.option("--tol", default=1e-6, show_default=True, type=float)
@click.option("--format", "fmt", type=click.Choice(["npz", "csv"]), default="npz", show_default=True)
@out_opt
def solve2d(potential, eps, omega, grid_n, box_factor, restarts, seed, tol, fmt, out):
    """Best-of-restarts 2D minimizer with energy split and vortex report."""
    spec = _load(potential)
    try:
        ctx = prepare(spec, eps, grid_n, box_factor)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    kind, val = parse_omega(omega)
    Om = val * ctx.predicted if kind == "multiples" else val
    if abs(Om) * eps >= 1.0:
        raise click.UsageError(f"Omega={Om:.4g} must stay below 1/eps={1 / eps:.4g}")
    cfg = gp2d.SolverConfig(tol=tol, restarts=restarts, seed=seed)
    field_ = gp2d.minimize_2d(spec, ctx.geom, eps, Om, ctx.grid, cfg, ground=ctx.ground, argmax_f0=ctx.aux.argmax_f0)
    d = _out_dir(out)
    path = field_.dump(d / "field", fmt)
    br = gp2d.split_energy(field_, ctx.ground, ctx.profile, spec, eps, Om, ctx.geom)
    (d / "energy.json").write_text(json.dumps(br.to_dict(), indent=2))
    rep = detect_vortices(field_, ctx.profile, ctx.geom, eps, eta=ctx.ground)
    rep.dump(d / "vortices.json")
    ok, margin = gp2d.subcritical_check(field_, ctx.ground, ctx.geom, eps)
    _emit(
        {
            "field": str(path),
            "omega": Om,
            "omega_ratio": Om / ctx.predicted,
            "energy": br.to_dict(),
            "counts": rep.counts,
            "subcritical": ok,
            "subcritical_margin": margin,
            "runs": field_.runs,
        }
    )


@main.command()
@click.argument("field_path", type=click.Path(exists=True))
@potential_opt
@click.option("--threshold", default=0.75, show_default=True, type=float)
@out_opt
def detect(field_path, potential, threshold, out):
    """Vortex report for a field written by solve2d."""
    spec = _load(potential)
    field_ = gp2d.ComplexField2D.load(field_path)
    geom = solve_lambda0(spec)
    eps = field_.eps
    rgrid = make_grid(spec, geom, eps, r_max=field_.grid.L)
    prof = minimize_radial(spec, geom, eps, rgrid)
    ground = gp2d.ground_state_2d(prof, spec, field_.grid)
    rep = detect_vortices(field_, prof, geom, eps, threshold=threshold, eta=ground)
    rep.dump(_out_dir(out) / "vortices.json")
    _emit(rep.to_dict())


@main.command()
@potential_opt
@click.option(
    "--eps", "eps_list", multiple=True, type=float, callback=_check_eps, help="Repeatable; default 0.1, 0.05, 0.025."
)
@click.option("--omega", "omegas", multiple=True, help="Repeatable; bracket points, all absolute or all with 'x'.")
@grid_opt
@box_opt
@restarts_opt
@seed_opt
@click.option("--tol", default=1e-6, show_default=True, type=float)
@click.option("--rel-width", default=0.02, show_default=True, type=float)
@click.option("--no-bisect", is_flag=True, help="Evaluate the listed Omega values only.")
@click.option("--out", "out", default="sweep_out", show_default=True)
def sweep(potential, eps_list, omegas, grid_n, box_factor, restarts, seed, tol, rel_width, no_bisect, out):
    """Critical-velocity bisection; writes phase_diagram.csv and sweep_result.json (resumable)."""
    spec = _load(potential)
    strategy = OmegaStrategy()
    if omegas:
        parsed = [parse_omega(o) for o in omegas]
        kinds = {k for k, _ in parsed}
        if len(kinds) != 1:
            raise click.BadParameter("mix of absolute and multiple Omega values")
        strategy = OmegaStrategy(kinds.pop(), tuple(v for _, v in parsed))
    cfg = SweepConfig(
        potential=spec,
        eps_list=tuple(eps_list) or (0.1, 0.05, 0.025),
        omega_strategy=strategy,
        solver=dataclasses.replace(gp2d.SolverConfig(), tol=tol),
        restarts=restarts,
        out_dir=Path(out),
        seed=seed,
        grid_n=grid_n,
        box_factor=box_factor,
        rel_width=rel_width,
        bisect=not no_bisect,
    )
    try:
        res = run_sweep(cfg)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None
    _emit(
        {
            "no_exterior_first": res.no_exterior_first,
            "per_eps": [
                {k: v for k, v in r.to_dict().items() if k != "cells"} for r in res.per_eps
            ],
        }
    )


@main.command()
@potential_opt
@click.option(
    "--eps", "eps_list", multiple=True, type=float, callback=_check_eps, help="Repeatable; default 0.1, 0.05, 0.025."
)
@seed_opt
@out_opt
def check(potential, eps_list, seed, out):
    """Full verification battery as a single pass/fail JSON (check.json)."""
    spec = _load(potential)
    cfg = CheckConfig(potential=spec, eps_list=tuple(eps_list) or (0.1, 0.05, 0.025), seed=seed)
    try:
        report = run_check(cfg)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None
    (_out_dir(out) / "check.json").write_text(json.dumps(report, indent=2, default=str))
    _emit({"pass": report["pass"], "failed": report["failed"]})
    sys.exit(0 if report["pass"] else 1)


@main.command()
@potential_opt
def assumptions(potential):
    """Structural checks on the trap alone."""
    spec = _load(potential)
    _emit(check_assumptions(spec).to_dict())


if __name__ == "__main__":
    main()
