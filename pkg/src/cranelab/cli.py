"""Scenario runner: config files in, report artifacts out.

Subcommands map one-to-one onto the pipeline stages:

  validate    check every standing assumption, print margins
  simulate    advance the closed loop and write trajectory artifacts
  spectrum    eigenvalues of the full and restricted generators
  resolvent   resolvent-norm sweep along the imaginary axis
  decay       long-horizon run plus polynomial decay fit
  sweep       cartesian product over gain values, one directory per point

Exit codes: 0 on success, 1 when a scenario fails a check or a module
rejects its input, 2 when the config cannot be parsed.  All artifacts
embed the sha256 of the config file; identical config and seed give
bit-identical CSV files.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import diagnostics, plots, presets, reports, spectral
from .discretize import AssemblyError, Grid, assemble, export_matrices
from .evolve import InitialData, run, sample_initial
from .model import (ConfigError, ControlGains, CraneModel, ModelError,
                    config_sha256, params_from_config, read_config,
                    validate_model, validate_params)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


@dataclass
class Scenario:
    path: Path
    model: CraneModel
    grid: Grid
    T: float
    snapshot_stride: int
    conserve: bool
    strict: bool
    initial: InitialData
    out_dir: Path
    config_hash: str
    raw: dict


def _section(parser, name) -> dict[str, str]:
    return dict(parser[name]) if parser.has_section(name) else {}


def load_scenario(config_path: str | Path, out_override: str | None = None) -> Scenario:
    path = Path(config_path)
    parser = read_config(path)
    model = CraneModel.from_config(parser)

    grid_sec = _section(parser, "grid")
    try:
        grid = Grid(N=int(grid_sec.get("N", 200)), Nd=int(grid_sec.get("Nd", 100)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sim = _section(parser, "simulation")
    try:
        T = float(sim.get("T", 200.0))
        stride = int(sim.get("snapshot_stride", 50))
        conserve = sim.get("conserve", "true").strip().lower() not in ("false", "0", "no")
        strict = sim.get("strict", "true").strip().lower() not in ("false", "0", "no")
    except ValueError as exc:
        raise ConfigError(f"bad [simulation] value: {exc}") from exc

    init_sec = _section(parser, "initial") or {"preset": "smooth"}
    initial = presets.initial_from_spec(init_sec)

    out = Path(out_override) if out_override else Path(
        parser.get("output", "dir", fallback="out"))
    raw = {name: dict(parser[name]) for name in parser.sections()}
    return Scenario(path=path, model=model, grid=grid, T=T,
                    snapshot_stride=stride, conserve=conserve, strict=strict,
                    initial=initial, out_dir=out,
                    config_hash=config_sha256(path), raw=raw)


# -- subcommands -------------------------------------------------------------

def cmd_validate(args) -> int:
    parser = read_config(args.config)
    phys, gains, coeff, weights = params_from_config(parser)
    report = validate_params(phys, gains, coeff, weights)
    for line in report.lines():
        print(line)
    if report.strict_ok:
        print("model admissible (strict constraints hold)")
        return EXIT_OK
    failed = [c.name for c in report.checks if not c.passed]
    print("violated: " + ", ".join(failed), file=sys.stderr)
    return EXIT_FAIL


def _simulate(scn: Scenario):
    op = assemble(scn.model, scn.grid, strict=scn.strict)
    state0 = sample_initial(scn.initial, scn.model, scn.grid)
    traj = run(state0, op, scn.T, snapshot_stride=scn.snapshot_stride,
               conserve=scn.conserve)
    return op, state0, traj


def cmd_simulate(args) -> int:
    scn = load_scenario(args.config, args.out)
    op, state0, traj = _simulate(scn)
    out, chash = scn.out_dir, scn.config_hash

    reports.write_trajectory_csv(traj, out / "trajectory.csv", chash)
    reports.write_snapshots(traj, out / "snapshots", chash)
    if args.export_matrices:
        export_matrices(op, out / "matrices")

    omega = diagnostics.equilibrium_omega(state0, scn.model)
    energy = diagnostics.energy_report(traj, scn.model)
    final = traj.final_state
    terminal_gap = float(np.max(np.abs(final.y - omega)))
    drift = float(np.max(np.abs(traj.ell)))
    summary = {
        "omega_predicted": omega,
        "terminal_max_gap_to_omega": terminal_gap,
        "initial_deviation": float(traj.dev_norm[0]),
        "terminal_deviation": float(traj.dev_norm[-1]),
        "rho_drift_max": drift,
        "energy": energy,
        "initial_compatible": scn.initial.compatible(),
        "grid": {"N": scn.grid.N, "Nd": scn.grid.Nd},
        "T": scn.T,
    }
    reports.write_json_report(summary, out / "energy.json", chash)
    plots.save_figure(plots.energy_figure(traj), out / "energy.png")
    plots.save_figure(plots.terminal_figure(traj, omega), out / "terminal.png")

    print(f"predicted equilibrium: {omega:.9g}")
    print(f"terminal max |y - omega|: {terminal_gap:.3e}")
    print(f"terminal deviation norm: {traj.dev_norm[-1]:.3e} "
          f"(initial {traj.dev_norm[0]:.3e})")
    print(f"conserved functional drift: {drift:.3e}")
    print(f"artifacts in {out}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    scn = load_scenario(args.config, args.out)
    op = assemble(scn.model, scn.grid, strict=scn.strict)
    full = spectral.eigenvalues(op, restrict_dot=False)
    restricted = spectral.eigenvalues(op, restrict_dot=True)
    dis = spectral.dissipativity_check(op, seed=args.seed)
    out, chash = scn.out_dir, scn.config_hash

    reports.write_spectrum_csv(full, out / "spectrum_full.csv", chash)
    reports.write_spectrum_csv(restricted, out / "spectrum_restricted.csv", chash)
    summary = {
        "full": {
            "n_zero_modes": full.n_zero_modes,
            "zero_mode_error": full.zero_mode_error,
            "zero_mode_alignment": full.zero_mode_alignment,
            "max_re_nonzero": full.max_re_nonzero,
            "min_abs_re_nonzero": full.min_abs_re_nonzero,
        },
        "restricted": {
            "imaginary_axis_gap": restricted.imaginary_axis_gap,
            "max_re": float(np.max(restricted.eigenvalues.real)),
        },
        "dissipativity": dis,
        "grid": {"N": scn.grid.N, "Nd": scn.grid.Nd},
    }
    reports.write_json_report(summary, out / "spectrum.json", chash)
    plots.save_figure(plots.spectrum_figure(full, restricted), out / "spectrum.png")

    print(f"zero modes: {full.n_zero_modes} "
          f"(|A 1|_G = {full.zero_mode_error:.3e}, "
          f"alignment error {full.zero_mode_alignment:.3e})")
    print(f"max Re over nonzero modes: {full.max_re_nonzero:.6e}")
    print(f"restricted imaginary-axis gap: {restricted.imaginary_axis_gap:.6e}")
    print(f"dissipativity: max relative residual {dis.max_residual_rel:.3e} "
          f"over {dis.n_samples} samples -> "
          f"{'pass' if dis.passed else 'FAIL'}")
    print(f"artifacts in {out}")
    return EXIT_OK if dis.passed else EXIT_FAIL


def cmd_resolvent(args) -> int:
    scn = load_scenario(args.config, args.out)
    op = assemble(scn.model, scn.grid, strict=scn.strict)
    res_sec = scn.raw.get("resolvent", {})
    try:
        n_points = int(res_sec.get("n_points", 100))
        gamma_min = float(res_sec.get("gamma_min", 0.1))
    except ValueError as exc:
        raise ConfigError(f"bad [resolvent] value: {exc}") from exc
    sweep = spectral.resolvent_sweep(
        op, spectral.default_gammas(op, n_points, gamma_min))
    out, chash = scn.out_dir, scn.config_hash
    reports.write_sweep_csv(sweep, out / "resolvent.csv", chash)
    reports.write_json_report({
        "sup_scaled": sweep.sup_scaled,
        "gamma_max_resolved": sweep.gamma_max_resolved,
        "n_points": int(sweep.gammas.size),
        "grid": {"N": scn.grid.N, "Nd": scn.grid.Nd},
    }, out / "resolvent.json", chash)
    plots.save_figure(plots.sweep_figure(sweep), out / "resolvent.png")
    print(f"sup over band of norm/gamma^2: {sweep.sup_scaled:.6g}")
    print(f"resolved band: [{sweep.gammas[0]:.3g}, {sweep.gamma_max_resolved:.3g}]")
    print(f"artifacts in {out}")
    return EXIT_OK


def cmd_decay(args) -> int:
    scn = load_scenario(args.config, args.out)
    op, state0, traj = _simulate(scn)
    decay_sec = scn.raw.get("decay", {})
    try:
        t_lo = float(decay_sec["t_lo"]) if "t_lo" in decay_sec else None
        t_hi = float(decay_sec["t_hi"]) if "t_hi" in decay_sec else None
    except ValueError as exc:
        raise ConfigError(f"bad [decay] value: {exc}") from exc
    fit = diagnostics.fit_decay(traj, op, traj.omega, t_lo=t_lo, t_hi=t_hi)

    out, chash = scn.out_dir, scn.config_hash
    reports.write_trajectory_csv(traj, out / "trajectory.csv", chash)
    reports.write_json_report({
        "fit": fit,
        "omega": traj.omega,
        "T": scn.T,
        "grid": {"N": scn.grid.N, "Nd": scn.grid.Nd},
        "initial_compatible": scn.initial.compatible(),
    }, out / "decay.json", chash)
    plots.save_figure(plots.decay_figure(traj, fit), out / "decay.png")

    early, late = fit.exponential_test
    print(f"log-log slope on [{fit.window[0]:g}, {fit.window[1]:g}]: {fit.slope:.4f}")
    print(f"C_hat (sup sqrt(t)*dev / graph norm): {fit.C_hat:.6g}")
    print(f"local exponential rates: early {early:.4f}, late {late:.4f} "
          f"({'decreasing' if fit.rate_is_decreasing else 'NOT decreasing'})")
    print(f"artifacts in {out}")
    return EXIT_OK


def _parse_values(raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep values {raw!r}") from exc


def _sweep_point(task: tuple) -> dict:
    """Run one sweep point in a worker process; returns a summary row."""
    config_path, out_dir, index, gains_kw = task
    scn = load_scenario(config_path)
    point_dir = Path(out_dir) / f"point_{index:03d}"
    row = {"index": index, **gains_kw}
    try:
        gains = ControlGains(**gains_kw)
        model = CraneModel.build(scn.model.phys, gains, scn.model.coeff)
    except (ModelError, ConfigError) as exc:
        row.update(status="rejected", detail=str(exc))
        return row
    report = validate_model(model)
    if not report.contraction_ok:
        failed = [c.name for c in report.checks if not c.passed]
        row.update(status="inadmissible", detail=",".join(failed))
        return row
    scn = replace(scn, model=model, strict=False)
    sweep_sec = scn.raw.get("sweep", {})
    if "T" in sweep_sec:
        scn = replace(scn, T=float(sweep_sec["T"]))
    try:
        op, state0, traj = _simulate(scn)
    except (ModelError, AssemblyError) as exc:
        row.update(status="failed", detail=str(exc))
        return row
    reports.write_trajectory_csv(traj, point_dir / "trajectory.csv", scn.config_hash)
    energy = diagnostics.energy_report(traj, model)
    reports.write_json_report({
        "gains": gains_kw,
        "energy": energy,
        "terminal_deviation": float(traj.dev_norm[-1]),
        "rho_drift_max": float(np.max(np.abs(traj.ell))),
    }, point_dir / "energy.json", scn.config_hash)
    row.update(status="ok", strict=report.strict_ok,
               E_final=energy.Etot, dev_final=float(traj.dev_norm[-1]),
               rho_drift=float(np.max(np.abs(traj.ell))))
    return row


def cmd_sweep(args) -> int:
    scn = load_scenario(args.config, args.out)
    sweep_sec = scn.raw.get("sweep", {})
    gains0 = scn.model.gains
    axes = {}
    for name, default in (("alpha", gains0.alpha), ("beta", gains0.beta),
                          ("tau", gains0.tau), ("K", gains0.K)):
        axes[name] = _parse_values(sweep_sec[name]) if name in sweep_sec else [default]
    combos = list(itertools.product(axes["alpha"], axes["beta"],
                                    axes["tau"], axes["K"]))
    tasks = [(str(scn.path), str(scn.out_dir), i,
              {"alpha": a, "beta": b, "tau": t, "K": k})
             for i, (a, b, t, k) in enumerate(combos)]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]

    lines = [f"# config_sha256: {scn.config_hash}",
             "index,alpha,beta,tau,K,status,E_final,dev_final,rho_drift"]
    ok = 0
    for row in rows:
        if row["status"] == "ok":
            ok += 1
            tail = (f"{row['E_final']:.17g},{row['dev_final']:.17g},"
                    f"{row['rho_drift']:.17g}")
        else:
            tail = ",,"
        lines.append(f"{row['index']},{row['alpha']:.17g},{row['beta']:.17g},"
                     f"{row['tau']:.17g},{row['K']:.17g},{row['status']},{tail}")
    scn.out_dir.mkdir(parents=True, exist_ok=True)
    (scn.out_dir / "sweep_summary.csv").write_text("\n".join(lines) + "\n")
    print(f"{ok}/{len(rows)} sweep points ran; summary in "
          f"{scn.out_dir / 'sweep_summary.csv'}")
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cranelab",
        description="numerical laboratory for a crane cable under delayed "
                    "boundary velocity feedback")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, blurb in (
            ("validate", cmd_validate, "check model assumptions and margins"),
            ("simulate", cmd_simulate, "run the closed loop, write trajectory artifacts"),
            ("spectrum", cmd_spectrum, "eigenvalues and dissipativity certificate"),
            ("resolvent", cmd_resolvent, "resolvent-norm sweep on the imaginary axis"),
            ("decay", cmd_decay, "long run plus polynomial decay fit"),
            ("sweep", cmd_sweep, "cartesian sweep over gain values")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", required=True, help="scenario config file (INI)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized certificates")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers (sweep only)")
        if name == "simulate":
            p.add_argument("--export-matrices", action="store_true",
                           help="also write dense A and G text matrices")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, AssemblyError, diagnostics.DiagnosticsError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
