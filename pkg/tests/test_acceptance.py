"""Acceptance suite: the release gates, one printed verdict line each.

Every test here checks one gate at its stated tolerance and prints a
single PASS/FAIL line with the measured numbers, so a log of this module
is a complete scorecard.  Run with ``pytest -rA tests/test_acceptance.py``
to see the lines for passing gates too.
"""

import time

import numpy as np
import pytest
import scipy.sparse
import scipy.sparse.linalg

import cranelab as cl
from cranelab.spectral import default_gammas

DESK = dict(N=200, Nd=100)
FINE = dict(N=400, Nd=200)


def _verdict(tag: str, ok: bool, detail: str) -> None:
    print(f"acceptance {tag}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)


@pytest.fixture(scope="module")
def fine_op(model):
    return cl.assemble(model, cl.Grid(**FINE))


@pytest.fixture(scope="module")
def smooth_run(model, desk_op):
    initial = cl.sample_initial(cl.smooth_preset(), model, desk_op.grid)
    t0 = time.perf_counter()
    traj = cl.run(initial, desk_op, T=200.0)
    elapsed = time.perf_counter() - t0
    return initial, traj, elapsed


@pytest.fixture(scope="module")
def rough_runs(model, desk_op):
    initial = cl.sample_initial(cl.rough_preset(), model, desk_op.grid)
    runs = {}
    for T in (200.0, 400.0):
        traj = cl.run(initial, desk_op, T=T, snapshot_stride=1000)
        runs[T] = cl.fit_decay(traj, desk_op, traj.omega)
    return runs


@pytest.fixture(scope="module")
def desk_band_sweeps(desk_op, fine_op):
    band = default_gammas(desk_op)
    t0 = time.perf_counter()
    coarse = cl.resolvent_sweep(desk_op, gammas=band)
    elapsed = time.perf_counter() - t0
    fine = cl.resolvent_sweep(fine_op, gammas=band)
    return coarse, fine, elapsed


def test_smooth_run_energy_monotone_within_budget(smooth_run):
    _, traj, elapsed = smooth_run
    increases = np.diff(traj.Etot)
    worst = float(np.max(increases / (1.0 + traj.Etot[:-1])))
    ok = worst <= 1e-12 and elapsed < 10.0
    _verdict("01 energy never increases on the smooth run",
             ok, f"worst relative increase {worst:.3e}, runtime {elapsed:.2f}s")
    assert worst <= 1e-12
    assert elapsed < 10.0


def test_conserved_functional_holds_to_rounding(smooth_run):
    _, traj, _ = smooth_run
    drift = float(np.max(np.abs(traj.ell)))
    allowed = 1e-10 * (1.0 + abs(traj.rho[0]))
    ok = drift <= allowed
    _verdict("02 conserved functional drift", ok,
             f"max drift {drift:.3e} <= {allowed:.3e}")
    assert ok


def test_displacement_settles_at_the_predicted_constant(model, smooth_run):
    initial, traj, _ = smooth_run
    omega = cl.equilibrium_omega(initial, model)
    final = traj.snapshots[-1]
    gap = float(np.max(np.abs(final.y - omega)))
    allowed = traj.dev_norm[-1] + 1e-3
    settled = traj.dev_norm[-1] <= 0.01 * traj.dev_norm[0]
    ok = gap <= allowed and settled
    _verdict("03 terminal profile at the a-priori constant", ok,
             f"max gap {gap:.3e} <= {allowed:.3e}, terminal deviation "
             f"{100 * traj.dev_norm[-1] / traj.dev_norm[0]:.2f}% of initial")
    assert gap <= allowed
    assert settled


def test_generator_is_dissipative_on_random_states(desk_op):
    rep = cl.dissipativity_check(desk_op, n_samples=1000, seed=0, tolerance=1e-8)
    _verdict("04 dissipation inequality on 1000 random states", rep.passed,
             f"max relative residual {rep.max_residual_rel:.3e} <= 1e-8")
    assert rep.passed


def test_spectrum_has_one_conservation_mode_and_a_stable_gap(desk_op, fine_op):
    full = cl.eigenvalues(desk_op)
    ok_zero = (full.n_zero_modes == 1
               and full.zero_mode_alignment <= 1e-8
               and full.max_re_nonzero < -1e-8)
    gap_desk = cl.eigenvalues(desk_op, restrict_dot=True).imaginary_axis_gap
    gap_fine = cl.eigenvalues(fine_op, restrict_dot=True).imaginary_axis_gap
    ratio = gap_desk / gap_fine
    ok_gap = gap_desk > 0.0 and gap_fine > 0.0 and 0.5 <= ratio <= 2.0
    _verdict("05 spectrum structure", ok_zero and ok_gap,
             f"{full.n_zero_modes} zero mode, alignment "
             f"{full.zero_mode_alignment:.1e}, max Re {full.max_re_nonzero:.3e}, "
             f"restricted gap {gap_desk:.4e} -> {gap_fine:.4e} (ratio {ratio:.3f})")
    assert ok_zero
    assert ok_gap


def test_resolvent_growth_is_quadratic_and_mesh_stable(desk_band_sweeps):
    coarse, fine, elapsed = desk_band_sweeps
    change = abs(fine.sup_scaled - coarse.sup_scaled) / coarse.sup_scaled
    ok = (np.isfinite(coarse.sup_scaled) and change < 0.25
          and elapsed < 60.0)
    _verdict("06 scaled resolvent supremum", ok,
             f"sup {coarse.sup_scaled:.4f} -> {fine.sup_scaled:.4f} "
             f"({100 * change:.2f}% change), sweep time {elapsed:.1f}s")
    assert np.isfinite(coarse.sup_scaled)
    assert change < 0.25
    assert elapsed < 60.0


def test_rough_data_decays_polynomially(rough_runs):
    fit200, fit400 = rough_runs[200.0], rough_runs[400.0]
    change = abs(fit400.C_hat - fit200.C_hat) / fit200.C_hat
    ok = (fit200.slope <= -0.4 and change < 0.25
          and fit200.rate_is_decreasing and fit400.rate_is_decreasing)
    early, late = fit200.exponential_test
    _verdict("07 polynomial decay of rough data", ok,
             f"slope {fit200.slope:.4f} <= -0.4, C_hat "
             f"{fit200.C_hat:.5f} -> {fit400.C_hat:.5f} ({100 * change:.2f}%), "
             f"local rates {early:.4f} -> {late:.4f}")
    assert fit200.slope <= -0.4
    assert change < 0.25
    assert fit200.rate_is_decreasing and fit400.rate_is_decreasing


def test_reduced_solver_agrees_with_the_assembled_matrix(model, desk_op):
    grid = desk_op.grid
    rng = np.random.default_rng(7)
    worst = 0.0
    eye = scipy.sparse.identity(desk_op.n, format="csc")
    for lam in (0.5, 1.0, 5.0):
        lu = scipy.sparse.linalg.splu((lam * eye - desk_op.A).tocsc())
        for _ in range(5):
            f = rng.standard_normal(desk_op.n)
            x_mat = lu.solve(f)
            x_red = cl.resolvent_solve_reduced(
                model, grid, lam, cl.CraneState.from_vector(grid, f))
            err = desk_op.norm(x_red.to_vector() - x_mat) / desk_op.norm(x_mat)
            worst = max(worst, err)
    ok = worst <= 1e-8
    _verdict("08 reduced resolvent solves", ok,
             f"worst relative error {worst:.3e} <= 1e-8 over 15 solves")
    assert ok


def test_norm_equivalence_constants_are_mesh_stable(desk_op, fine_op):
    a1_desk, a2_desk = cl.norm_equivalence_bounds(desk_op)
    a1_fine, a2_fine = cl.norm_equivalence_bounds(fine_op)
    ratio_desk = a1_desk / a2_desk
    ratio_fine = a1_fine / a2_fine
    change = abs(ratio_fine - ratio_desk) / ratio_desk
    ok = a1_desk > 0.0 and a1_fine > 0.0 and change < 0.10
    _verdict("09 norm equivalence constants", ok,
             f"A1 {a1_desk:.6f}, A2 {a2_desk:.6f}, ratio change "
             f"{100 * change:.3f}% under refinement")
    assert a1_desk > 0.0 and a1_fine > 0.0
    assert change < 0.10
