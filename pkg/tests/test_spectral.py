"""Spectrum structure, dissipativity sampling, and resolvent machinery."""

import numpy as np
import pytest
import scipy.linalg

import cranelab as cl
from cranelab.spectral import restrict_operator, resolution_cutoff, default_gammas


def test_full_spectrum_structure(small_op):
    rep = cl.eigenvalues(small_op)
    assert not rep.restricted
    assert rep.n_zero_modes == 1
    assert rep.zero_mode_error <= 1e-10
    assert rep.zero_mode_alignment <= 1e-8
    assert rep.max_re_nonzero < -1e-8
    assert np.isnan(rep.imaginary_axis_gap)
    lam = rep.eigenvalues
    # Real matrix: nonreal eigenvalues arrive in conjugate pairs.
    for e in lam[lam.imag > 1e-8]:
        gap = np.min(np.abs(lam - np.conj(e)))
        assert gap <= 1e-8 * (1.0 + abs(e))


def test_restricted_spectrum_drops_scaffolding_modes(small_op):
    rep = cl.eigenvalues(small_op, restrict_dot=True)
    assert rep.restricted
    assert rep.n_zero_modes == 0
    lam = rep.eigenvalues
    # No leftover trace-relaxation modes at -theta (default 1) either.
    relaxers = np.abs(lam - (-1.0)) < 1e-6
    assert not relaxers.any()
    assert rep.imaginary_axis_gap > 0.0
    assert rep.imaginary_axis_gap == pytest.approx(np.min(np.abs(lam.real)))
    assert np.max(lam.real) < 0.0


def test_restriction_preserves_the_physical_eigenvalues(small_op):
    full = cl.eigenvalues(small_op).eigenvalues
    restricted = cl.eigenvalues(small_op, restrict_dot=True).eigenvalues
    assert restricted.size == small_op.n - 4
    # Every well-resolved restricted eigenvalue appears in the full set.
    low = restricted[np.abs(restricted) < 20.0]
    assert low.size >= 8
    for e in low:
        assert np.min(np.abs(full - e)) <= 1e-6 * (1.0 + abs(e))


def test_restricted_operator_geometry(small_op, rng):
    rop = restrict_operator(small_op)
    n = small_op.n
    assert rop.V.shape == (n, n - 4)
    assert rop.dim == n - 4
    assert np.allclose(rop.V.T @ rop.V, np.eye(n - 4), atol=1e-12)
    # The subspace is invariant: A maps it into itself.
    w = rng.standard_normal(n - 4)
    v = rop.from_reduced(w)
    Av = small_op.A @ v
    back = rop.from_reduced(rop.to_reduced(Av))
    assert np.linalg.norm(Av - back) <= 1e-10 * np.linalg.norm(Av)
    # Reduced Gram norm equals the ambient weighted norm.
    assert rop.g_norm(w) == pytest.approx(small_op.norm(v), rel=1e-12)


def test_dissipativity_sampling(small_op):
    rep = cl.dissipativity_check(small_op, n_samples=200, seed=3)
    assert rep.passed
    assert rep.n_samples == 200
    assert rep.seed == 3
    assert rep.max_residual_rel <= rep.tolerance
    rep2 = cl.dissipativity_check(small_op, n_samples=200, seed=3)
    assert rep2.max_residual_rel == rep.max_residual_rel
    assert rep2.max_residual_abs == rep.max_residual_abs


@pytest.mark.parametrize("lam", [0.5, 1.0, 5.0])
def test_reduced_solver_matches_the_dense_solve(model, small_op, rng, lam):
    grid = small_op.grid
    A = small_op.A.toarray()
    shifted = lam * np.eye(small_op.n) - A
    for _ in range(3):
        f = rng.standard_normal(small_op.n)
        x_dense = np.linalg.solve(shifted, f)
        x_red = cl.resolvent_solve_reduced(model, grid, lam,
                                           cl.CraneState.from_vector(grid, f))
        err = small_op.norm(x_red.to_vector() - x_dense)
        assert err <= 1e-8 * small_op.norm(x_dense)


def test_reduced_solver_rejects_bad_inputs(model, small_op, small_grid, rng):
    f = cl.CraneState.random_in_domain(small_grid, rng)
    for lam in (0.0, -1.0):
        with pytest.raises(ValueError):
            cl.resolvent_solve_reduced(model, small_grid, lam, f)
    other = cl.Grid(N=30, Nd=15)
    g = cl.CraneState.zeros(other)
    with pytest.raises(ValueError, match="different grid"):
        cl.resolvent_solve_reduced(model, small_grid, 1.0, g)


def test_sweep_matches_dense_singular_values(small_op):
    rop = restrict_operator(small_op)
    gammas = np.array([0.3, 2.0, 7.0])
    sweep = cl.resolvent_sweep(small_op, gammas=gammas, rop=rop)
    for gamma, norm in zip(sweep.gammas, sweep.norms):
        B = 1j * gamma * np.eye(rop.dim) - rop.R
        M = rop.L.T @ scipy.linalg.solve_triangular(rop.L, B.T, lower=True).T
        sigma = scipy.linalg.svdvals(M)[-1]
        assert norm == pytest.approx(1.0 / sigma, rel=1e-6)


def test_sweep_excludes_frequencies_beyond_the_cutoff(small_op):
    cutoff = resolution_cutoff(small_op)
    assert cutoff == pytest.approx(0.5 * 40 * min(1.0, 2.0))
    gammas = np.geomspace(0.5, 2.0 * cutoff, 12)
    expected_out = int((gammas > cutoff * (1.0 + 1e-12)).sum())
    assert expected_out > 0
    with pytest.warns(UserWarning, match="resolution cutoff"):
        sweep = cl.resolvent_sweep(small_op, gammas=gammas)
    assert sweep.n_excluded == expected_out
    assert sweep.norms.size == gammas.size - expected_out
    assert sweep.gamma_max_resolved <= cutoff * (1.0 + 1e-12)
    assert sweep.sup_scaled == pytest.approx(np.max(sweep.norms / sweep.gammas ** 2))
    assert np.all(np.isfinite(sweep.norms))


def test_sweep_validates_frequencies(small_op):
    with pytest.raises(ValueError):
        cl.resolvent_sweep(small_op, gammas=np.array([1.0, 0.5, 2.0]))
    with pytest.raises(ValueError):
        cl.resolvent_sweep(small_op, gammas=np.array([-1.0, 1.0]))
    with pytest.raises(ValueError):
        cl.resolvent_sweep(small_op, gammas=np.array([]))


def test_default_gammas_span_the_resolved_band(small_op):
    g = default_gammas(small_op)
    assert g.size == 100
    assert g[0] == pytest.approx(0.1)
    assert g[-1] == pytest.approx(resolution_cutoff(small_op))
    assert np.all(np.diff(g) > 0.0)
