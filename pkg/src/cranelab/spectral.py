"""Spectrum, dissipativity certificates, and resolvent-norm sweeps.

Everything here works on the assembled matrices.  The restricted operator
is the compression of the generator to the kernel of the conserved
functional, which removes the zero eigenvalue carried by the constant
displacement; polynomial-stability experiments measure the resolvent of
that restriction along the imaginary axis, in the geometry of the
weighted Gram matrix rather than the coordinate 2-norm.

The reduced resolvent solver deliberately avoids the assembled matrix: it
eliminates the velocity, trace and delay unknowns by hand, solves a real
tridiagonal system for the displacement alone, and reconstructs the rest.
Agreement with the direct matrix solve is the strongest single check that
the assembly encodes the system it claims to.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .discretize import DEFAULT_VISCOSITY, CraneState, DiscreteOperator, Grid
from .model import CraneModel

__all__ = [
    "SpectrumReport",
    "DissipativityReport",
    "ResolventSweep",
    "RestrictedOperator",
    "restrict_operator",
    "eigenvalues",
    "dissipativity_check",
    "resolvent_solve_reduced",
    "resolution_cutoff",
    "default_gammas",
    "resolvent_sweep",
]

# |lambda| at or below this counts as the zero mode.
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues plus the scalar summaries the stability story needs.

    ``zero_mode_error`` is the Gram norm of the generator applied to the
    constant-displacement state (exactly zero in real arithmetic);
    ``zero_mode_alignment`` is the sine of the angle between the computed
    near-zero eigenvector and that direction.  ``imaginary_axis_gap`` is
    only meaningful for the restricted operator and is NaN otherwise.
    """

    eigenvalues: np.ndarray
    zero_mode_error: float
    zero_mode_alignment: float
    max_re_nonzero: float
    min_abs_re_nonzero: float
    imaginary_axis_gap: float
    restricted: bool

    @property
    def n_zero_modes(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= ZERO_TOL))


class RestrictedOperator:
    """Generator compressed to the physical invariant subspace.

    Four functionals are quotiented out: the conserved one, and the three
    trace mismatches z[0]-xi, u[0]-xi, z[N]-eta.  Each mismatch obeys its
    own autonomous relaxation, so the joint kernel is exactly invariant
    and carries every eigenvector except the relaxation triple.  Dropping
    the mismatch directions also matters quantitatively: their Gram weight
    shrinks with the mesh, so a unit-norm forcing there represents an
    ever-taller spike at a single trace node, and resolvent norms taken
    over the full space grow like 1/sqrt(h) instead of converging.

    V is an orthonormal basis of the constrained subspace; R = V' A V;
    G_r = V' G V is the Gram matrix of the inherited inner product, with
    Cholesky factor L.  The complex Schur form of R is computed on first
    use and shared by all sweep points.
    """

    def __init__(self, op: DiscreteOperator):
        self.op = op
        grid = op.grid
        N, Nd = grid.N, grid.Nd
        oz = N + 1
        ou = 2 * (N + 1)
        oxi = ou + Nd + 1
        oeta = oxi + 1
        C = np.zeros((4, op.n))
        C[0] = op.ell
        C[1, oz], C[1, oxi] = 1.0, -1.0          # z[0] - xi
        C[2, ou], C[2, oxi] = 1.0, -1.0          # u[0] - xi
        C[3, oz + N], C[3, oeta] = 1.0, -1.0     # z[N] - eta
        self.V = scipy.linalg.null_space(C)
        AV = op.A @ self.V
        self.R = self.V.T @ AV
        self.G_r = self.V.T @ op.G @ self.V
        self.L = scipy.linalg.cholesky(self.G_r, lower=True)

    @property
    def dim(self) -> int:
        return self.R.shape[0]

    @cached_property
    def _schur(self) -> tuple[np.ndarray, np.ndarray]:
        T, Q = scipy.linalg.schur(self.R.astype(complex), output="complex")
        return T, Q

    def to_reduced(self, vec: np.ndarray) -> np.ndarray:
        return self.V.T @ vec

    def from_reduced(self, w: np.ndarray) -> np.ndarray:
        return self.V @ w

    def g_norm(self, w: np.ndarray) -> float:
        return float(np.linalg.norm(self.L.T @ w))

    def resolvent_apply(self, gamma: float, w: np.ndarray) -> np.ndarray:
        """Solve (i*gamma - R) out = w through the shared Schur form."""
        T, Q = self._schur
        shifted = 1j * gamma * np.eye(self.dim) - T
        return Q @ scipy.linalg.solve_triangular(shifted, Q.conj().T @ w, lower=False)


def restrict_operator(op: DiscreteOperator) -> RestrictedOperator:
    return RestrictedOperator(op)


def eigenvalues(op: DiscreteOperator, restrict_dot: bool = False) -> SpectrumReport:
    """Full eigen-decomposition of the generator or its restriction.

    The full operator carries one eigenvalue at zero (constant
    displacement); the restriction must have none, and the distance of its
    spectrum from the imaginary axis is the reported gap.
    """
    one = op.grid.one_y()
    zero_err = op.norm(op.A @ one)

    if restrict_dot:
        rop = restrict_operator(op)
        lam = scipy.linalg.eigvals(rop.R)
        alignment = float("nan")
    else:
        lam, vecs = scipy.linalg.eig(op.A.toarray())
        k = int(np.argmin(np.abs(lam)))
        v = vecs[:, k]
        cosine = abs(v.conj() @ one) / (np.linalg.norm(v) * np.linalg.norm(one))
        alignment = float(np.sqrt(max(0.0, 1.0 - min(cosine, 1.0) ** 2)))

    order = np.lexsort((lam.imag, -lam.real))
    lam = lam[order]

    nonzero = lam[np.abs(lam) > ZERO_TOL]
    if nonzero.size:
        max_re = float(np.max(nonzero.real))
        min_abs_re = float(np.min(np.abs(nonzero.real)))
    else:
        max_re = float("nan")
        min_abs_re = float("nan")
    gap = float(np.min(np.abs(lam.real))) if restrict_dot else float("nan")

    return SpectrumReport(eigenvalues=lam, zero_mode_error=zero_err,
                          zero_mode_alignment=alignment,
                          max_re_nonzero=max_re,
                          min_abs_re_nonzero=min_abs_re,
                          imaginary_axis_gap=gap, restricted=restrict_dot)


@dataclass(frozen=True)
class DissipativityReport:
    """Worst-case margin of the generator's dissipation inequality."""

    n_samples: int
    seed: int
    max_residual_rel: float
    max_residual_abs: float
    tolerance: float
    passed: bool


def dissipativity_check(op: DiscreteOperator, n_samples: int = 1000,
                        seed: int = 0, tolerance: float = 1e-8) -> DissipativityReport:
    """Sample random compatible states and test the dissipation inequality.

    For each state s the quantity <A s, s>_G must not exceed
    (-beta + (K+|alpha|)/2) xi^2 + ((|alpha|-K)/2) u(1)^2.  Residuals are
    reported relative to the squared Gram norm of the state.
    """
    gains = op.model.gains
    abs_a = abs(gains.alpha)
    c_xi = -gains.beta + 0.5 * (gains.K + abs_a)
    c_u1 = 0.5 * (abs_a - gains.K)
    oxi = op.grid.oxi
    ou_last = op.grid.ou + op.grid.Nd

    rng = np.random.default_rng(seed)
    worst_rel = -np.inf
    worst_abs = -np.inf
    for _ in range(n_samples):
        s = CraneState.random_in_domain(op.grid, rng).to_vector()
        lhs = op.inner(op.A @ s, s)
        bound = c_xi * s[oxi] ** 2 + c_u1 * s[ou_last] ** 2
        r = lhs - bound
        worst_abs = max(worst_abs, r)
        worst_rel = max(worst_rel, r / op.inner(s, s))
    return DissipativityReport(n_samples=n_samples, seed=seed,
                               max_residual_rel=float(worst_rel),
                               max_residual_abs=float(worst_abs),
                               tolerance=tolerance,
                               passed=bool(worst_rel <= tolerance))


def resolvent_solve_reduced(model: CraneModel, grid: Grid, lam: float,
                            rhs: CraneState, trace_relaxation: float = 1.0,
                            viscosity: float | None = None) -> CraneState:
    """Solve (lam - A) s = rhs without ever forming A.

    The velocity is eliminated through z = lam*y - f, the delay line is
    integrated as a geometric recursion with ratio 1/(1 + lam*tau*hd),
    and the trace mismatches follow in closed form from the differences
    of the trace rows against the platform/load rows: each one equals
    its rhs mismatch over (lam + trace_relaxation).  What remains is one
    real tridiagonal system for the displacement.  Valid for lam > 0,
    where the shifted operator is uniformly invertible.  The keyword
    arguments must match the ones used at assembly; the defaults match
    assemble's defaults.
    """
    if lam <= 0.0:
        raise ValueError("the reduced solve is set up for lam > 0")
    if rhs.grid != grid:
        raise ValueError("dimension mismatch: rhs sampled on a different grid")
    N, Nd = grid.N, grid.Nd
    h, hd = grid.h, grid.hd
    gains, phys = model.gains, model.phys
    alpha, beta, tau, K = gains.alpha, gains.beta, gains.tau, gains.K
    theta = float(trace_relaxation)
    sigma = DEFAULT_VISCOSITY if viscosity is None else float(viscosity)
    a_mid = np.asarray(model.coeff(grid.x_mid), dtype=float)
    w = a_mid / h
    nu = sigma * h * a_mid
    m_eff = phys.m + h / 2.0 + K * tau * hd / 2.0
    M_eff = phys.M + h / 2.0

    f, g, v = rhs.y, rhs.z, rhs.u
    p, q = rhs.xi, rhs.eta

    # Trace mismatches of the solution, in closed form: subtracting the
    # xi/eta rows from their copies leaves (lam + theta) * mismatch.
    c1 = (g[0] - p) / (lam + theta)      # z[0] - xi
    c2 = (v[0] - p) / (lam + theta)      # u[0] - xi
    c3 = (g[N] - q) / (lam + theta)      # z[N] - eta

    zeta = 1.0 / (1.0 + lam * tau * hd)
    zN = zeta ** Nd
    # weighted tail of the delay forcing: sum of zeta^{Nd-k+1} v_k
    powers = zeta ** np.arange(Nd, 0, -1)
    D_v = tau * hd * float(powers @ v[1:])

    diag = np.empty(N + 1)
    lower = np.zeros(N + 1)
    upper = np.zeros(N + 1)
    b = np.empty(N + 1)

    diag[0] = lam * (m_eff * lam + beta - alpha * zN) + w[0] + lam * nu[0] / h
    upper[0] = -(w[0] + lam * nu[0] / h)
    b[0] = ((m_eff * lam + beta - alpha * zN) * f[0] + m_eff * g[0]
            - alpha * (1.0 - zN) * (c2 - c1) + alpha * D_v
            - nu[0] * (f[1] - f[0]) / h - m_eff * theta * c1)

    j = np.arange(1, N)
    lower[j] = -(a_mid[j - 1] + lam * nu[j - 1]) / h ** 2
    diag[j] = lam ** 2 + (a_mid[j - 1] + a_mid[j] + lam * (nu[j - 1] + nu[j])) / h ** 2
    upper[j] = -(a_mid[j] + lam * nu[j]) / h ** 2
    b[j] = (g[j] + lam * f[j]
            - (nu[j] * (f[j + 1] - f[j]) - nu[j - 1] * (f[j] - f[j - 1])) / h ** 2)
    # compensation entries of the trace relaxation act on rows 1 and N-1
    k1 = theta * 0.5
    k2 = theta * (tau * alpha * hd / 2.0) / h
    b[1] += k1 * c1 + k2 * c2
    b[N - 1] += k1 * c3

    lower[N] = -(w[N - 1] + lam * nu[N - 1] / h)
    diag[N] = M_eff * lam ** 2 + w[N - 1] + lam * nu[N - 1] / h
    b[N] = (M_eff * (g[N] + lam * f[N])
            + nu[N - 1] * (f[N] - f[N - 1]) / h - M_eff * theta * c3)

    ab = np.zeros((3, N + 1))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    y = scipy.linalg.solve_banded((1, 1), ab, b)

    z = lam * y - f
    xi = float(z[0] - c1)
    u = np.empty(Nd + 1)
    u[0] = z[0] - c1 + c2
    for k in range(1, Nd + 1):
        u[k] = zeta * (u[k - 1] + tau * hd * v[k])
    eta = float(z[N] - c3)
    return CraneState(grid, y, z, u, xi, eta)


def resolution_cutoff(op: DiscreteOperator) -> float:
    """Highest frequency the grid resolves well enough to sweep.

    Half the grid's spectral bandwidth: beyond roughly N*min(sqrt(a0),
    1/tau)/2 the discrete resolvent reflects the mesh, not the system.
    """
    a0 = op.model.coeff.a0
    tau = op.model.gains.tau
    return 0.5 * op.grid.N * min(np.sqrt(a0), 1.0 / tau)


def default_gammas(op: DiscreteOperator, n_points: int = 100,
                   gamma_min: float = 0.1) -> np.ndarray:
    """Log-spaced sweep frequencies over the resolved band."""
    return np.geomspace(gamma_min, resolution_cutoff(op), n_points)


@dataclass(frozen=True)
class ResolventSweep:
    """Resolvent norms of the restricted generator along the imaginary axis."""

    gammas: np.ndarray
    norms: np.ndarray
    sup_scaled: float
    gamma_max_resolved: float
    n_excluded: int

    @property
    def scaled(self) -> np.ndarray:
        return self.norms / self.gammas ** 2


def _sigma_min(rop: RestrictedOperator, gamma: float,
               x0: np.ndarray | None = None,
               tol: float = 1e-9, maxit: int = 400) -> tuple[float, np.ndarray]:
    """Smallest G-geometry singular value of (i*gamma - R).

    Power iteration on the inverse of the symmetrized pencil: with
    M = L'(i*gamma - R)L^{-T}, iterate x <- M^{-1} M^{-H} x; the Rayleigh
    quotient converges to 1/sigma_min^2.  Triangular solves reuse the
    shared Schur form, so each sweep point costs a handful of O(k^2)
    operations.  Falls back to a dense SVD if the iteration stalls.
    """
    T, Q = rop._schur
    L = rop.L
    k = rop.dim
    shifted = 1j * gamma * np.eye(k) - T

    def apply_minv_h(x: np.ndarray) -> np.ndarray:
        # M^{-H} x = L^{-1} S^{-H} L x
        w = L @ x
        w = Q @ scipy.linalg.solve_triangular(shifted, Q.conj().T @ w,
                                              lower=False, trans="C")
        return scipy.linalg.solve_triangular(L, w, lower=True)

    def apply_minv(x: np.ndarray) -> np.ndarray:
        # M^{-1} x = L' S^{-1} L^{-T} x
        w = scipy.linalg.solve_triangular(L, x, lower=True, trans="T")
        w = Q @ scipy.linalg.solve_triangular(shifted, Q.conj().T @ w, lower=False)
        return L.T @ w

    rng = np.random.default_rng(12345)
    x = x0 if x0 is not None else rng.standard_normal(k) + 1j * rng.standard_normal(k)
    x = x / np.linalg.norm(x)
    lam_prev = 0.0
    for _ in range(maxit):
        y = apply_minv_h(x)
        lam = float(np.linalg.norm(y) ** 2)  # x^H M^{-1} M^{-H} x for unit x
        z = apply_minv(y)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            break
        x = z / nz
        if abs(lam - lam_prev) <= tol * lam:
            return 1.0 / np.sqrt(lam), x
        lam_prev = lam
    # dense fallback: M = L' S L^{-T} with S reconstructed from the Schur form
    S = Q @ shifted @ Q.conj().T
    W = scipy.linalg.solve_triangular(L, S.conj().T, lower=True).conj().T
    sv = scipy.linalg.svdvals(L.T @ W)
    return float(sv[-1]), x


def resolvent_sweep(op: DiscreteOperator, gammas: np.ndarray | None = None,
                    rop: RestrictedOperator | None = None) -> ResolventSweep:
    """Norms of (i*gamma - restricted A)^{-1} in the weighted geometry.

    Frequencies beyond the grid's resolution cutoff are excluded with a
    warning rather than swept, since values there test the mesh and not
    the operator.  The scaled supremum max(norm/gamma^2) over the resolved
    band is the quantity the quadratic resolvent-growth criterion bounds.
    """
    if rop is None:
        rop = restrict_operator(op)
    if gammas is None:
        gammas = default_gammas(op)
    gammas = np.asarray(gammas, dtype=float)
    if gammas.size == 0 or np.any(gammas <= 0.0) or np.any(np.diff(gammas) <= 0.0):
        raise ValueError("sweep frequencies must be positive and increasing")
    cutoff = resolution_cutoff(op)
    resolved = gammas <= cutoff * (1.0 + 1e-12)
    n_excluded = int((~resolved).sum())
    if n_excluded:
        warnings.warn(f"excluded {n_excluded} sweep points beyond the "
                      f"resolution cutoff {cutoff:.3g}", stacklevel=2)
    gammas = gammas[resolved]

    norms = np.empty(gammas.size)
    x = None
    for i, gamma in enumerate(gammas):
        sigma, x = _sigma_min(rop, float(gamma), x0=x)
        norms[i] = 1.0 / sigma
    scaled = norms / gammas ** 2
    return ResolventSweep(gammas=gammas, norms=norms,
                          sup_scaled=float(np.max(scaled)),
                          gamma_max_resolved=float(gammas[-1]),
                          n_excluded=n_excluded)
