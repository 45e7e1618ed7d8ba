"""Finite-dimensional realization of the closed-loop crane system.

State vectors stack the five fields as ``[y_0..y_N, z_0..z_N, u_0..u_Nd,
xi, eta]`` on a uniform cable grid (N cells) and a uniform delay grid
(Nd cells).  ``assemble`` builds the generator matrix A, the Gram matrix
of the weighted energy inner product, and the row vector ``ell`` of the
conserved functional.

Three structural identities hold at the matrix level, not merely in the
fine-grid limit:

* ``ell`` is an exact left null vector of A, so the functional it
  represents is conserved by the continuous-time flow of the matrix ODE;
* the trace rows (z at both ends, u at the inflow node) are bitwise
  copies of the platform and load rows, so the compatibility constraints
  ``z[0] = xi = u[0]`` and ``z[-1] = eta`` are invariant under the flow
  with no tolerance at all;
* the Gram quadratic form dissipates along A with an exactly telescoping
  summation-by-parts identity for every compatible state.

Those exactness properties are what make 1e-12-level energy monotonicity
and conservation checks meaningful over tens of thousands of steps.  They
dictate two small departures from textbook trapezoid assembly: the
delay-line quadrature carries the half weight only at the inflow node
(full weight at the outflow node), and the platform/load rows divide by
effective masses that absorb the boundary quadrature half-weights
(``m + h/2 + K*tau*hd/2`` and ``M + h/2``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .model import CraneModel, ModelError, validate_model

__all__ = [
    "AssemblyError",
    "Grid",
    "CraneState",
    "DiscreteOperator",
    "assemble",
    "inner_product",
    "norm_equivalence_bounds",
    "project_to_dot_space",
    "export_matrices",
]

# Absolute ceiling on max |ell . A| accepted at assembly time.
ELL_NULL_TOL = 1e-12

# Default strength of the flux-form velocity smoothing; see assemble().
DEFAULT_VISCOSITY = 1e-5


class AssemblyError(RuntimeError):
    """The assembled generator violates a structural identity."""


@dataclass(frozen=True)
class Grid:
    """Uniform grids: N cable cells on [0,1], Nd delay cells on [0,1]."""

    N: int
    Nd: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("grid too small: need at least 2 cable cells")
        if self.Nd < 1:
            raise ValueError("grid too small: need at least 1 delay cell")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def hd(self) -> float:
        return 1.0 / self.Nd

    @property
    def x(self) -> np.ndarray:
        """Cable nodes x_j = j/N."""
        return np.linspace(0.0, 1.0, self.N + 1)

    @property
    def x_mid(self) -> np.ndarray:
        """Cable cell midpoints, where the stiffness coefficient is sampled."""
        x = self.x
        return 0.5 * (x[:-1] + x[1:])

    @property
    def s(self) -> np.ndarray:
        """Delay-line nodes s_k = k/Nd; node k holds the trace delayed by k*tau/Nd."""
        return np.linspace(0.0, 1.0, self.Nd + 1)

    @property
    def n(self) -> int:
        return 2 * (self.N + 1) + (self.Nd + 1) + 2

    # offsets of the five fields inside a stacked vector
    @property
    def oy(self) -> int:
        return 0

    @property
    def oz(self) -> int:
        return self.N + 1

    @property
    def ou(self) -> int:
        return 2 * (self.N + 1)

    @property
    def oxi(self) -> int:
        return 2 * (self.N + 1) + self.Nd + 1

    @property
    def oeta(self) -> int:
        return self.oxi + 1

    @property
    def sl_y(self) -> slice:
        return slice(self.oy, self.oy + self.N + 1)

    @property
    def sl_z(self) -> slice:
        return slice(self.oz, self.oz + self.N + 1)

    @property
    def sl_u(self) -> slice:
        return slice(self.ou, self.ou + self.Nd + 1)

    def one_y(self) -> np.ndarray:
        """The constant-displacement direction (ones on y, zero elsewhere)."""
        v = np.zeros(self.n)
        v[self.sl_y] = 1.0
        return v


@dataclass
class CraneState:
    """Snapshot (y, z, u, xi, eta) of the five coupled fields.

    y and z live on the cable nodes, u on the delay-line nodes; xi and eta
    are the platform and load velocities.  A state is "in domain" when the
    traces match: xi = z[0] = u[0] and eta = z[-1].
    """

    grid: Grid
    y: np.ndarray
    z: np.ndarray
    u: np.ndarray
    xi: float
    eta: float

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.xi = float(self.xi)
        self.eta = float(self.eta)
        if self.y.shape != (self.grid.N + 1,) or self.z.shape != (self.grid.N + 1,):
            raise ValueError("y and z must have N+1 nodal values")
        if self.u.shape != (self.grid.Nd + 1,):
            raise ValueError("u must have Nd+1 nodal values")

    @classmethod
    def zeros(cls, grid: Grid) -> "CraneState":
        return cls(grid, np.zeros(grid.N + 1), np.zeros(grid.N + 1),
                   np.zeros(grid.Nd + 1), 0.0, 0.0)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "CraneState":
        """Displacement identically c, everything else at rest."""
        s = cls.zeros(grid)
        s.y[:] = c
        return s

    @classmethod
    def random_in_domain(cls, grid: Grid, rng: np.random.Generator,
                         scale: float = 1.0) -> "CraneState":
        """Gaussian nodal values with the trace constraints closed afterward."""
        y = scale * rng.standard_normal(grid.N + 1)
        z = scale * rng.standard_normal(grid.N + 1)
        u = scale * rng.standard_normal(grid.Nd + 1)
        u[0] = z[0]
        return cls(grid, y, z, u, xi=z[0], eta=z[-1])

    @classmethod
    def from_vector(cls, grid: Grid, vec: np.ndarray) -> "CraneState":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (grid.n,):
            raise ValueError(f"expected a stacked vector of length {grid.n}")
        return cls(grid, vec[grid.sl_y].copy(), vec[grid.sl_z].copy(),
                   vec[grid.sl_u].copy(), float(vec[grid.oxi]), float(vec[grid.oeta]))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.y, self.z, self.u, [self.xi, self.eta]])

    def copy(self) -> "CraneState":
        return CraneState(self.grid, self.y.copy(), self.z.copy(),
                          self.u.copy(), self.xi, self.eta)

    def domain_residual(self) -> float:
        """Largest violation of the trace compatibility constraints."""
        return max(abs(self.z[0] - self.xi), abs(self.z[-1] - self.eta),
                   abs(self.u[0] - self.xi))

    def in_domain(self, tol: float = 1e-10) -> bool:
        scale = 1.0 + max(abs(self.xi), abs(self.eta),
                          float(np.max(np.abs(self.z), initial=0.0)))
        return self.domain_residual() <= tol * scale


@dataclass
class DiscreteOperator:
    """Immutable bundle: generator A, Gram structure, conserved functional.

    The Gram matrix is stored as its sparse core plus the rank-one term
    ``varpi * outer(ell, ell)``; ``G`` materializes the dense sum on demand.
    Treat instances as read-only after assembly; they may be shared freely
    across concurrent simulations.
    """

    grid: Grid
    model: CraneModel
    A: sp.csr_matrix
    G_core: sp.csr_matrix
    ell: np.ndarray
    varpi: float
    m_eff: float
    M_eff: float
    a_mid: np.ndarray
    ell_A_residual: float
    viscosity: float = 0.0
    _G_dense: np.ndarray | None = dataclasses.field(default=None, repr=False)
    _P_dense: np.ndarray | None = dataclasses.field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def mu(self) -> float:
        return self.model.gains.mu

    @property
    def dt_matched(self) -> float:
        """The time step that advances the delay line by exactly one cell."""
        return self.model.gains.tau * self.grid.hd

    @property
    def G(self) -> np.ndarray:
        """Dense Gram matrix, core plus rank-one functional term."""
        if self._G_dense is None:
            self._G_dense = self.G_core.toarray() + self.varpi * np.outer(self.ell, self.ell)
        return self._G_dense

    @property
    def P(self) -> np.ndarray:
        """Projector onto ker(ell) along the constant-displacement direction."""
        if self._P_dense is None:
            one = self.grid.one_y()
            self._P_dense = np.eye(self.n) - np.outer(one, self.ell) / self.mu
        return self._P_dense

    def functional(self, vec: np.ndarray) -> float:
        return float(self.ell @ vec)

    def gram_apply(self, vec: np.ndarray) -> np.ndarray:
        return self.G_core @ vec + (self.varpi * (self.ell @ vec)) * self.ell

    def inner(self, v1: np.ndarray, v2: np.ndarray) -> float:
        return float(v1 @ (self.G_core @ v2)
                     + self.varpi * (self.ell @ v1) * (self.ell @ v2))

    def norm(self, vec: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(vec, vec), 0.0)))

    def energy_core(self, vec: np.ndarray) -> float:
        """Half the core quadratic form: the discrete field energy."""
        return 0.5 * float(vec @ (self.G_core @ vec))


def _trace_weights(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature weights: trapezoid on the cable, inflow-half on the delay line."""
    hz = np.full(grid.N + 1, grid.h)
    hz[0] = grid.h / 2.0
    hz[-1] = grid.h / 2.0
    wu = np.full(grid.Nd + 1, grid.hd)
    wu[0] = grid.hd / 2.0
    return hz, wu


def assemble(model: CraneModel, grid: Grid, strict: bool = True,
             trace_relaxation: float = 1.0,
             viscosity: float | None = None) -> DiscreteOperator:
    """Build the generator, Gram matrix and conserved-functional row.

    With ``strict=True`` (default) the model must pass the strict gain
    window and admissible inner-product weights; ``strict=False`` only
    requires what assembly itself needs (positive coefficient, positive
    masses and delay, |alpha| < beta).  Raises ``ModelError`` when the
    model is rejected and ``AssemblyError`` if the conserved-functional
    identity fails its 1e-12 ceiling.

    ``trace_relaxation`` is the rate at which the redundant trace
    coordinates are pulled back onto the compatibility manifold
    z[0]=u[0]=xi, z[N]=eta.  The stacked layout carries those traces as
    separate entries, so without relaxation the three mismatch
    functionals would be conserved and the generator would pick up three
    spurious zero eigenvalues.  The relaxation terms vanish identically
    on the manifold (they multiply the mismatches), leave the conserved
    functional's left-kernel property intact via compensating entries on
    the first and last interior velocity rows, and park the spurious
    modes at exactly -trace_relaxation.

    ``viscosity`` (default ``DEFAULT_VISCOSITY``) sets the dimensionless
    strength of a flux-form smoothing term on the velocity block,
    nu = viscosity*h*a at each cell face.  Plain central differences
    leave the sawtooth velocity modes essentially undamped (their group
    velocity vanishes, so they never reach the damped boundary); the
    smoothing gives the unresolved band an O(viscosity/h) decay rate
    while perturbing resolved modes only at O(viscosity*h).  The term
    telescopes against the trace weights, so the conserved functional
    still annihilates A, and its quadratic form is a negative sum of
    squares, so every exact dissipation statement survives with margin.
    """
    report = validate_model(model)
    required = ["coefficient_positive", "gain_smallness", "masses_positive",
                "delay_positive"]
    if strict:
        required += ["gain_window_strict", "weights_admissible"]
    failures = [name for name in required if not report[name].passed]
    if failures:
        raise ModelError("model rejected: " + ", ".join(failures))

    N, Nd = grid.N, grid.Nd
    h, hd = grid.h, grid.hd
    n = grid.n
    oy, oz, ou = grid.oy, grid.oz, grid.ou
    oxi, oeta = grid.oxi, grid.oeta

    gains = model.gains
    phys = model.phys
    alpha, tau, K = gains.alpha, gains.tau, gains.K
    mu = gains.mu

    a_mid = np.asarray(model.coeff(grid.x_mid), dtype=float)
    if a_mid.min() <= 0.0:
        raise ModelError("stiffness coefficient is not positive at a cell midpoint")
    w = a_mid / h  # face conductances a(x_mid)/h
    c_u = 1.0 / (tau * hd)  # transport rate: one delay cell per matched step

    sigma = DEFAULT_VISCOSITY if viscosity is None else float(viscosity)
    if sigma < 0.0:
        raise ModelError("viscosity must be nonnegative")
    nu = sigma * h * a_mid  # face viscosities for the velocity smoothing

    m_eff = phys.m + h / 2.0 + K * tau * hd / 2.0
    M_eff = phys.M + h / 2.0

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    def add(r: int, c: int, v: float) -> None:
        rows.append(r)
        cols.append(c)
        vals.append(v)

    # displacement rows: dy/dt = z
    for j in range(N + 1):
        add(oy + j, oz + j, 1.0)

    # interior velocity rows: dz/dt = (flux difference)/h, plus the
    # velocity-smoothing fluxes in the same conservation form
    for j in range(1, N):
        add(oz + j, oy + j - 1, w[j - 1] / h)
        add(oz + j, oy + j, -(w[j - 1] + w[j]) / h)
        add(oz + j, oy + j + 1, w[j] / h)
        if sigma > 0.0:
            add(oz + j, oz + j - 1, nu[j - 1] / (h * h))
            add(oz + j, oz + j, -(nu[j - 1] + nu[j]) / (h * h))
            add(oz + j, oz + j + 1, nu[j] / (h * h))

    # Platform row.  The feedback -beta*xi + alpha*u[-1] is written as
    # -mu*z[0] - alpha*u[0] + alpha*u[-1], equal on the compatibility
    # manifold, which removes the xi column entirely and is what lets the
    # conserved-functional row annihilate A identically.  The boundary
    # smoothing flux lands in the platform balance (zero exterior flux),
    # closing the telescoping sum.
    platform = [(oy + 0, -w[0] / m_eff), (oy + 1, w[0] / m_eff),
                (oz + 0, -mu / m_eff)]
    if alpha != 0.0:
        platform += [(ou + 0, -alpha / m_eff), (ou + Nd, alpha / m_eff)]
    load = [(oy + N - 1, w[N - 1] / M_eff), (oy + N, -w[N - 1] / M_eff)]
    if sigma > 0.0:
        platform += [(oz + 0, -nu[0] / (h * m_eff)),
                     (oz + 1, nu[0] / (h * m_eff))]
        load += [(oz + N - 1, nu[N - 1] / (h * M_eff)),
                 (oz + N, -nu[N - 1] / (h * M_eff))]

    # Trace rows start as copies of the platform/load rows, so the
    # compatibility mismatches have no dynamics of their own; the
    # relaxation block below then makes the mismatches contract.
    for r in (oxi, oz + 0, ou + 0):
        for c, v in platform:
            add(r, c, v)
    for r in (oeta, oz + N):
        for c, v in load:
            add(r, c, v)

    # delay transport: first-order upwind away from the inflow node
    for k in range(1, Nd + 1):
        add(ou + k, ou + k - 1, c_u)
        add(ou + k, ou + k, -c_u)

    # Trace relaxation.  Each mismatch functional c(s) (z[0]-xi, u[0]-xi,
    # z[N]-eta) gets the dynamics dc/dt = -theta*c instead of dc/dt = 0,
    # which evicts the three off-manifold zero modes without touching the
    # on-manifold flow.  The compensating entries on rows z[1] and z[N-1]
    # are scaled by the functional's own trace weights, so ell.A = 0
    # still cancels term by term.
    theta = float(trace_relaxation)
    if theta < 0.0:
        raise ModelError("trace_relaxation must be nonnegative")
    if theta > 0.0:
        w_xi = tau * alpha * hd / 2.0  # ell weight of the inflow node u[0]
        k1 = theta * 0.5               # ell[z0] / ell[z1] = (h/2)/h
        k2 = theta * (w_xi / h)
        # z[0] - xi relaxes
        add(oz + 0, oz + 0, -theta)
        add(oz + 0, oxi, theta)
        add(oz + 1, oz + 0, k1)
        add(oz + 1, oxi, -k1)
        # u[0] - xi relaxes
        add(ou + 0, ou + 0, -theta)
        add(ou + 0, oxi, theta)
        if k2 != 0.0:
            add(oz + 1, ou + 0, k2)
            add(oz + 1, oxi, -k2)
        # z[N] - eta relaxes
        add(oz + N, oz + N, -theta)
        add(oz + N, oeta, theta)
        add(oz + N - 1, oz + N, k1)
        add(oz + N - 1, oeta, -k1)

    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    # Gram core: strain form on y, trapezoid mass on z, weighted delay-line
    # mass on u, point masses on the two scalars.
    hz, wu = _trace_weights(grid)
    grows: list[int] = []
    gcols: list[int] = []
    gvals: list[float] = []

    def gadd(r: int, c: int, v: float) -> None:
        grows.append(r)
        gcols.append(c)
        gvals.append(v)

    for j in range(N):
        gadd(oy + j, oy + j, w[j])
        gadd(oy + j + 1, oy + j + 1, w[j])
        gadd(oy + j, oy + j + 1, -w[j])
        gadd(oy + j + 1, oy + j, -w[j])
    for j in range(N + 1):
        gadd(oz + j, oz + j, hz[j])
    for k in range(Nd + 1):
        gadd(ou + k, ou + k, K * tau * wu[k])
    gadd(oxi, oxi, phys.m)
    gadd(oeta, oeta, phys.M)
    G_core = sp.coo_matrix((gvals, (grows, gcols)), shape=(n, n)).tocsr()

    # Conserved functional.  The scalar weights are derived from the
    # effective masses so the quadrature half-weights cancel exactly.
    ell = np.zeros(n)
    ell[oy] = mu
    ell[grid.sl_z] = hz
    ell[grid.sl_u] = tau * alpha * wu
    ell[oxi] = m_eff - h / 2.0 - tau * alpha * hd / 2.0
    ell[oeta] = M_eff - h / 2.0

    residual = float(np.max(np.abs(ell @ A)))
    if residual > ELL_NULL_TOL:
        raise AssemblyError(
            f"conserved functional is not a left null vector of A: "
            f"max |ell.A| = {residual:.3e} exceeds {ELL_NULL_TOL:.0e}")

    return DiscreteOperator(grid=grid, model=model, A=A, G_core=G_core,
                            ell=ell, varpi=model.weights.varpi,
                            m_eff=m_eff, M_eff=M_eff, a_mid=a_mid,
                            ell_A_residual=residual, viscosity=sigma)


def inner_product(s1: CraneState, s2: CraneState, op: DiscreteOperator) -> float:
    """Weighted energy inner product of two states on the operator's grid."""
    if s1.grid != op.grid or s2.grid != op.grid:
        raise ValueError("dimension mismatch: states and operator on different grids")
    return op.inner(s1.to_vector(), s2.to_vector())


def _standard_gram(op: DiscreteOperator, seminorm: bool) -> np.ndarray:
    """Gram matrix of the unweighted product norm on the same grid.

    Full version: H1 on y (unit-coefficient strain plus trapezoid mass),
    L2 trapezoid on z and u, unit weights on the scalars.  The seminorm
    version drops the y mass term, leaving only the strain form; it then
    shares the constant-displacement kernel with the core Gram matrix.
    """
    grid = op.grid
    n = grid.n
    h, hd = grid.h, grid.hd
    G = np.zeros((n, n))
    oy, oz, ou = grid.oy, grid.oz, grid.ou
    for j in range(grid.N):
        c = 1.0 / h
        G[oy + j, oy + j] += c
        G[oy + j + 1, oy + j + 1] += c
        G[oy + j, oy + j + 1] -= c
        G[oy + j + 1, oy + j] -= c
    hz = np.full(grid.N + 1, h)
    hz[0] = hz[-1] = h / 2.0
    if not seminorm:
        G[grid.sl_y, grid.sl_y] += np.diag(hz)
    G[grid.sl_z, grid.sl_z] += np.diag(hz)
    wt = np.full(grid.Nd + 1, hd)
    wt[0] = wt[-1] = hd / 2.0
    G[grid.sl_u, grid.sl_u] += np.diag(wt)
    G[grid.oxi, grid.oxi] = 1.0
    G[grid.oeta, grid.oeta] = 1.0
    return G


def norm_equivalence_bounds(op: DiscreteOperator) -> tuple[float, float]:
    """Extreme equivalence constants between the weighted and standard norms.

    Returns (A1, A2) with A1*|s|_std <= |s|_G <= A2*|s|_std for all states.
    When the rank-one weight varpi is zero both forms degenerate on the
    constant-displacement direction; the comparison then runs against the
    standard seminorm on the orthogonal complement of that direction.
    """
    if op.varpi > 0.0:
        weighted = op.G
        standard = _standard_gram(op, seminorm=False)
    else:
        one = op.grid.one_y()
        Q = scipy.linalg.null_space(one[None, :])
        weighted = Q.T @ op.G_core.toarray() @ Q
        standard = Q.T @ _standard_gram(op, seminorm=True) @ Q
    eigvals = scipy.linalg.eigh(weighted, standard, eigvals_only=True)
    lam_min, lam_max = float(eigvals[0]), float(eigvals[-1])
    if lam_min <= 0.0:
        raise AssemblyError(f"weighted norm lost positivity: min ratio {lam_min:.3e}")
    return float(np.sqrt(lam_min)), float(np.sqrt(lam_max))


def project_to_dot_space(state: CraneState, op: DiscreteOperator) -> CraneState:
    """Shift the displacement by a constant so the conserved functional vanishes."""
    value = op.functional(state.to_vector())
    out = state.copy()
    out.y -= value / op.mu
    return out


def export_matrices(op: DiscreteOperator, directory: str | Path) -> tuple[Path, Path]:
    """Write A and G as dense text matrices (row-major, one row per line).

    Entries are space-separated in %.17e, sufficient to reconstruct the
    binary doubles exactly.  Returns the two file paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    a_path = directory / "A.txt"
    g_path = directory / "G.txt"
    np.savetxt(a_path, op.A.toarray(), fmt="%.17e")
    np.savetxt(g_path, op.G, fmt="%.17e")
    return a_path, g_path
