"""Penalized periodic Stokes cell problems on a staggered (MAC) grid.

For each coordinate direction i the solver finds a Y-periodic velocity/
pressure pair (u_i, p_i) of the unit-forced Stokes system, with the solid
inclusion represented by a Brinkman drag term beta = 5/(2 rho^2) that
blocks flow where the regularized fluid indicator rho is at its floor.
The permeability tensor K is assembled from the solutions; its energy form
(viscous dissipation plus Brinkman dissipation) is symmetric positive
semi-definite by construction and equals the mean forced-direction
velocity through Galerkin orthogonality.

Staggering: pressure p[i,j] sits at cell centers ((i+.5)h, (j+.5)h),
x-velocity u[i,j] at vertical faces (ih, (j+.5)h), y-velocity v[i,j] at
horizontal faces ((i+.5)h, jh).  All arrays are (n, n) with periodic
wraparound; node fields (psi, rho) live at (ih, jh).

The discrete system is a symmetric saddle point with the constant-pressure
nullspace.  The default engine replaces one continuity row by a pressure
pin and factorizes once per density field (shared by both directions and
the adjoint verification solve); on the periodic grid the pinned cell's
continuity holds identically by telescoping, so the gauge fix is exact.
Residuals are always reported against the full symmetric system with the
zero-mean pressure gauge.  A MINRES engine on the symmetric singular form
is available as an independent cross-check.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridMismatchError, SolverError
from .grid import PeriodicGrid
from .levelset import DensityField, LevelSetField, central_gradient

RHO_FLOOR = 1e-6


@dataclass
class StokesCellSolution:
    direction: int
    u: np.ndarray  # x-velocity at x-normal faces
    v: np.ndarray  # y-velocity at y-normal faces
    p: np.ndarray  # pressure at cell centers
    residual: float
    iterations: int
    grid: PeriodicGrid


@dataclass
class AdjointCellSolution:
    direction: int
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    residual: float
    iterations: int
    grid: PeriodicGrid
    mode: str = "fast"


@dataclass
class PermeabilityTensor:
    K: np.ndarray
    form: str
    grid_n: int
    delta: float

    @property
    def trace_mean(self) -> float:
        return float(np.trace(self.K)) / self.K.shape[0]


def brinkman_coefficient(rho_face: np.ndarray) -> np.ndarray:
    """Inverse Brinkman permeability 5/(2 rho^2)."""
    return 5.0 / (2.0 * rho_face**2)


def face_densities(rho: DensityField):
    """Average the node density onto the two staggered face families."""
    r = rho.values
    rho_u = 0.5 * (r + np.roll(r, -1, axis=1))  # x-faces (ih, (j+.5)h)
    rho_v = 0.5 * (r + np.roll(r, -1, axis=0))  # y-faces ((i+.5)h, jh)
    return rho_u, rho_v


def _check_rho(rho: DensityField):
    lo = float(np.min(rho.values))
    if lo < RHO_FLOOR:
        raise ValueError(
            f"density floor {lo:.3g} below {RHO_FLOOR:g}; the Brinkman "
            "coefficient would exceed 2.5e12"
        )


def _shift_matrix(n: int) -> sp.csr_matrix:
    """S @ x picks x[(i-1) % n]."""
    rows = np.arange(n)
    cols = (rows - 1) % n
    return sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, n))


def _periodic_laplacian(n: int, h: float) -> sp.csr_matrix:
    main = 2.0 * np.ones(n)
    one = np.ones(n - 1)
    L1 = sp.diags([main, -one, -one], [0, 1, -1], format="lil")
    L1[0, n - 1] += -1.0
    L1[n - 1, 0] += -1.0
    L1 = (L1 / (h * h)).tocsr()
    eye = sp.identity(n, format="csr")
    return sp.kron(L1, eye, format="csr") + sp.kron(eye, L1, format="csr")


class SaddleProblem:
    """Assembled penalized Stokes operator for one density field.

    Holds both the symmetric singular form (for residuals and MINRES) and
    a pressure-pinned gauge-fixed copy whose LU factorization is shared by
    all right-hand sides on this density.
    """

    def __init__(self, rho: DensityField):
        _check_rho(rho)
        self.rho = rho
        self.grid = rho.grid
        n = self.grid.n
        h = self.grid.h
        self.n = n
        self.h = h

        rho_u, rho_v = face_densities(rho)
        self.beta_u = brinkman_coefficient(rho_u)
        self.beta_v = brinkman_coefficient(rho_v)

        lap = _periodic_laplacian(n, h)
        self.A_u = (lap + sp.diags(self.beta_u.ravel())).tocsr()
        self.A_v = (lap + sp.diags(self.beta_v.ravel())).tocsr()

        eye = sp.identity(n, format="csr")
        shift = _shift_matrix(n)
        # pressure gradient onto faces: (p[i,j] - p[i-1,j])/h etc.
        eye2 = sp.kron(eye, eye, format="csr")
        self.G_x = (eye2 - sp.kron(shift, eye, format="csr")) / h
        self.G_y = (eye2 - sp.kron(eye, shift, format="csr")) / h

        self.matrix = sp.bmat(
            [
                [self.A_u, None, self.G_x],
                [None, self.A_v, self.G_y],
                [self.G_x.T, self.G_y.T, None],
            ],
            format="csr",
        )
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            m = self.n * self.n
            pinned = self.matrix.tolil(copy=True)
            row = 2 * m  # continuity of cell (0,0) -> pressure pin
            pinned.rows[row] = [row]
            pinned.data[row] = [1.0]
            self._lu = spla.splu(pinned.tocsc())
        return self._lu

    def rhs(self, direction: int) -> np.ndarray:
        m = self.n * self.n
        b = np.zeros(3 * m)
        if direction == 0:
            b[:m] = 1.0
        elif direction == 1:
            b[m : 2 * m] = 1.0
        else:
            raise ValueError(f"direction must be 0 or 1, got {direction}")
        return b

    def solve(self, b: np.ndarray, tol: float, engine: str = "direct"):
        """Solve for one right-hand side; returns (x, residual, iterations).

        The residual is measured on the full symmetric system after the
        zero-mean pressure projection.
        """
        m = self.n * self.n
        if engine == "direct":
            if abs(b[2 * m]) > 0.0:
                raise ValueError("pinned continuity row needs a zero rhs entry")
            x = self.lu.solve(b)
            iters = 1
        elif engine == "minres":
            x, iters = self._solve_minres(b, tol)
        else:
            raise ValueError(f"unknown engine {engine!r}")
        x[2 * m :] -= np.mean(x[2 * m :])
        bnorm = float(np.linalg.norm(b))
        res = float(np.linalg.norm(b - self.matrix @ x)) / max(bnorm, 1e-300)
        if res > tol:
            raise SolverError(
                f"saddle solve ({engine}) stalled at relative residual {res:.3e} "
                f"(tol {tol:g})",
                residual=res,
            )
        return x, res, iters

    def _solve_minres(self, b: np.ndarray, tol: float):
        # symmetric singular-but-consistent system; the constant-pressure
        # nullspace never enters the residual and is projected out at the end
        diag_u = self.A_u.diagonal()
        diag_v = self.A_v.diagonal()
        # Jacobi on the velocity blocks, identity on the pressure block; the
        # inner tolerance is tightened because minres monitors the
        # preconditioned residual, while the contract is the true one
        inv_diag = np.concatenate(
            [1.0 / diag_u, 1.0 / diag_v, np.ones(self.n * self.n)]
        )
        M = spla.LinearOperator(self.matrix.shape, matvec=lambda x: inv_diag * x)
        count = {"it": 0}

        def cb(_xk):
            count["it"] += 1

        x, info = spla.minres(
            self.matrix, b, rtol=tol * 1e-4, maxiter=400 * self.n, M=M, callback=cb
        )
        if info != 0:
            res = float(np.linalg.norm(b - self.matrix @ x)) / max(
                np.linalg.norm(b), 1e-300
            )
            raise SolverError(
                f"MINRES did not converge (info={info}) after {count['it']} "
                f"iterations; relative residual {res:.3e}",
                residual=res,
            )
        return x, count["it"]

    def unpack(self, x: np.ndarray):
        m = self.n * self.n
        u = x[:m].reshape(self.n, self.n)
        v = x[m : 2 * m].reshape(self.n, self.n)
        p = x[2 * m : 3 * m].reshape(self.n, self.n)
        return u, v, p

    def momentum_apply(self, u: np.ndarray, v: np.ndarray):
        """Apply only the viscous+Brinkman momentum blocks."""
        n = self.n
        return (
            (self.A_u @ u.ravel()).reshape(n, n),
            (self.A_v @ v.ravel()).reshape(n, n),
        )

    def solve_direction(self, direction: int, tol: float = 1e-8, engine: str = "direct"):
        b = self.rhs(direction)
        x, res, iters = self.solve(b, tol, engine)
        u, v, p = self.unpack(x)
        return StokesCellSolution(direction, u, v, p, res, iters, self.grid)


def solve_cell_stokes(
    rho: DensityField, direction: int, tol: float = 1e-8, engine: str = "direct"
) -> StokesCellSolution:
    """Solve the penalized periodic Stokes cell problem for one direction."""
    return SaddleProblem(rho).solve_direction(direction, tol, engine)


def solve_all_directions(
    rho: DensityField, tol: float = 1e-8, engine: str = "direct"
) -> list:
    """Solve both directions sharing one factorization."""
    problem = SaddleProblem(rho)
    return [problem.solve_direction(i, tol, engine) for i in range(2)]


def solve_cell_adjoint(
    rho: DensityField,
    state: StokesCellSolution,
    tol: float = 1e-8,
    mode: str = "fast",
    engine: str = "direct",
    problem: SaddleProblem = None,
) -> AdjointCellSolution:
    """Adjoint of the mean-permeability functional.

    The penalized-consistent adjoint satisfies the same saddle operator
    with right-hand side -2*(viscous+Brinkman) applied to the state, so by
    linearity U = -2u and P = -2p exactly; mode="fast" returns that
    directly, mode="solve" recomputes it through an independent solve for
    verification.
    """
    if state.grid != rho.grid:
        raise GridMismatchError("state and density live on different grids")
    if mode == "fast":
        return AdjointCellSolution(
            state.direction,
            -2.0 * state.u,
            -2.0 * state.v,
            -2.0 * state.p,
            state.residual,
            0,
            state.grid,
            mode="fast",
        )
    if mode != "solve":
        raise ValueError(f"unknown adjoint mode {mode!r}")
    if problem is None:
        problem = SaddleProblem(rho)
    ru, rv = problem.momentum_apply(state.u, state.v)
    m = problem.n * problem.n
    b = np.zeros(3 * m)
    b[:m] = -2.0 * ru.ravel()
    b[m : 2 * m] = -2.0 * rv.ravel()
    x, res, iters = problem.solve(b, tol, engine)
    u, v, p = problem.unpack(x)
    return AdjointCellSolution(
        state.direction, u, v, p, res, iters, state.grid, mode="solve"
    )


def divergence(sol: StokesCellSolution) -> np.ndarray:
    """Discrete divergence at pressure nodes."""
    h = sol.grid.h
    du = (np.roll(sol.u, -1, axis=0) - sol.u) / h
    dv = (np.roll(sol.v, -1, axis=1) - sol.v) / h
    return du + dv


def velocity_at_nodes(sol) -> np.ndarray:
    """Interpolate the staggered velocity onto psi nodes; shape (2, n, n)."""
    u_node = 0.5 * (sol.u + np.roll(sol.u, 1, axis=1))
    v_node = 0.5 * (sol.v + np.roll(sol.v, 1, axis=0))
    return np.stack([u_node, v_node])


def _dissipation_energy(a, b, beta_u, beta_v, h: float) -> float:
    """h^2 * (grad a : grad b + beta a.b), via exact summation by parts."""
    total = 0.0
    for fa, fb in ((a.u, b.u), (a.v, b.v)):
        for axis in (0, 1):
            da = (np.roll(fa, -1, axis=axis) - fa) / h
            db = (np.roll(fb, -1, axis=axis) - fb) / h
            total += float(np.sum(da * db))
    total += float(np.sum(beta_u * a.u * b.u) + np.sum(beta_v * a.v * b.v))
    return total * h * h


def permeability(
    solutions, rho: DensityField, form: str = "energy"
) -> PermeabilityTensor:
    """Assemble the permeability tensor from the d cell solutions.

    form="energy" (default): viscous plus Brinkman dissipation over the
    whole cell; symmetric PSD by construction and equal to the mean
    forced-direction velocity by Galerkin orthogonality.
    form="fluid-gradient": velocity-gradient integral restricted to the
    fluid region rho > 0.5; kept for comparison, loses exact symmetry at
    finite penalization.
    """
    sols = {s.direction: s for s in solutions}
    if sorted(sols) != [0, 1]:
        raise ValueError("need exactly one solution per direction (0 and 1)")
    for s in sols.values():
        if s.grid != rho.grid:
            raise GridMismatchError("solutions and density live on different grids")
    h = rho.grid.h
    K = np.empty((2, 2))
    if form == "energy":
        rho_u, rho_v = face_densities(rho)
        beta_u = brinkman_coefficient(rho_u)
        beta_v = brinkman_coefficient(rho_v)
        for i in range(2):
            for j in range(i, 2):
                K[i, j] = K[j, i] = _dissipation_energy(
                    sols[i], sols[j], beta_u, beta_v, h
                )
    elif form == "fluid-gradient":
        grads = {i: _component_gradients(sols[i]) for i in range(2)}
        masks = _fluid_masks(rho)
        for i in range(2):
            for j in range(i, 2):
                acc = 0.0
                for g_i, g_j, mask in zip(grads[i], grads[j], masks):
                    acc += float(np.sum(g_i * g_j * mask))
                K[i, j] = K[j, i] = acc * h * h
    else:
        raise ValueError(f"unknown permeability form {form!r}")
    return PermeabilityTensor(K, form, rho.grid.n, rho.delta)


def _component_gradients(sol: StokesCellSolution):
    """Staggered first differences of (u, v); each lives at its own point."""
    h = sol.grid.h
    du_dx = (np.roll(sol.u, -1, axis=0) - sol.u) / h  # cell centers
    du_dy = (sol.u - np.roll(sol.u, 1, axis=1)) / h  # nodes
    dv_dx = (sol.v - np.roll(sol.v, 1, axis=0)) / h  # nodes
    dv_dy = (np.roll(sol.v, -1, axis=1) - sol.v) / h  # cell centers
    return du_dx, du_dy, dv_dx, dv_dy


def _fluid_masks(rho: DensityField):
    """Fluid indicators at cell centers and nodes matching the gradients."""
    r = rho.values
    centers = 0.25 * (
        r
        + np.roll(r, -1, axis=0)
        + np.roll(r, -1, axis=1)
        + np.roll(np.roll(r, -1, axis=0), -1, axis=1)
    )
    at_centers = centers > 0.5
    at_nodes = r > 0.5
    return at_centers, at_nodes, at_nodes, at_centers


def energy_identity_residual(sol: StokesCellSolution, rho: DensityField) -> float:
    """Relative gap between total dissipation and the work of the forcing."""
    rho_u, rho_v = face_densities(rho)
    beta_u = brinkman_coefficient(rho_u)
    beta_v = brinkman_coefficient(rho_v)
    energy = _dissipation_energy(sol, sol, beta_u, beta_v, sol.grid.h)
    forcing = [sol.u, sol.v][sol.direction]
    work = float(np.sum(forcing)) * sol.grid.h**2
    return abs(energy - work) / max(abs(work), 1e-300)


@dataclass
class BandDerivative:
    """Normal-derivative samples on the interface band."""

    mask: np.ndarray  # nodes carrying a valid sample
    values: np.ndarray  # (n, n) or (k, n, n), zero off the band
    excluded: int  # band nodes dropped for degenerate grad(psi)


def interface_normal_derivative(
    field: np.ndarray, psi: LevelSetField, band_w: float = 1.5
) -> BandDerivative:
    """d(field)/dn on the band |psi| < band_w*h, biased into the fluid.

    field is a node scalar (n, n) or a stack of components (k, n, n); the
    normal n = grad(psi)/|grad(psi)| points from solid into fluid, and each
    one-sided difference is taken on the fluid side of the node.
    band_w=None evaluates on the whole grid (the natural extension).
    """
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim == 3:
        comps = [interface_normal_derivative(c, psi, band_w) for c in arr]
        return BandDerivative(
            comps[0].mask, np.stack([c.values for c in comps]), comps[0].excluded
        )
    h = psi.grid.h
    gx, gy = central_gradient(psi.values, h)
    norm = np.hypot(gx, gy)
    if band_w is None:
        band = np.ones_like(psi.values, dtype=bool)
    else:
        band = np.abs(psi.values) < band_w * h
    degenerate = band & (norm < 1e-8)
    mask = band & ~degenerate
    safe = np.maximum(norm, 1e-8)
    nx = gx / safe
    ny = gy / safe

    fwd_x = (np.roll(arr, -1, axis=0) - arr) / h
    bwd_x = (arr - np.roll(arr, 1, axis=0)) / h
    fwd_y = (np.roll(arr, -1, axis=1) - arr) / h
    bwd_y = (arr - np.roll(arr, 1, axis=1)) / h
    dfdx = np.where(nx >= 0.0, fwd_x, bwd_x)
    dfdy = np.where(ny >= 0.0, fwd_y, bwd_y)

    values = np.where(mask, nx * dfdx + ny * dfdy, 0.0)
    return BandDerivative(mask, values, int(np.count_nonzero(degenerate)))
