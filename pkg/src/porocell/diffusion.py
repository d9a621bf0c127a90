"""Scalar corrector cell problems and the effective diffusion tensor.

For each direction j a periodic corrector pi_j solves

    div( a(rho) (grad pi_j + e_j) ) = 0,        a(rho) = rho,

on cell centers with the coefficient evaluated at faces.  The vanishing
coefficient in the solid enforces the interior no-flux condition in the
sharp limit.  The effective tensor

    D_ik = sum_faces a_f (grad pi_i + e_i)_f (grad pi_k + e_k)_f h^2

is a weighted Gram form, hence symmetric positive semi-definite; it equals
the identity when no solid is present and degenerates with the coefficient
floor when the cell is entirely solid.

The linear system is symmetric positive semi-definite with the constant
nullspace; the default engine pins one unknown and factorizes, a Jacobi
preconditioned conjugate-gradient engine is available.  Residuals are
reported on the full singular system with the zero-mean gauge.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridMismatchError, SolverError
from .grid import PeriodicGrid
from .levelset import DensityField
from .stokes import face_densities


@dataclass
class DiffusionCellSolution:
    direction: int
    pi: np.ndarray  # corrector at cell centers, zero mean
    residual: float
    iterations: int
    grid: PeriodicGrid


@dataclass
class DiffusionTensor:
    D: np.ndarray
    grid_n: int
    floor: float


class DiffusionProblem:
    """Assembled face-coefficient Laplacian for one density field."""

    def __init__(self, rho: DensityField):
        self.rho = rho
        self.grid = rho.grid
        n = self.grid.n
        h = self.grid.h
        self.n = n
        self.h = h

        rho_u, rho_v = face_densities(rho)
        # west/east faces of cell (i,j) are x-faces i and i+1; south/north
        # are y-faces j and j+1
        self.a_w = rho_u
        self.a_e = np.roll(rho_u, -1, axis=0)
        self.a_s = rho_v
        self.a_n = np.roll(rho_v, -1, axis=1)

        m = n * n
        diag = (self.a_w + self.a_e + self.a_s + self.a_n).ravel() / h**2
        idx = np.arange(m).reshape(n, n)
        rows, cols, vals = [np.arange(m)], [np.arange(m)], [diag]
        for a_f, shift_axis, shift in (
            (self.a_e, 0, -1),
            (self.a_w, 0, 1),
            (self.a_n, 1, -1),
            (self.a_s, 1, 1),
        ):
            rows.append(idx.ravel())
            cols.append(np.roll(idx, shift, axis=shift_axis).ravel())
            vals.append(-a_f.ravel() / h**2)
        self.matrix = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, m),
        )
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            pinned = self.matrix.tolil(copy=True)
            pinned.rows[0] = [0]
            pinned.data[0] = [1.0]
            self._lu = spla.splu(pinned.tocsc())
        return self._lu

    def rhs(self, direction: int) -> np.ndarray:
        # -div(a grad pi) = div(a e_j): net coefficient imbalance across
        # opposing faces
        if direction == 0:
            b = (self.a_e - self.a_w) / self.h
        elif direction == 1:
            b = (self.a_n - self.a_s) / self.h
        else:
            raise ValueError(f"direction must be 0 or 1, got {direction}")
        return b.ravel()

    def solve(self, direction: int, tol: float = 1e-8, engine: str = "direct"):
        b = self.rhs(direction)
        bnorm = float(np.linalg.norm(b))
        if bnorm == 0.0:
            # constant coefficient: the corrector vanishes identically
            pi = np.zeros((self.n, self.n))
            return DiffusionCellSolution(direction, pi, 0.0, 0, self.grid)
        if engine == "direct":
            b_pinned = b.copy()
            b_pinned[0] = 0.0
            x = self.lu.solve(b_pinned)
            iters = 1
        elif engine == "cg":
            x, iters = self._solve_cg(b, tol)
        else:
            raise ValueError(f"unknown engine {engine!r}")
        x -= np.mean(x)
        res = float(np.linalg.norm(b - self.matrix @ x)) / bnorm
        if res > tol:
            raise SolverError(
                f"diffusion solve ({engine}) stalled at relative residual "
                f"{res:.3e} (tol {tol:g})",
                residual=res,
            )
        return DiffusionCellSolution(
            direction, x.reshape(self.n, self.n), res, iters, self.grid
        )

    def _solve_cg(self, b: np.ndarray, tol: float):
        inv_diag = 1.0 / self.matrix.diagonal()
        M = spla.LinearOperator(self.matrix.shape, matvec=lambda x: inv_diag * x)
        count = {"it": 0}

        def cb(_xk):
            count["it"] += 1

        x, info = spla.cg(
            self.matrix, b, rtol=tol * 1e-2, maxiter=400 * self.n, M=M, callback=cb
        )
        if info != 0:
            res = float(np.linalg.norm(b - self.matrix @ x)) / float(np.linalg.norm(b))
            raise SolverError(
                f"CG did not converge (info={info}) after {count['it']} iterations; "
                f"relative residual {res:.3e}",
                residual=res,
            )
        return x, count["it"]

    def flux_fields(self, sol: DiffusionCellSolution, direction: int):
        """(grad pi + e_j) at the two face families, for the Gram form."""
        pi = sol.pi
        h = self.h
        gx = (pi - np.roll(pi, 1, axis=0)) / h  # at x-faces
        gy = (pi - np.roll(pi, 1, axis=1)) / h  # at y-faces
        if direction == 0:
            gx = gx + 1.0
        else:
            gy = gy + 1.0
        return gx, gy


def solve_cell_diffusion(
    rho: DensityField, direction: int, tol: float = 1e-8, engine: str = "direct"
) -> DiffusionCellSolution:
    """Solve the corrector problem for one direction."""
    return DiffusionProblem(rho).solve(direction, tol, engine)


def solve_all_diffusion(
    rho: DensityField, tol: float = 1e-8, engine: str = "direct"
) -> list:
    """Solve both directions sharing one factorization."""
    problem = DiffusionProblem(rho)
    return [problem.solve(i, tol, engine) for i in range(2)]


def diffusion_tensor(solutions, rho: DensityField) -> DiffusionTensor:
    """Weighted Gram form of the corrected unit fields."""
    sols = {s.direction: s for s in solutions}
    if sorted(sols) != [0, 1]:
        raise ValueError("need exactly one solution per direction (0 and 1)")
    for s in sols.values():
        if s.grid != rho.grid:
            raise GridMismatchError("solutions and density live on different grids")
    problem = DiffusionProblem(rho)
    rho_u, rho_v = face_densities(rho)
    flux = {i: problem.flux_fields(sols[i], i) for i in range(2)}
    D = np.empty((2, 2))
    h2 = rho.grid.h ** 2
    for i in range(2):
        for k in range(i, 2):
            gx_i, gy_i = flux[i]
            gx_k, gy_k = flux[k]
            D[i, k] = D[k, i] = h2 * float(
                np.sum(rho_u * gx_i * gx_k) + np.sum(rho_v * gy_i * gy_k)
            )
    return DiffusionTensor(D, rho.grid.n, rho.delta)


def corrector_energy(rho: DensityField, field: np.ndarray, direction: int) -> float:
    """Energy sum a |e_j + grad q|^2 for any cell-centered test field q.

    The solved corrector minimizes this over periodic fields, which is the
    variational-optimality property test.
    """
    problem = DiffusionProblem(rho)
    sol = DiffusionCellSolution(direction, np.asarray(field, dtype=float), 0.0, 0, rho.grid)
    gx, gy = problem.flux_fields(sol, direction)
    rho_u, rho_v = face_densities(rho)
    return rho.grid.h ** 2 * float(np.sum(rho_u * gx * gx) + np.sum(rho_v * gy * gy))
