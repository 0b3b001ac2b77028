"""Discretized-operator oracle: stiffness/mass assembly for the weak form
kappa^2 u v dV + H (D_W^- u)(D_W^- v) dW, generalized symmetric eigensolve,
and deterministic weak elliptic solves.

This path never touches the series machinery, so its eigenvalues certify the
root finder (and vice versa).  The discrete derivative pairing mirrors the
one-sided calculus exactly: the stiffness is the Galerkin matrix of the
bilinear form on cell-constant derivative fields, hence symmetric positive
semidefinite with the constants as kernel when kappa vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    CoefficientNotPositive, ConvergenceFailure, SingularSystem, SolvabilityViolation,
)
from .measure import (
    Grid, GridFunction, Side, _cell_integrals_v, _cell_integrals_w,
)


@dataclass
class DiscreteOperator:
    grid: Grid
    stiffness: sp.csr_matrix      # tridiagonal with periodic wrap
    mass: np.ndarray              # diagonal of V-cell masses
    coeff_h: GridFunction
    coeff_kappa: GridFunction
    h_cell: np.ndarray            # per-cell integral of H dW
    kappa2_cell: np.ndarray       # per-cell integral of kappa^2 dV

    @property
    def n(self) -> int:
        return self.grid.n

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.stiffness @ u

    def mass_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.dot(u * self.mass, v))

    def energy_norm(self, u: np.ndarray) -> float:
        """Discrete Sobolev norm ||u||_V^2 + ||D_W^- u||_W^2, square root."""
        grid = self.grid
        du = (u - np.roll(u, 1)) / grid.dw
        return float(np.sqrt(np.dot(u * u, grid.dv) + np.dot(du * du, grid.dw)))


def assemble(grid: Grid, h: GridFunction | float = 1.0,
             kappa: GridFunction | float = 0.0) -> DiscreteOperator:
    """Build stiffness and mass on the master grid.

    The diffusion coefficient is integrated over each dW cell with the shared
    Stieltjes quadrature (so an atom cell carries continuous plus atom mass,
    bit for bit the measure-module integral); kappa^2 is integrated over each
    dV cell and lumped on the diagonal.
    """
    if not isinstance(h, GridFunction):
        h = GridFunction.constant(grid, float(h), Side.CAGLAD)
    if not isinstance(kappa, GridFunction):
        kappa = GridFunction.constant(grid, float(kappa), Side.CADLAG)
    if np.min(h.values) <= 0 or np.min(h.inner_left()) <= 0 or np.min(h.inner_right()) <= 0:
        raise CoefficientNotPositive("H must be bounded away from zero")
    if np.min(kappa.values) < 0:
        raise CoefficientNotPositive("kappa must be nonnegative")

    n = grid.n
    h_cell = _cell_integrals_w(grid, h)                  # int of H dW over cell i
    kappa2_cell = _cell_integrals_v(grid, kappa * kappa)  # int of kappa^2 dV over cell i
    c = h_cell / grid.dw ** 2                            # B^T diag(H dW) B coefficients
    diag = c + np.roll(c, -1) + kappa2_cell
    lower = -np.roll(c, -1)                              # coupling (i, i+1)
    k = sp.diags([diag], [0], shape=(n, n), format="lil")
    idx = np.arange(n)
    nxt = (idx + 1) % n
    k[idx, nxt] = lower
    k[nxt, idx] = lower
    return DiscreteOperator(grid, k.tocsr(), grid.dv.copy(), h, kappa, h_cell, kappa2_cell)


def solve_gep(op: DiscreteOperator, k: int) -> list[tuple[float, GridFunction]]:
    """First k generalized eigenpairs of stiffness u = lambda mass u.

    Reduced through the diagonal mass to a symmetric standard problem and
    solved with a shift-inverted Lanczos iteration (deterministic start
    vector).  Eigenvectors come back mass-orthonormal, ordered by eigenvalue,
    the largest-magnitude component made positive.
    """
    n = op.n
    if k > n:
        raise ValueError("cannot request more eigenpairs than grid nodes")
    d = 1.0 / np.sqrt(op.mass)
    a = sp.diags(d) @ op.stiffness @ sp.diags(d)
    a = (a + a.T) * 0.5
    v0 = np.full(n, 1.0 / np.sqrt(n))
    try:
        if k >= n - 1:
            dense = a.toarray()
            vals, vecs = np.linalg.eigh(dense)
            vals, vecs = vals[:k], vecs[:, :k]
        else:
            vals, vecs = spla.eigsh(a, k=k, sigma=-1e-2, which="LM", v0=v0)
    except (spla.ArpackNoConvergence, RuntimeError) as exc:
        raise ConvergenceFailure(f"eigensolver failed: {exc}") from None
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    out = []
    for j in range(k):
        u = d * vecs[:, j]
        norm = np.sqrt(op.mass_inner(u, u))
        u = u / norm
        i_max = int(np.argmax(np.abs(u)))
        if u[i_max] < 0:
            u = -u
        lam = float(max(vals[j], 0.0)) if abs(vals[j]) < 1e-9 else float(vals[j])
        out.append((lam, GridFunction(op.grid, u, Side.CADLAG)))
    return out


def richardson_eigenvalues(grid_factory, resolutions: tuple[int, int, int], k: int,
                           h=1.0, kappa=0.0) -> tuple[np.ndarray, np.ndarray]:
    """Oracle eigenvalues extrapolated over a doubling resolution ladder.

    Returns (extrapolated values, error bars).  The error bar is the
    difference between the extrapolated value and the finest-grid value,
    inflated by the Richardson consistency defect of the triple.
    """
    lams = []
    for m in resolutions:
        grid = grid_factory(m)
        op = assemble(grid, h, kappa)
        lams.append(np.array([lam for lam, _ in solve_gep(op, k)]))
    l0, l1, l2 = lams
    extrap = l2 + (l2 - l1) / 3.0                     # h^2 ladder, factor-2 refinement
    consistency = np.abs((l1 - l0) / np.maximum(np.abs(l2 - l1), 1e-300))
    bars = np.abs(extrap - l2) * np.maximum(1.0, consistency / 4.0)
    return extrap, np.maximum(bars, 1e-12)


def elliptic_solve(op: DiscreteOperator, f: GridFunction) -> GridFunction:
    """Weak solve of stiffness u = mass f.

    With kappa identically zero the data must be V-mean-free (solvability);
    the returned representative is the zero-V-mean one.  The energy bound
    ||u||_{W,V} <= C ||f||_V with C from the coercivity constants is checked
    and a violation raises SingularSystem (it indicates a broken assembly).
    """
    grid = op.grid
    rhs = op.mass * f.values
    kappa_floor = float(np.min(op.coeff_kappa.values))
    kappa_zero = float(np.max(np.abs(op.kappa2_cell))) == 0.0
    if kappa_zero:
        mean = float(rhs.sum())
        if abs(mean) > 1e-10 * (1.0 + float(np.abs(rhs).sum())):
            raise SolvabilityViolation(
                "kappa == 0 requires int f dV = 0; got mean %.3e" % mean)
        one = np.ones(op.n)
        aug = sp.bmat([[op.stiffness, (op.mass * one)[:, None]],
                       [(op.mass * one)[None, :], None]], format="csc")
        try:
            sol = spla.spsolve(aug, np.concatenate([rhs, [0.0]]))
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from None
        u = sol[:-1]
    else:
        if kappa_floor <= 0:
            raise SolvabilityViolation("kappa must be zero everywhere or bounded away from zero")
        try:
            u = spla.spsolve(op.stiffness.tocsc(), rhs)
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from None
    if not np.all(np.isfinite(u)):
        raise SingularSystem("solver returned non-finite values")

    h0 = float(np.min(op.coeff_h.values))
    w1, v1 = grid.w.total_mass, grid.v.total_mass
    if kappa_zero:
        beta = 0.5 * h0 * min(1.0 / (w1 * v1), 1.0)
    else:
        beta = min(h0, kappa_floor ** 2)
    c_energy = 1.0 / beta
    f_norm = float(np.sqrt(np.dot(f.values * f.values, grid.dv)))
    if op.energy_norm(u) > c_energy * f_norm * (1.0 + 1e-8) + 1e-12:
        raise SingularSystem("energy estimate violated: assembly is inconsistent")
    return GridFunction(grid, u, Side.CADLAG)
