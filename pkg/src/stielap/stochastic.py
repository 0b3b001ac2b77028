"""Jump Brownian motion driven by the cadlag measure, stochastic integrals,
the covariance operator, and the Cameron-Martin identity.

Path increments over a cell are centered Gaussians with variance equal to the
cell's W-mass; the atom part of a cell is sampled separately so the left
limit at the atom excludes exactly the jump.  The per-path generator is a
counter-based Philox stream keyed by (master_seed << 64) + path_index, with
normal variates by inverse CDF: identical seeds reproduce identical paths
within a build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .calculus import DerivativeSide, DoubleIntegralOrientation, double_integral_T, lateral_derivative
from .errors import BoundaryViolation
from .measure import (
    Grid, GridFunction, Side, inner_product_v, inner_product_w,
    stieltjes_integral,
)


@dataclass
class SamplePath:
    grid: Grid
    values: np.ndarray        # cadlag: value at node i includes the jump at i
    pre_jump: np.ndarray      # left limit at node i (differs only at atoms)
    end_value: float          # B(1); B is not periodic
    seed: int
    path_index: int

    def increments(self) -> np.ndarray:
        """Delta B over dW cells (cell i ends at node i; index 0 is the wrap)."""
        out = self.values - np.roll(self.values, 1)
        out[0] = self.end_value - self.values[-1]
        return out

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.values, Side.CADLAG,
                            left_limits=self.pre_jump,
                            period_increment=self.end_value - self.values[0])


def _philox(master_seed: int, path_index: int) -> np.random.Generator:
    key = ((int(master_seed) & ((1 << 64) - 1)) << 64) | (int(path_index) & ((1 << 64) - 1))
    return np.random.Generator(np.random.Philox(key=key))


def _normals(gen: np.random.Generator, n: int) -> np.ndarray:
    u = gen.random(n)
    u[u == 0.0] = 0.5 / (1 << 53)
    return ndtri(u)


def _increment_scales(grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(continuous std per cell, atom std per cell, atom node indices)."""
    cont = np.sqrt(grid.dw_cont)
    atom = np.sqrt(grid.dw_atom)
    return cont, atom, np.nonzero(grid.dw_atom > 0)[0]


def sample_paths(grid: Grid, n_paths: int, master_seed: int) -> list[SamplePath]:
    """Draw W-Brownian paths on the grid, one Philox stream per path."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    cont_std, atom_std, atom_idx = _increment_scales(grid)
    n = grid.n
    out = []
    for p in range(n_paths):
        gen = _philox(master_seed, p)
        z = _normals(gen, n + atom_idx.size)
        cont_inc = z[:n] * cont_std
        jumps = np.zeros(n)
        jumps[atom_idx] = z[n:] * atom_std[atom_idx]
        inc = cont_inc + jumps
        # node i carries B(x_i) = sum of increments of cells 1..i (cell 0 wraps)
        csum = np.cumsum(inc[1:])
        values = np.concatenate([[0.0], csum])
        pre = values - jumps
        end = float(values[-1] + inc[0])
        out.append(SamplePath(grid, values, pre, end, master_seed, p))
    return out


def path_matrix(paths: list[SamplePath]) -> np.ndarray:
    return np.vstack([p.values for p in paths])


def stoch_integral(f: GridFunction, path: SamplePath) -> float:
    """Predictable integral: sum of f at the cell's left endpoint times Delta B.

    The integrand is read at its limit from the right of the left endpoint
    (the value already held inside the cell), matching the measure module's
    atom conventions; the sampled results are centered Gaussian with variance
    int f(s-)^2 dW.
    """
    reads = f.inner_right()          # f just after each node
    inc = path.increments()
    # cell i = (x[i-1], x[i]]: left endpoint is node i-1
    return float(np.dot(np.roll(reads, 1), inc))


def covariance_apply(f: GridFunction) -> GridFunction:
    """Covariance operator of the path measure via the closed form
    W(t) * int f dV - T_wv f (t); equals the kernel form with k(t,s) = W(min(t,s))."""
    grid = f.grid
    total = stieltjes_integral(grid.v, f, 0.0, 1.0)
    w_vals = np.array([grid.w.eval(x) for x in grid.nodes])
    w_lefts = w_vals - grid.dw_atom
    w_path = GridFunction(grid, w_vals, Side.CADLAG, left_limits=w_lefts,
                          period_increment=grid.w.total_mass)
    t = double_integral_T(f, DoubleIntegralOrientation.WV)
    return total * w_path - t


def covariance_apply_kernel(f: GridFunction, t: float) -> float:
    """Kernel-form cross-check at a single node: int W(min(t,s)) f(s) dV(s)."""
    grid = f.grid
    w_vals = np.array([grid.w.eval(x) for x in grid.nodes])
    w_lefts = w_vals - grid.dw_atom
    w_path = GridFunction(grid, w_vals, Side.CADLAG, left_limits=w_lefts,
                          period_increment=grid.w.total_mass)
    left = stieltjes_integral(grid.v, w_path * f, 0.0, t)
    right = grid.w.eval(t) * stieltjes_integral(grid.v, f, t, 1.0)
    return left + right


def cameron_martin_ip(u: GridFunction, v: GridFunction) -> tuple[float, float]:
    """Both sides of the reproducing identity <K u, v>_V = <D K u, D K v>_W."""
    ku = covariance_apply(u)
    kv = covariance_apply(v)
    lhs = inner_product_v(ku, v)
    dku = lateral_derivative(ku, DerivativeSide.W_LEFT)
    dkv = lateral_derivative(kv, DerivativeSide.W_LEFT)
    rhs = inner_product_w(dku, dkv)
    return lhs, rhs


def pathwise_noise(g: GridFunction, path: SamplePath, tol: float = 1e-9) -> float:
    """The white-noise functional -int B(s-) D_W^- g dW for g vanishing at the origin."""
    if abs(g.values[0]) > tol:
        raise BoundaryViolation(f"g(0) = {g.values[0]:.3e} must vanish at the tagged origin")
    dg = lateral_derivative(g, DerivativeSide.W_LEFT)
    # dW-anchored sum: B(s-) read at each cell's right endpoint
    reads = path.pre_jump.copy()
    reads[0] = path.end_value          # wrap cell ends at 1: B(1-) = B(1), no atom at 1
    return -float(np.dot(reads * dg.values, path.grid.dw))


def pathwise_noise_variance(g: GridFunction) -> float:
    """Exact variance of pathwise_noise(g) in the discrete model.

    Continuous parts read g at cell left endpoints; atoms read the cadlag
    value g(d) (the joint-jump covariation keeps the atom's own value, unlike
    the predictable integral which reads g(d-))."""
    grid = g.grid
    reads_cont = np.roll(g.values, 1)             # g at left endpoint of cell i
    var = float(np.dot(reads_cont ** 2, grid.dw_cont))
    var += float(np.dot(g.values ** 2, grid.dw_atom))
    return var


def empirical_covariance_check(paths: list[SamplePath], s_nodes: np.ndarray,
                               t_nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Empirical Cov(B(s), B(t)) against W(min(s,t)) with standard errors."""
    grid = paths[0].grid
    mat = path_matrix(paths)
    si = [grid.node_index(s) for s in s_nodes]
    ti = [grid.node_index(t) for t in t_nodes]
    n = mat.shape[0]
    diff = np.empty((len(si), len(ti)))
    se = np.empty_like(diff)
    for a, i in enumerate(si):
        for b, j in enumerate(ti):
            prod = mat[:, i] * mat[:, j]
            cov = prod.mean() - mat[:, i].mean() * mat[:, j].mean()
            expect = grid.w.eval(min(grid.nodes[i], grid.nodes[j]))
            diff[a, b] = cov - expect
            se[a, b] = prod.std(ddof=1) / np.sqrt(n)
    return diff, se, mat
