"""Exact Stieltjes cumulatives of piecewise polynomials.

The measures in this package have piecewise-linear continuous profiles plus
finitely many atoms, so every function reached by iterating the running
integrals x -> int_(0,x] f dW and x -> int_[0,x) f dV from polynomial seeds
stays polynomial between breakpoints.  This module computes those iterates
exactly (up to float roundoff): per cell a coefficient vector in the local
coordinate t = x - b_j, atoms folded in at the cell boundaries.

Exactness matters because the characteristic series of the spectral module
amplifies relative coefficient error by roughly e^sqrt(z); quadrature-grade
diagonals would destroy the root finder.  All iterates grown from nonnegative
seeds have nonnegative local coefficients, so Horner evaluation is
cancellation-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import Grid, GridFunction, MeasureFunction, Side


@dataclass(frozen=True)
class CellLayout:
    """Breakpoints = atoms + knots of both measures; per-cell measure densities."""

    breaks: np.ndarray    # K+1 points, 0 = b_0 < ... < b_K = 1
    w_slope: np.ndarray   # continuous W density on cell j (constant: knots are breakpoints)
    v_slope: np.ndarray
    w_atom: np.ndarray    # K+1 atom masses at the breakpoints (none at 0 or 1)
    v_atom: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.breaks.size - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breaks)


def cell_layout(w: MeasureFunction, v: MeasureFunction) -> CellLayout:
    pts = np.unique(np.concatenate([
        [0.0, 1.0], w.atom_x, v.atom_x, w.knot_x, v.knot_x,
    ]))
    lengths = np.diff(pts)
    w_slope = np.diff(np.asarray(w.continuous_part(pts))) / lengths
    v_slope = np.diff(np.asarray(v.continuous_part(pts))) / lengths

    def atoms_at(mf: MeasureFunction) -> np.ndarray:
        out = np.zeros(pts.size)
        for x, mass in zip(mf.atom_x, mf.atom_mass):
            out[int(np.argmin(np.abs(pts - x)))] += mass
        return out

    return CellLayout(pts, w_slope, v_slope, atoms_at(w), atoms_at(v))


class PiecewisePoly:
    """One polynomial per open cell, in local coordinates; node values derived by side."""

    __slots__ = ("layout", "coeffs")

    def __init__(self, layout: CellLayout, coeffs: list[np.ndarray]):
        self.layout = layout
        self.coeffs = coeffs

    @staticmethod
    def constant(layout: CellLayout, c: float) -> "PiecewisePoly":
        return PiecewisePoly(layout, [np.array([float(c)]) for _ in range(layout.n_cells)])

    @staticmethod
    def measure_path(layout: CellLayout, mf: MeasureFunction) -> "PiecewisePoly":
        """W(x) (cadlag value on open cells) or V(x+) for a caglad measure."""
        coeffs = []
        for j in range(layout.n_cells):
            b = layout.breaks[j]
            if mf.side is Side.CADLAG:
                base = float(mf.continuous_part(b)) + float(mf.atom_mass[mf.atom_x <= b].sum())
                slope = layout.w_slope[j]
            else:
                base = float(mf.continuous_part(b)) + float(mf.atom_mass[mf.atom_x <= b].sum())
                slope = layout.v_slope[j]
            coeffs.append(np.array([base, slope]))
        return PiecewisePoly(layout, coeffs)

    # -- evaluation ------------------------------------------------------------

    def _cell_value(self, j: int, t: float) -> float:
        c = self.coeffs[j]
        acc = 0.0
        for a in c[::-1]:
            acc = acc * t + a
        return acc

    def left_of_break(self, j: int) -> float:
        """Limit from the left at breakpoint b_j (j >= 1)."""
        return self._cell_value(j - 1, self.layout.lengths[j - 1])

    def right_of_break(self, j: int) -> float:
        """Limit from the right at breakpoint b_j (j <= K-1)."""
        return self._cell_value(j, 0.0)

    @property
    def end_value(self) -> float:
        """Limit at 1 from the left (equals the value at 1: no atom sits there)."""
        return self.left_of_break(self.layout.n_cells)

    def eval(self, x: np.ndarray, side: Side) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """values, left limits, right limits at sorted positions x in [0, 1).

        ``side`` picks the value convention at breakpoints.  The left limit
        reported at x = 0 is the wrapped-back limit at 1 minus nothing: the
        iterates are continuous at the origin, so it equals the value there.
        """
        x = np.asarray(x, dtype=float)
        breaks = self.layout.breaks
        j = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, self.layout.n_cells - 1)
        t = x - breaks[j]
        vals = np.zeros_like(x)
        for cell in range(self.layout.n_cells):
            mask = j == cell
            if not np.any(mask):
                continue
            tm = t[mask]
            acc = np.zeros_like(tm)
            for a in self.coeffs[cell][::-1]:
                acc = acc * tm + a
            vals[mask] = acc
        lefts = vals.copy()
        rights = vals.copy()
        on_break = (np.abs(t) <= 1e-14) & (x > 0)
        for k in np.nonzero(on_break)[0]:
            cell = int(j[k])
            lefts[k] = self.left_of_break(cell)
            rights[k] = self.right_of_break(cell)
        if x.size and x[0] == 0.0:
            rights[0] = self.right_of_break(0)
            lefts[0] = rights[0]  # continuous at the tagged origin modulo the period
        out = rights if side is Side.CADLAG else lefts
        return out.copy(), lefts, rights

    def to_grid_function(self, grid: Grid, side: Side,
                         period_increment: float = 0.0) -> GridFunction:
        vals, lefts, rights = self.eval(grid.nodes, side)
        if side is Side.CADLAG:
            lefts = lefts.copy()
            lefts[0] = vals[0]  # wrapped-back convention: limit at 1- equals value + period
            return GridFunction(grid, vals, side, left_limits=lefts,
                                period_increment=period_increment)
        return GridFunction(grid, vals, side, right_limits=rights,
                            period_increment=period_increment)


def _antiderivative(c: np.ndarray) -> np.ndarray:
    out = np.empty(c.size + 1)
    out[0] = 0.0
    out[1:] = c / np.arange(1, c.size + 1)
    return out


def _poly_eval(c: np.ndarray, t: float) -> float:
    acc = 0.0
    for a in c[::-1]:
        acc = acc * t + a
    return acc


def cumulative_w(f: PiecewisePoly) -> PiecewisePoly:
    """x -> int over (0, x] of f dW, exactly.  Atoms read f's left limit."""
    lay = f.layout
    coeffs = []
    running = 0.0
    for j in range(lay.n_cells):
        running += lay.w_atom[j] * (f.left_of_break(j) if j > 0 else 0.0)
        anti = _antiderivative(f.coeffs[j]) * lay.w_slope[j]
        anti[0] = running
        coeffs.append(anti)
        running = _poly_eval(anti, lay.lengths[j])
    return PiecewisePoly(lay, coeffs)


def cumulative_v(f: PiecewisePoly) -> PiecewisePoly:
    """x -> int over [0, x) of f dV, exactly.  Atoms read f's right limit."""
    lay = f.layout
    coeffs = []
    running = 0.0
    for j in range(lay.n_cells):
        running += lay.v_atom[j] * (f.right_of_break(j) if j > 0 else 0.0)
        anti = _antiderivative(f.coeffs[j]) * lay.v_slope[j]
        anti[0] = running
        coeffs.append(anti)
        running = _poly_eval(anti, lay.lengths[j])
    return PiecewisePoly(lay, coeffs)


def double_integral_primal(f: PiecewisePoly) -> PiecewisePoly:
    """x -> int_(0,x] ( int_[0,s) f dV ) dW(s): one order of the p/q recursion."""
    return cumulative_w(cumulative_v(f))


def double_integral_dual(f: PiecewisePoly) -> PiecewisePoly:
    """x -> int_[0,x) ( int_(0,s] f dW ) dV(s): the mirrored composition."""
    return cumulative_v(cumulative_w(f))
