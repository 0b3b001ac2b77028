"""Generalized cosine/sine pairs built from the polynomial diagonals.

Four series: the primal pair C_wv, S_wv (cadlag, driven by the F-diagonals)
and the dual pair C_vw, S_vw (caglad, G-diagonals).  They reduce to
cos(alpha x) and sin(alpha x) when both measures are the identity, satisfy
the product identity C_wv C_vw + S_wv S_vw = 1, and their one-sided
derivatives swap pairs with a factor of alpha.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .calculus import DerivativeSide, PolynomialDiagonals, lateral_derivative
from .errors import TruncationNotConverged
from .measure import Grid, GridFunction, Side

_SERIES_TOL = 1e-12


class TrigKind(Enum):
    CWV = "cwv"
    SWV = "swv"
    CVW = "cvw"
    SVW = "svw"


@dataclass
class TrigEval:
    alpha: float
    kind: TrigKind
    values: GridFunction
    truncation_order: int
    truncation_bound: float


def _required_order(diag: PolynomialDiagonals, alpha: float, tolerance: float) -> int:
    """Smallest N whose factorial-squared tail bound falls below tolerance."""
    scale = max(1.0, diag.q_seq[0], diag.q_dual_seq[0]) * max(alpha, 1.0)
    for n in range(1, 400):
        if diag.tail_bound(alpha, n, scale) < tolerance:
            return n
    raise TruncationNotConverged(f"series for alpha={alpha} does not meet tol={tolerance}")


def _neumaier_sum(terms: np.ndarray) -> np.ndarray:
    """Compensated summation along axis 0: the series alternates and its terms
    grow before they decay, so naive summation loses the small result."""
    total = np.zeros(terms.shape[1])
    comp = np.zeros(terms.shape[1])
    for row in terms:
        t = total + row
        comp += np.where(np.abs(total) >= np.abs(row),
                         (total - t) + row, (row - t) + total)
        total = t
    return total + comp


def ensure_order(diag: PolynomialDiagonals, alpha: float,
                 tolerance: float = _SERIES_TOL) -> tuple[PolynomialDiagonals, int, float]:
    n = _required_order(diag, alpha, tolerance)
    diag = diag.extend_to(n)
    scale = max(1.0, diag.q_seq[0], diag.q_dual_seq[0]) * max(alpha, 1.0)
    return diag, n, diag.tail_bound(alpha, n + 1, scale)


def trig_eval(grid: Grid, diag: PolynomialDiagonals, kind: TrigKind, alpha: float,
              tolerance: float = _SERIES_TOL) -> TrigEval:
    """Evaluate one generalized trigonometric function on the grid."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    diag, n, bound = ensure_order(diag, alpha, tolerance)
    polys = {
        TrigKind.CWV: diag.p_polys, TrigKind.SWV: diag.q_polys,
        TrigKind.CVW: diag.p_dual_polys, TrigKind.SVW: diag.q_dual_polys,
    }[kind]
    side = Side.CADLAG if kind in (TrigKind.CWV, TrigKind.SWV) else Side.CAGLAD
    sine = kind in (TrigKind.SWV, TrigKind.SVW)

    rows_v, rows_l, rows_r, ends = [], [], [], []
    for k in range(n + 1):
        coef = (-1.0) ** k * alpha ** (2 * k + (1 if sine else 0))
        vals, lefts, rights = polys[k].eval(grid.nodes, side)
        rows_v.append(coef * vals)
        rows_l.append(coef * lefts)
        rows_r.append(coef * rights)
        ends.append(coef * polys[k].end_value)
    values = _neumaier_sum(np.asarray(rows_v))
    lefts = _neumaier_sum(np.asarray(rows_l))
    rights = _neumaier_sum(np.asarray(rows_r))
    end = float(np.asarray(ends).sum())
    gf = GridFunction(grid, values, side,
                      left_limits=lefts if side is Side.CADLAG else None,
                      right_limits=rights if side is Side.CAGLAD else None,
                      period_increment=end - values[0])
    if side is Side.CADLAG:
        gf.left_limits[0] = gf.values[0]  # continuous at the tagged origin modulo period
    return TrigEval(alpha, kind, gf, n, bound)


def end_values(diag: PolynomialDiagonals, alpha: float,
               tolerance: float = _SERIES_TOL) -> tuple[dict[TrigKind, float], float]:
    """The four series evaluated at 1, compensated; used by the boundary system."""
    diag, n, bound = ensure_order(diag, alpha, tolerance)
    seqs = {
        TrigKind.CWV: diag.p_seq, TrigKind.SWV: diag.q_seq,
        TrigKind.CVW: diag.p_dual_seq, TrigKind.SVW: diag.q_dual_seq,
    }
    out = {}
    for kind, seq in seqs.items():
        sine = kind in (TrigKind.SWV, TrigKind.SVW)
        k = np.arange(n + 1)
        coefs = (-1.0) ** k * alpha ** (2 * k + (1 if sine else 0))
        out[kind] = float(_neumaier_sum((coefs * seq[:n + 1])[:, None])[0])
    return out, bound


def fundamental_defect(grid: Grid, diag: PolynomialDiagonals, alpha: float,
                       tolerance: float = _SERIES_TOL) -> GridFunction:
    """Node-wise C_wv C_vw + S_wv S_vw - 1; zero up to truncation and roundoff."""
    cwv = trig_eval(grid, diag, TrigKind.CWV, alpha, tolerance).values
    swv = trig_eval(grid, diag, TrigKind.SWV, alpha, tolerance).values
    cvw = trig_eval(grid, diag, TrigKind.CVW, alpha, tolerance).values
    svw = trig_eval(grid, diag, TrigKind.SVW, alpha, tolerance).values
    prod = cwv * cvw + swv * svw
    return prod + (-1.0)


def derivative_relation_residual(grid: Grid, diag: PolynomialDiagonals, alpha: float,
                                 tolerance: float = _SERIES_TOL) -> float:
    """Max grid residual of the derivative swap identities.

    The backward quotient of C_wv over a dW cell equals minus alpha times the
    dW-average of S_vw over that cell exactly, so the residual compares the
    quotient against the companion's measure-weighted cell average (trapezoid
    plus exact atoms).  It decays O(m^-2) away from atoms, O(m^-1) near them.
    """
    from .measure import _cell_integrals_v, _cell_integrals_w

    cwv = trig_eval(grid, diag, TrigKind.CWV, alpha, tolerance).values
    swv = trig_eval(grid, diag, TrigKind.SWV, alpha, tolerance).values
    cvw = trig_eval(grid, diag, TrigKind.CVW, alpha, tolerance).values
    svw = trig_eval(grid, diag, TrigKind.SVW, alpha, tolerance).values

    dw, dv = grid.dw, grid.dv
    res = 0.0
    # W-side pair: D_W^- C_wv = -alpha S_vw, D_W^- S_wv = alpha C_vw
    d_cwv = lateral_derivative(cwv, DerivativeSide.W_LEFT).values
    d_swv = lateral_derivative(swv, DerivativeSide.W_LEFT).values
    res = max(res, float(np.max(np.abs(d_cwv + alpha * _cell_integrals_w(grid, svw) / dw))))
    res = max(res, float(np.max(np.abs(d_swv - alpha * _cell_integrals_w(grid, cvw) / dw))))
    # V-side pair: D_V^+ C_vw = -alpha S_wv, D_V^+ S_vw = alpha C_wv
    d_cvw = lateral_derivative(cvw, DerivativeSide.V_RIGHT).values
    d_svw = lateral_derivative(svw, DerivativeSide.V_RIGHT).values
    res = max(res, float(np.max(np.abs(d_cvw + alpha * _cell_integrals_v(grid, swv) / dv))))
    res = max(res, float(np.max(np.abs(d_svw - alpha * _cell_integrals_v(grid, cwv) / dv))))
    return res


def picard_solution(grid: Grid, alpha: float, a: float, b: float,
                    n_iter: int = 120) -> GridFunction:
    """Independent oracle: iterate the fixed point u = a + b W - alpha^2 T u
    with grid quadrature only.  Converges for any alpha (Volterra structure);
    exercises none of the series code."""
    from .calculus import DoubleIntegralOrientation, double_integral_T
    from .measure import Orientation, cumulative

    one = GridFunction.constant(grid, 1.0)
    w_path = cumulative(grid.w, one, Orientation.FROM_ZERO_RIGHT_CLOSED)
    u = GridFunction.constant(grid, a) + b * w_path
    seed = u
    for _ in range(n_iter):
        tu = double_integral_T(u, DoubleIntegralOrientation.WV)
        new = seed + (-(alpha ** 2)) * tu
        if float(np.max(np.abs(new.values - u.values))) < 1e-15 * (1 + float(np.max(np.abs(u.values)))):
            u = new
            break
        u = new
    return u
