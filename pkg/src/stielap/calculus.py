"""One-sided discrete derivatives, the iterated double integral, and the
generalized polynomial diagonals that replace x^n/n! in the measure Maclaurin
expansion."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _pwpoly
from ._pwpoly import CellLayout, PiecewisePoly
from .errors import TruncationNotConverged, ZeroIncrement
from .measure import Grid, GridFunction, Orientation, Side, cumulative

_FACT = None


class DerivativeSide(Enum):
    W_LEFT = "w_left"
    V_RIGHT = "v_right"


class DoubleIntegralOrientation(Enum):
    WV = "wv"   # outer dW over (0,x], inner dV over [0,s)
    VW = "vw"   # outer dV over [0,x), inner dW over (0,s]


def lateral_derivative(f: GridFunction, side: DerivativeSide) -> GridFunction:
    """Backward (W-left) or forward (V-right) Newton quotient in measure increments.

    W_LEFT returns the caglad cell function (f(x_i) - f(x_{i-1})) / dW(cell i);
    V_RIGHT the cadlag forward analogue in dV.  The wrap cell uses the
    function's period increment, so derivatives of cumulatives recover their
    density at every node including the tagged zero.
    """
    grid = f.grid
    vals = f.values
    if side is DerivativeSide.W_LEFT:
        dw = grid.dw
        bad = np.nonzero(dw <= 0)[0]
        if bad.size:
            raise ZeroIncrement(f"measure puts no mass on dW cell {int(bad[0])}", int(bad[0]))
        num = vals - np.roll(vals, 1)
        num[0] = f.end_left() - vals[-1]     # f(1) = f(1-): no atom at the origin
        quot = num / dw
        return GridFunction.cell_constant_caglad(grid, quot)
    dv = grid.dv
    bad = np.nonzero(dv <= 0)[0]
    if bad.size:
        raise ZeroIncrement(f"measure puts no mass on dV cell {int(bad[0])}", int(bad[0]))
    num = np.roll(vals, -1) - vals
    num[-1] = f.end_left() - vals[-1]
    quot = num / dv
    return GridFunction.cell_constant_cadlag(grid, quot)


def double_integral_T(f: GridFunction, orientation: DoubleIntegralOrientation) -> GridFunction:
    """The iterated integral T f: grid-quadrature version for general grid functions.

    WV: x -> int_(0,x] ( int_[0,s) f dV ) dW(s), a cadlag output.
    VW: the mirrored composition, a caglad output.  Atom handling is
    inherited from measure.cumulative, so atoms are exact.
    """
    grid = f.grid
    if orientation is DoubleIntegralOrientation.WV:
        inner = cumulative(grid.v, f, Orientation.FROM_ZERO_LEFT_OPEN)
        return cumulative(grid.w, inner, Orientation.FROM_ZERO_RIGHT_CLOSED)
    inner = cumulative(grid.w, f, Orientation.FROM_ZERO_RIGHT_CLOSED)
    return cumulative(grid.v, inner, Orientation.FROM_ZERO_LEFT_OPEN)


# ---------------------------------------------------------------------------
# Generalized polynomial diagonals
# ---------------------------------------------------------------------------

@dataclass
class PolynomialDiagonals:
    """Diagonals F_n(x,x), G_n(x,x) of the generalized polynomials.

    p_seq[n] = F_{2n}(1,1) and q_seq[n] = F_{2n+1}(1,1); the dual lists carry
    the G side.  The underlying piecewise polynomials are kept so callers can
    evaluate every order anywhere on [0,1) exactly.  decay_constant is the
    empirical C with |F_{2n}(1,1)| <= C^n / (n!)^2.
    """

    layout: CellLayout
    n_max: int
    p_polys: list[PiecewisePoly]     # F_{2n}(x,x), n = 0..n_max
    q_polys: list[PiecewisePoly]     # F_{2n+1}(x,x)
    p_dual_polys: list[PiecewisePoly]  # G_{2n}(x,x)
    q_dual_polys: list[PiecewisePoly]  # G_{2n+1}(x,x)
    p_seq: np.ndarray = field(init=False)
    q_seq: np.ndarray = field(init=False)
    p_dual_seq: np.ndarray = field(init=False)
    q_dual_seq: np.ndarray = field(init=False)
    decay_constant: float = field(init=False)

    def __post_init__(self):
        self.p_seq = np.array([p.end_value for p in self.p_polys])
        self.q_seq = np.array([q.end_value for q in self.q_polys])
        self.p_dual_seq = np.array([p.end_value for p in self.p_dual_polys])
        self.q_dual_seq = np.array([q.end_value for q in self.q_dual_polys])
        self.decay_constant = self._fit_decay()

    def _fit_decay(self) -> float:
        best = 0.0
        for n in range(1, self.n_max + 1):
            for seq in (self.p_seq, self.p_dual_seq):
                val = abs(seq[n])
                if val > 0:
                    logc = (2 * _log_factorial(n) + np.log(val)) / n
                    best = max(best, float(np.exp(logc)))
        return best

    def diagonal(self, order: int) -> PiecewisePoly:
        """F_order(x, x) as a piecewise polynomial (order >= 0, F_0 = 1)."""
        if order % 2 == 0:
            return self.p_polys[order // 2]
        return self.q_polys[(order - 1) // 2]

    def tail_bound(self, alpha: float, n_from: int, scale: float = 1.0) -> float:
        """Bound on sum_{n >= n_from} alpha^(2n) C^n / (n!)^2 (times scale)."""
        total = 0.0
        term_log = None
        for n in range(n_from, n_from + 400):
            lt = 2 * n * np.log(max(alpha, 1e-300)) + n * np.log(max(self.decay_constant, 1e-300)) \
                - 2 * _log_factorial(n)
            t = float(np.exp(min(lt, 700.0)))  # saturate: a huge bound just fails the tolerance
            total += t
            if t < 1e-30 * max(total, 1.0):
                break
            term_log = lt
        return scale * total

    def extend_to(self, n_max: int) -> "PolynomialDiagonals":
        if n_max <= self.n_max:
            return self
        return _extend(self, n_max)


def _log_factorial(n: int) -> float:
    from scipy.special import gammaln
    return float(gammaln(n + 1))


def _extend(d: PolynomialDiagonals, n_max: int) -> PolynomialDiagonals:
    p, q = list(d.p_polys), list(d.q_polys)
    pd, qd = list(d.p_dual_polys), list(d.q_dual_polys)
    for _ in range(d.n_max, n_max):
        p.append(_pwpoly.double_integral_primal(p[-1]))
        q.append(_pwpoly.double_integral_primal(q[-1]))
        pd.append(_pwpoly.double_integral_dual(pd[-1]))
        qd.append(_pwpoly.double_integral_dual(qd[-1]))
    return PolynomialDiagonals(d.layout, n_max, p, q, pd, qd)


def polynomial_diagonals(grid: Grid, n_max: int) -> PolynomialDiagonals:
    """Run the p/q recursion to order n_max on the exact cell layout.

    p_{n+1} = T_WV(p_n) from p_0 = 1, q_0 = W; the dual (G) side runs the
    mirrored T_VW from 1 and V.  Cost is O(n_max * cells * degree), never a
    bivariate table.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    lay = _pwpoly.cell_layout(grid.w, grid.v)
    p = [PiecewisePoly.constant(lay, 1.0)]
    q = [PiecewisePoly.measure_path(lay, grid.w)]
    pd = [PiecewisePoly.constant(lay, 1.0)]
    qd = [PiecewisePoly.measure_path(lay, grid.v)]
    for _ in range(n_max):
        p.append(_pwpoly.double_integral_primal(p[-1]))
        q.append(_pwpoly.double_integral_primal(q[-1]))
        pd.append(_pwpoly.double_integral_dual(pd[-1]))
        qd.append(_pwpoly.double_integral_dual(qd[-1]))
    return PolynomialDiagonals(lay, n_max, p, q, pd, qd)


def maclaurin_eval(diag: PolynomialDiagonals, derivs_at_zero: list[float], x: float,
                   n_max: int | None = None, tolerance: float | None = None) -> tuple[float, float]:
    """Evaluate the generalized Maclaurin sum f(0) + sum_k derivs[k] F_k(x,x).

    derivs_at_zero[0] is f(0); derivs_at_zero[k] plays the k-th iterated
    one-sided derivative at the origin.  Returns (value, remainder_bound)
    where the bound is c_n F_2(1,1)^ceil(n/2) / ceil(n/2)! with c_n the
    largest supplied derivative magnitude.  Raises TruncationNotConverged if
    a tolerance is requested and the bound exceeds it.
    """
    if n_max is None:
        n_max = len(derivs_at_zero) - 1
    if n_max > 2 * diag.n_max:
        raise TruncationNotConverged(
            f"order {n_max} exceeds computed diagonals (2*{diag.n_max})")
    n_max = min(n_max, len(derivs_at_zero) - 1)
    total = float(derivs_at_zero[0])
    comp = 0.0
    for k in range(1, n_max + 1):
        vals, _, _ = diag.diagonal(k).eval(np.array([x]), Side.CADLAG)
        term = float(derivs_at_zero[k]) * float(vals[0])
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    f2 = float(diag.p_seq[1])
    half = (n_max + 1) // 2
    c_n = max(1.0, max(abs(float(d)) for d in derivs_at_zero))
    bound = c_n * f2 ** half / float(np.exp(_log_factorial(half)))
    if tolerance is not None and bound > tolerance:
        raise TruncationNotConverged(
            f"remainder bound {bound:.3e} exceeds tolerance {tolerance:.3e} at order {n_max}")
    return total, bound
