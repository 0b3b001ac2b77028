"""Increasing measure functions on the circle and Stieltjes quadrature.

Two conventions coexist throughout the package:

* a cadlag (right-continuous) increasing function induces the measure of
  half-open intervals ``(a, b] -> m(b) - m(a)``;
* a caglad (left-continuous) one induces ``[a, b) -> m(b) - m(a)``.

Both are periodic in increments, ``m(x+1) - m(x) = m(1)``, continuous at the
tagged origin, and are represented as a piecewise-linear continuous profile
plus a finite list of atoms.  Every atom and every profile knot of both
measures in play sits on the shared master grid, so quadrature sees atoms
exactly and only the smooth parts are approximated (trapezoid rule).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import IntervalMismatch, InvariantError, SchemaError

_ALIGN_TOL = 1e-12


class Side(Enum):
    CADLAG = "cadlag"
    CAGLAD = "caglad"
    MIXED = "mixed"  # products of opposite-sided functions; internal use


class EvalMode(Enum):
    VALUE = "value"
    LEFT_LIMIT = "left_limit"
    RIGHT_LIMIT = "right_limit"


class IntervalKind(Enum):
    LEFT_OPEN_RIGHT_CLOSED = "(a,b]"
    LEFT_CLOSED_RIGHT_OPEN = "[a,b)"


class Orientation(Enum):
    FROM_ZERO_RIGHT_CLOSED = "(0,x]"
    FROM_ZERO_LEFT_OPEN = "[0,x)"


@dataclass(frozen=True)
class MeasureFunction:
    """An increasing periodic function with atoms, evaluated with one-sided limits."""

    side: Side
    knot_x: np.ndarray        # strictly increasing, knot_x[0] == 0.0, knot_x[-1] == 1.0
    knot_cum: np.ndarray      # continuous-part cumulative mass at the knots, knot_cum[0] == 0
    atom_x: np.ndarray        # strictly increasing locations in (0, 1)
    atom_mass: np.ndarray     # positive masses
    name: str = "measure"

    @property
    def total_mass(self) -> float:
        return float(self.knot_cum[-1] + self.atom_mass.sum())

    @property
    def continuous_mass(self) -> float:
        return float(self.knot_cum[-1])

    def continuous_part(self, x: np.ndarray | float) -> np.ndarray | float:
        """Piecewise-linear continuous cumulative, for x in [0, 1]."""
        return np.interp(x, self.knot_x, self.knot_cum)

    def eval(self, x: float, mode: EvalMode = EvalMode.VALUE) -> float:
        """One-sided evaluation with periodic extension."""
        k = math.floor(x)
        r = x - k
        base = k * self.total_mass
        cont = float(self.continuous_part(r))
        if mode is EvalMode.VALUE:
            include = self.atom_x <= r if self.side is Side.CADLAG else self.atom_x < r
        elif mode is EvalMode.LEFT_LIMIT:
            include = self.atom_x < r
        else:
            include = self.atom_x <= r
        return base + cont + float(self.atom_mass[include].sum())

    def content_hash(self) -> str:
        doc = {
            "side": self.side.value,
            "knots": [[float(a), float(b)] for a, b in zip(self.knot_x, self.knot_cum)],
            "atoms": [[float(a), float(b)] for a, b in zip(self.atom_x, self.atom_mass)],
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "side": self.side.value,
            "knots": [[float(a), float(b)] for a, b in zip(self.knot_x, self.knot_cum)],
            "atoms": [[float(a), float(b)] for a, b in zip(self.atom_x, self.atom_mass)],
        }


def from_spec(document: dict) -> MeasureFunction:
    """Build a MeasureFunction from a measure-spec JSON document.

    Schema: ``{"name": str?, "side": "cadlag"|"caglad",
    "knots": [[x, cumulative], ...], "atoms": [[location, mass], ...]}``.
    The loader normalizes eval(0) = 0 and appends a flat final knot at 1
    when the document stops short.
    """
    if not isinstance(document, dict):
        raise SchemaError("measure spec must be a JSON object")
    for key in ("side", "knots"):
        if key not in document:
            raise SchemaError(f"measure spec missing required key {key!r}")
    side_raw = document["side"]
    if side_raw not in ("cadlag", "caglad"):
        raise SchemaError(f"side must be 'cadlag' or 'caglad', got {side_raw!r}")
    knots = document["knots"]
    atoms = document.get("atoms", [])
    name = document.get("name", "measure")
    try:
        knot_x = np.asarray([float(k[0]) for k in knots])
        knot_cum = np.asarray([float(k[1]) for k in knots])
        atom_x = np.asarray([float(a[0]) for a in atoms], dtype=float)
        atom_mass = np.asarray([float(a[1]) for a in atoms], dtype=float)
    except (TypeError, ValueError, IndexError) as exc:
        raise SchemaError(f"knots/atoms must be [position, value] pairs: {exc}") from None

    if knot_x.size < 1:
        raise SchemaError("at least one knot is required")
    if np.any(np.diff(knot_x) <= 0):
        raise InvariantError("knot positions must be strictly increasing")
    if knot_x[0] != 0.0:
        raise InvariantError("first knot must sit at position 0")
    if knot_x[-1] > 1.0:
        raise InvariantError("knot positions must lie in [0, 1]")
    knot_cum = knot_cum - knot_cum[0]
    if np.any(np.diff(knot_cum) < 0):
        raise InvariantError("cumulative continuous mass must be nondecreasing")
    if knot_x[-1] < 1.0:
        knot_x = np.append(knot_x, 1.0)
        knot_cum = np.append(knot_cum, knot_cum[-1])

    if atom_x.size:
        order = np.argsort(atom_x)
        atom_x, atom_mass = atom_x[order], atom_mass[order]
        if np.any(atom_mass <= 0):
            raise InvariantError("atom masses must be positive")
        if np.any(np.diff(atom_x) == 0):
            raise InvariantError("atom locations must be distinct")
        if np.any(atom_x <= 0.0) or np.any(atom_x >= 1.0):
            raise InvariantError("atoms must lie in (0, 1): both measures are continuous at the tagged zero")

    m = MeasureFunction(Side(side_raw), knot_x, knot_cum, atom_x, atom_mass, name)
    if m.total_mass <= 0:
        raise InvariantError("total mass must be positive")
    return m


def identity_measure(side: Side = Side.CADLAG, name: str = "identity") -> MeasureFunction:
    return from_spec({"name": name, "side": side.value, "knots": [[0.0, 0.0], [1.0, 1.0]], "atoms": []})


# ---------------------------------------------------------------------------
# Master grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Shared master grid: atoms and knots of both measures plus uniform refinement.

    Cell conventions (n = number of nodes, indices mod n):

    * dW cell ``i`` is ``(x[i-1], x[i]]`` -- the wrap cell ``(x[n-1], 1]`` has
      index 0; a W-atom at node ``x[i]`` belongs to dW cell ``i``.
    * dV cell ``i`` is ``[x[i], x[i+1])`` -- the wrap cell ``[x[n-1], 1)`` has
      index n-1; a V-atom at node ``x[i]`` belongs to dV cell ``i``.
    """

    w: MeasureFunction
    v: MeasureFunction
    nodes: np.ndarray           # sorted, nodes[0] == 0.0, in [0, 1)
    dw_cont: np.ndarray         # continuous W mass of dW cell i
    dw_atom: np.ndarray         # W atom mass at node i (0 where no atom)
    dv_cont: np.ndarray         # continuous V mass of dV cell i
    dv_atom: np.ndarray         # V atom mass at node i
    resolution: int

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def dw(self) -> np.ndarray:
        """Total W mass of dW cells (atom at the right endpoint included)."""
        return self.dw_cont + self.dw_atom

    @property
    def dv(self) -> np.ndarray:
        """Total V mass of dV cells (atom at the left endpoint included)."""
        return self.dv_cont + self.dv_atom

    def node_index(self, x: float) -> int:
        i = int(np.searchsorted(self.nodes, x - _ALIGN_TOL))
        if i < self.n and abs(self.nodes[i] - x) <= _ALIGN_TOL:
            return i
        raise IntervalMismatch(f"position {x} is not a grid node")


def build_grid(w: MeasureFunction, v: MeasureFunction, m: int = 256) -> Grid:
    """Union of both measures' atoms and knots with a uniform m-point refinement."""
    if m < 2:
        raise InvariantError("grid resolution must be at least 2")
    pts = np.concatenate([
        np.arange(m) / m,
        w.atom_x, v.atom_x,
        w.knot_x[:-1], v.knot_x[:-1],
    ])
    pts = np.unique(np.round(pts / _ALIGN_TOL) * _ALIGN_TOL)
    pts = pts[(pts >= 0.0) & (pts < 1.0)]
    # snap the rounded grid back onto exact atom/knot coordinates
    for special in (w.atom_x, v.atom_x, w.knot_x[:-1], v.knot_x[:-1]):
        for x in special:
            j = int(np.argmin(np.abs(pts - x)))
            pts[j] = x
    nodes = np.unique(pts)
    n = nodes.size
    right = np.append(nodes[1:], 1.0)

    def atom_at_nodes(mf: MeasureFunction) -> np.ndarray:
        out = np.zeros(n)
        for x, mass in zip(mf.atom_x, mf.atom_mass):
            out[int(np.argmin(np.abs(nodes - x)))] += mass
        return out

    wc = np.asarray(w.continuous_part(np.append(nodes, 1.0)))
    vc = np.asarray(v.continuous_part(np.append(nodes, 1.0)))
    dw_cont = np.roll(np.diff(wc), -1)          # cell i ends at node i
    dw_cont[0] = wc[-1] - wc[-2]                # wrap cell (x[n-1], 1]
    dv_cont = np.diff(vc)                       # cell i starts at node i
    return Grid(w, v, nodes, dw_cont, atom_at_nodes(w), dv_cont, atom_at_nodes(v), m)


# ---------------------------------------------------------------------------
# Grid functions
# ---------------------------------------------------------------------------

@dataclass
class GridFunction:
    """A function sampled on the master grid with one-sided limits at the nodes.

    ``values[i]`` is the function's own-side value at node ``x[i]``.  The
    opposite-side limits are stored where they differ (piecewise-constant
    derivative outputs differ at every node; sampled smooth functions at
    none).  ``period_increment`` records f(x+1) - f(x) for cumulative-type
    functions that grow by a fixed amount per period; genuine circle
    functions carry 0.
    """

    grid: Grid
    values: np.ndarray
    side: Side
    left_limits: np.ndarray | None = None    # torus left limit at node i; stored for cadlag/mixed
    right_limits: np.ndarray | None = None   # right limit at node i; stored for caglad/mixed
    period_increment: float = 0.0
    wrap_value: float | None = None          # f(1-); derived unless the algebra must pin it

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise InvariantError("GridFunction values must match the grid size")

    def end_left(self) -> float:
        """f(1-), which equals f(1): the measures are continuous at the origin.

        For genuine circle functions this is the left limit at the tagged
        zero; cumulative-type functions add their period increment; products
        of such functions pin it explicitly.
        """
        if self.wrap_value is not None:
            return float(self.wrap_value)
        return float(self.inner_left()[0] + self.period_increment)

    # -- one-sided reads -----------------------------------------------------

    def inner_left(self) -> np.ndarray:
        """f(x_i-) at every node (torus limit; wrap handled by callers via period_increment)."""
        if self.left_limits is not None:
            return self.left_limits
        if self.side is Side.CAGLAD:
            return self.values
        return self.values  # continuous representative

    def inner_right(self) -> np.ndarray:
        """f(x_i+) at every node."""
        if self.right_limits is not None:
            return self.right_limits
        if self.side is Side.CADLAG:
            return self.values
        return self.values

    def value_at_node(self, i: int) -> float:
        return float(self.values[i])

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def from_samples(grid: Grid, fn, side: Side = Side.CADLAG) -> "GridFunction":
        """Sample a continuous callable at the nodes (limits equal values)."""
        return GridFunction(grid, np.asarray([fn(x) for x in grid.nodes], dtype=float), side)

    @staticmethod
    def constant(grid: Grid, c: float, side: Side = Side.CADLAG) -> "GridFunction":
        return GridFunction(grid, np.full(grid.n, float(c)), side)

    @staticmethod
    def cell_constant_caglad(grid: Grid, values: np.ndarray,
                             period_increment: float = 0.0) -> "GridFunction":
        """Piecewise-constant on dW cells: value[i] held on (x[i-1], x[i]]."""
        values = np.asarray(values, dtype=float)
        return GridFunction(grid, values, Side.CAGLAD,
                            right_limits=np.roll(values, -1),
                            period_increment=period_increment)

    @staticmethod
    def cell_constant_cadlag(grid: Grid, values: np.ndarray,
                             period_increment: float = 0.0) -> "GridFunction":
        """Piecewise-constant on dV cells: value[i] held on [x[i], x[i+1])."""
        values = np.asarray(values, dtype=float)
        return GridFunction(grid, values, Side.CADLAG,
                            left_limits=np.roll(values, 1),
                            period_increment=period_increment)

    # -- algebra ---------------------------------------------------------------

    def _limits(self) -> tuple[np.ndarray, np.ndarray]:
        return self.inner_left(), self.inner_right()

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            sl, sr = self._limits()
            ol, orr = other._limits()
            side = self.side if self.side == other.side else Side.MIXED
            return GridFunction(self.grid, self.values * other.values, side,
                                left_limits=sl * ol, right_limits=sr * orr,
                                wrap_value=self.end_left() * other.end_left())
        sl, sr = self._limits()
        return GridFunction(self.grid, self.values * other, self.side,
                            left_limits=sl * other, right_limits=sr * other,
                            period_increment=self.period_increment * other,
                            wrap_value=None if self.wrap_value is None
                            else self.wrap_value * other)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, GridFunction):
            sl, sr = self._limits()
            ol, orr = other._limits()
            side = self.side if self.side == other.side else Side.MIXED
            return GridFunction(self.grid, self.values + other.values, side,
                                left_limits=sl + ol, right_limits=sr + orr,
                                period_increment=self.period_increment + other.period_increment,
                                wrap_value=(None if self.wrap_value is None
                                            and other.wrap_value is None
                                            else self.end_left() + other.end_left()))
        sl, sr = self._limits()
        return GridFunction(self.grid, self.values + other, self.side,
                            left_limits=sl + other, right_limits=sr + other,
                            period_increment=self.period_increment,
                            wrap_value=None if self.wrap_value is None
                            else self.wrap_value + other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (other * -1.0)

    def __neg__(self):
        return self * -1.0


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def _cell_integrals_w(grid: Grid, f: GridFunction) -> np.ndarray:
    """Exact-at-atoms trapezoid integral of f over every dW cell (x[i-1], x[i]].

    The trapezoid endpoints are the limits from inside the open cell; the
    atom at the right endpoint reads the integrand's left value.  Index i
    is the cell's right endpoint; index 0 is the wrap cell (x[n-1], 1].
    """
    il, ir = f.inner_left(), f.inner_right()
    left_end = np.roll(ir, 1)                      # f(x[i-1]+)
    right_end = il.copy()                          # f(x[i]-)
    right_end[0] = f.end_left()                    # f(1-) on the wrap cell
    return grid.dw_cont * 0.5 * (left_end + right_end) + grid.dw_atom * right_end


def _cell_integrals_v(grid: Grid, f: GridFunction) -> np.ndarray:
    """Trapezoid integral of f over every dV cell [x[i], x[i+1]).

    The atom at the left endpoint reads the integrand's right value.
    """
    il, ir = f.inner_left(), f.inner_right()
    left_end = ir.copy()                           # f(x[i]+)
    right_end = np.roll(il, -1)                    # f(x[i+1]-)
    right_end[-1] = f.end_left()                   # f(1-) on the wrap cell
    return grid.dv_cont * 0.5 * (left_end + right_end) + grid.dv_atom * left_end


def stieltjes_integral(m: MeasureFunction, f: GridFunction, a: float, b: float,
                       kind: IntervalKind | None = None) -> float:
    """Integral of f against dm over (a, b] (cadlag m) or [a, b) (caglad m).

    a and b must be grid nodes (b may be 1).  The continuous part is
    integrated by the trapezoid rule on grid cells; atoms contribute
    mass times the integrand's side-appropriate limit.
    """
    grid = f.grid
    expected = IntervalKind.LEFT_OPEN_RIGHT_CLOSED if m.side is Side.CADLAG \
        else IntervalKind.LEFT_CLOSED_RIGHT_OPEN
    if kind is None:
        kind = expected
    if kind is not expected:
        raise IntervalMismatch(f"{kind.value} incompatible with a {m.side.value} measure")
    if not (0.0 <= a <= b <= 1.0):
        raise IntervalMismatch("interval must satisfy 0 <= a <= b <= 1")
    ia = grid.node_index(a)
    ib = grid.n if b >= 1.0 - _ALIGN_TOL else grid.node_index(b)
    if m.side is Side.CADLAG:
        cells = _cell_integrals_w(grid, f)
        # dW cells with right endpoint in (a, b]: indices ia+1 .. ib (wrap cell = 0 for b = 1)
        total = float(cells[ia + 1:min(ib + 1, grid.n)].sum())
        if ib == grid.n:
            total += float(cells[0])
        return total
    cells = _cell_integrals_v(grid, f)
    # dV cells with left endpoint in [a, b): indices ia .. ib-1
    return float(cells[ia:ib].sum())


def cumulative(m: MeasureFunction, f: GridFunction, orientation: Orientation) -> GridFunction:
    """Running Stieltjes integral from the tagged zero.

    FROM_ZERO_RIGHT_CLOSED gives the cadlag x -> integral over (0, x] dW;
    FROM_ZERO_LEFT_OPEN gives the caglad x -> integral over [0, x) dV.
    The output's period_increment is the full-period integral.
    """
    grid = f.grid
    if orientation is Orientation.FROM_ZERO_RIGHT_CLOSED:
        if m.side is not Side.CADLAG:
            raise IntervalMismatch("(0,x] cumulative requires the cadlag measure")
        cells = _cell_integrals_w(grid, f)
        values = np.concatenate([[0.0], np.cumsum(cells[1:])])
        period = float(values[-1] + cells[0])
        atom_read = f.inner_left()
        left = values - grid.dw_atom * atom_read
        left[0] = 0.0  # no atom at the origin; continuous modulo the period
        return GridFunction(grid, values, Side.CADLAG, left_limits=left,
                            period_increment=period)
    if m.side is not Side.CAGLAD:
        raise IntervalMismatch("[0,x) cumulative requires the caglad measure")
    cells = _cell_integrals_v(grid, f)
    values = np.concatenate([[0.0], np.cumsum(cells[:-1])])
    period = float(values[-1] + cells[-1])
    atom_read = f.inner_right()
    right = values + grid.dv_atom * atom_read
    return GridFunction(grid, values, Side.CAGLAD, right_limits=right,
                        period_increment=period)


def inner_product_v(f: GridFunction, g: GridFunction) -> float:
    """L^2_V inner product on the circle."""
    return stieltjes_integral(f.grid.v, f * g, 0.0, 1.0)


def inner_product_w(f: GridFunction, g: GridFunction) -> float:
    """L^2_W inner product on the circle."""
    return stieltjes_integral(f.grid.w, f * g, 0.0, 1.0)


def v_mean(f: GridFunction) -> float:
    g = f.grid
    return stieltjes_integral(g.v, f, 0.0, 1.0) / g.v.total_mass
