import numpy as np
import pytest

from stielap import measure
from stielap.errors import IntervalMismatch, InvariantError, SchemaError
from stielap.measure import (
    EvalMode, GridFunction, IntervalKind, Orientation, Side,
    build_grid, cumulative, from_spec, stieltjes_integral,
)

from conftest import ATOMIC_W, IDENTITY_V, IDENTITY_W


class TestFromSpec:
    def test_identity_profile(self):
        w = from_spec(IDENTITY_W)
        assert w.total_mass == 1.0
        assert w.eval(0.3) == pytest.approx(0.3, abs=1e-15)

    def test_atomic_direct_construction(self):
        w = from_spec(ATOMIC_W)
        assert w.total_mass == 1.0
        assert w.eval(0.25) == pytest.approx(0.125)
        assert w.eval(0.75) == pytest.approx(0.875)

    def test_atom_at_origin_rejected(self):
        doc = {"side": "cadlag", "knots": [[0, 0], [1, 1]], "atoms": [[0.0, 0.3]]}
        with pytest.raises(InvariantError):
            from_spec(doc)

    def test_decreasing_knots_rejected(self):
        doc = {"side": "cadlag", "knots": [[0, 0], [0.5, 0.7], [1, 0.5]], "atoms": []}
        with pytest.raises(InvariantError):
            from_spec(doc)

    def test_nonpositive_atom_rejected(self):
        doc = {"side": "cadlag", "knots": [[0, 0], [1, 1]], "atoms": [[0.5, -0.1]]}
        with pytest.raises(InvariantError):
            from_spec(doc)

    def test_malformed_document(self):
        with pytest.raises(SchemaError):
            from_spec({"side": "cadlag"})
        with pytest.raises(SchemaError):
            from_spec({"side": "sideways", "knots": [[0, 0], [1, 1]]})


class TestEval:
    def test_identity_value(self):
        w = from_spec(IDENTITY_W)
        assert w.eval(0.3, EvalMode.VALUE) == pytest.approx(0.3, abs=1e-15)

    def test_cadlag_convention_at_atom(self):
        w = from_spec(ATOMIC_W)
        assert w.eval(0.5, EvalMode.VALUE) == pytest.approx(0.75)
        assert w.eval(0.5, EvalMode.LEFT_LIMIT) == pytest.approx(0.25)

    def test_periodic_extension(self):
        w = from_spec(ATOMIC_W)
        assert w.eval(1.3, EvalMode.VALUE) == pytest.approx(1.15)
        assert w.eval(-0.7, EvalMode.VALUE) == pytest.approx(0.15 - 1.0)

    def test_caglad_convention_at_atom(self):
        v = from_spec({"side": "caglad", "knots": [[0, 0], [1, 0.5]], "atoms": [[0.5, 0.5]]})
        assert v.eval(0.5, EvalMode.VALUE) == pytest.approx(0.25)
        assert v.eval(0.5, EvalMode.RIGHT_LIMIT) == pytest.approx(0.75)

    def test_periodicity_invariant(self):
        w = from_spec(ATOMIC_W)
        for x in np.linspace(-1.2, 1.7, 23):
            assert w.eval(x + 1.0) - w.eval(x) == pytest.approx(w.total_mass, abs=1e-12)


class TestStieltjesIntegral:
    def test_total_mass(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        assert stieltjes_integral(atomic_grid.w, one, 0.0, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_atom_inclusion_right_closed(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        got = stieltjes_integral(atomic_grid.w, one, 0.0, 0.5)
        assert got == pytest.approx(0.75, abs=1e-14)

    def test_identity_v_linear_integrand(self, classical_grid):
        # closed form: int_0^0.5 xi dxi = 0.125; trapezoid is exact for linear integrands
        f = GridFunction.from_samples(classical_grid, lambda x: x, Side.CAGLAD)
        got = stieltjes_integral(classical_grid.v, f, 0.0, 0.5)
        assert got == pytest.approx(0.125, abs=1e-14)

    def test_interval_kind_mismatch(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        with pytest.raises(IntervalMismatch):
            stieltjes_integral(atomic_grid.w, one, 0.0, 1.0,
                               IntervalKind.LEFT_CLOSED_RIGHT_OPEN)
        with pytest.raises(IntervalMismatch):
            stieltjes_integral(atomic_grid.v, one, 0.0, 1.0,
                               IntervalKind.LEFT_OPEN_RIGHT_CLOSED)

    def test_additivity(self, atomic_grid):
        rng = np.random.default_rng(7)
        f = GridFunction(atomic_grid, rng.normal(size=atomic_grid.n), Side.CADLAG)
        nodes = atomic_grid.nodes
        for _ in range(25):
            i, j, k = sorted(rng.choice(atomic_grid.n, size=3, replace=False))
            a, b, c = nodes[i], nodes[j], nodes[k]
            lhs = stieltjes_integral(atomic_grid.w, f, a, b) + stieltjes_integral(atomic_grid.w, f, b, c)
            rhs = stieltjes_integral(atomic_grid.w, f, a, c)
            assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_refinement_second_order_with_exact_atoms(self):
        w = from_spec(ATOMIC_W)
        v = from_spec(IDENTITY_V)
        errs = []
        # integrand cos(2 pi x)+x(1-x): continuous part 0.5*(0 + 1/6); atom reads the value at 0.5
        exact = 0.5 / 6.0 + 0.5 * (np.cos(np.pi) + 0.25)
        for m in (64, 128, 256):
            grid = build_grid(w, v, m=m)
            f = GridFunction.from_samples(grid, lambda x: np.cos(2 * np.pi * x) + x * (1 - x),
                                          Side.CAGLAD)
            errs.append(abs(stieltjes_integral(grid.w, f, 0.0, 1.0) - exact))
        assert errs[1] < errs[0] / 3.0
        assert errs[2] < errs[1] / 3.0
        # the atom contribution itself is invariant under refinement
        grids = [build_grid(w, v, m=m) for m in (64, 256)]
        atoms = [g.dw_atom.sum() for g in grids]
        assert atoms[0] == atoms[1] == 0.5


class TestCumulative:
    def test_indicator_recovers_measure(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        cw = cumulative(atomic_grid.w, one, Orientation.FROM_ZERO_RIGHT_CLOSED)
        expect = [atomic_grid.w.eval(x) for x in atomic_grid.nodes]
        np.testing.assert_allclose(cw.values, expect, atol=1e-14)
        assert cw.period_increment == pytest.approx(1.0, abs=1e-14)

    def test_identity_v(self, classical_grid):
        one = GridFunction.constant(classical_grid, 1.0, Side.CADLAG)
        cv = cumulative(classical_grid.v, one, Orientation.FROM_ZERO_LEFT_OPEN)
        np.testing.assert_allclose(cv.values, classical_grid.nodes, atol=1e-14)

    def test_atomic_jump_with_left_limit(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        cw = cumulative(atomic_grid.w, one, Orientation.FROM_ZERO_RIGHT_CLOSED)
        i = atomic_grid.node_index(0.5)
        assert cw.values[i] == pytest.approx(0.75, abs=1e-14)
        assert cw.left_limits[i] == pytest.approx(0.25, abs=1e-14)

    def test_period_accumulates_total_mass(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        cw = cumulative(atomic_grid.w, one, Orientation.FROM_ZERO_RIGHT_CLOSED)
        assert cw.period_increment == pytest.approx(atomic_grid.w.total_mass, abs=1e-14)
