import numpy as np
import pytest

from stielap.calculus import polynomial_diagonals
from stielap.measure import Side
from stielap.trig import (
    TrigKind, derivative_relation_residual, fundamental_defect,
    picard_solution, trig_eval,
)


@pytest.fixture(scope="module")
def classical_diag(classical_grid):
    return polynomial_diagonals(classical_grid, n_max=8)


@pytest.fixture(scope="module")
def atomic_diag(atomic_grid):
    return polynomial_diagonals(atomic_grid, n_max=8)


class TestTrigEval:
    def test_classical_cosine(self, classical_grid, classical_diag):
        ev = trig_eval(classical_grid, classical_diag, TrigKind.CWV, 2 * np.pi)
        i = classical_grid.node_index(0.25)
        assert ev.values.values[i] == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose(ev.values.values,
                                   np.cos(2 * np.pi * classical_grid.nodes), atol=1e-10)

    def test_classical_sine(self, classical_grid, classical_diag):
        ev = trig_eval(classical_grid, classical_diag, TrigKind.SWV, 2 * np.pi)
        np.testing.assert_allclose(ev.values.values,
                                   np.sin(2 * np.pi * classical_grid.nodes), atol=1e-10)

    def test_series_constant_terms_at_origin(self, atomic_grid, atomic_diag):
        for alpha in (1.0, 5.0):
            c = trig_eval(atomic_grid, atomic_diag, TrigKind.CWV, alpha)
            s = trig_eval(atomic_grid, atomic_diag, TrigKind.SWV, alpha)
            assert c.values.values[0] == pytest.approx(1.0, abs=1e-12)
            assert s.values.values[0] == pytest.approx(0.0, abs=1e-12)

    def test_sides(self, atomic_grid, atomic_diag):
        assert trig_eval(atomic_grid, atomic_diag, TrigKind.CWV, 1.0).values.side is Side.CADLAG
        assert trig_eval(atomic_grid, atomic_diag, TrigKind.SVW, 1.0).values.side is Side.CAGLAD

    def test_picard_oracle_atomic(self, atomic_grid, atomic_diag):
        # u = C_wv solves u = 1 - alpha^2 T u; the Picard iterate touches only
        # grid quadrature, an entirely different code path than the series
        alpha = 5.0
        series = trig_eval(atomic_grid, atomic_diag, TrigKind.CWV, alpha)
        oracle = picard_solution(atomic_grid, alpha, a=1.0, b=0.0)
        scale = np.max(np.abs(series.values.values))
        err = np.max(np.abs(series.values.values - oracle.values)) / scale
        assert err < 5e-5  # grid quadrature is O(m^-2); m = 512

    def test_truncation_bound_reported(self, atomic_grid, atomic_diag):
        ev = trig_eval(atomic_grid, atomic_diag, TrigKind.CWV, 3.0, tolerance=1e-12)
        assert 0 <= ev.truncation_bound < 1e-12


class TestFundamentalRelation:
    def test_classical_pythagorean(self, classical_grid, classical_diag):
        defect = fundamental_defect(classical_grid, classical_diag, 3.0)
        assert np.max(np.abs(defect.values)) < 1e-10

    @pytest.mark.parametrize("alpha", [1.0, 5.0, 10.0])
    def test_atomic_product_identity(self, atomic_grid, atomic_diag, alpha):
        defect = fundamental_defect(atomic_grid, atomic_diag, alpha)
        assert np.max(np.abs(defect.values)) < 1e-8

    def test_small_alpha_degenerate(self, atomic_grid, atomic_diag):
        defect = fundamental_defect(atomic_grid, atomic_diag, 1e-6)
        assert np.max(np.abs(defect.values)) < 1e-11


class TestDerivativeRelations:
    def test_classical_residual_decay(self, identity_pair):
        from stielap.measure import build_grid
        w, v = identity_pair
        grid = build_grid(w, v, m=4096)
        diag = polynomial_diagonals(grid, n_max=10)
        res = derivative_relation_residual(grid, diag, 2 * np.pi)
        assert res < 1e-4

    def test_zero_alpha(self, atomic_grid, atomic_diag):
        assert derivative_relation_residual(atomic_grid, atomic_diag, 1e-12) < 1e-10

    def test_atom_node_exact(self, atomic_pair):
        # at a pure refinement of the atom cell the quotient telescopes exactly;
        # node-wise check at the atom: residual there is roundoff-level
        from stielap.calculus import DerivativeSide, lateral_derivative
        from stielap.measure import _cell_integrals_w, build_grid
        grid = build_grid(*atomic_pair, m=512)
        diag = polynomial_diagonals(grid, n_max=8)
        alpha = 4.0
        cwv = trig_eval(grid, diag, TrigKind.CWV, alpha).values
        svw = trig_eval(grid, diag, TrigKind.SVW, alpha).values
        d = lateral_derivative(cwv, DerivativeSide.W_LEFT).values
        avg = _cell_integrals_w(grid, svw) / grid.dw
        i = grid.node_index(0.5)
        # the atom part of cell i reads S_vw exactly; remaining defect is the
        # continuous trapezoid error of the cell
        assert abs(d[i] + alpha * avg[i]) < 1e-6

    def test_refinement_rate(self, atomic_pair):
        from stielap.measure import build_grid
        errs = []
        for m in (256, 512, 1024):
            grid = build_grid(*atomic_pair, m=m)
            diag = polynomial_diagonals(grid, n_max=8)
            errs.append(derivative_relation_residual(grid, diag, 2.0))
        assert errs[2] < errs[0]


class TestSineSolvesTheEquation:
    def test_interior_operator_residual(self, atomic_grid, atomic_diag):
        # S_wv(alpha, .) solves -Lap u = alpha^2 u with u(0) = 0 away from the
        # wrap (it is not periodic unless alpha^2 is an eigenvalue, so the
        # wrap rows carry the boundary defect)
        from stielap.gridop import assemble
        alpha = 3.0
        s = trig_eval(atomic_grid, atomic_diag, TrigKind.SWV, alpha).values
        assert s.values[0] == pytest.approx(0.0, abs=1e-12)
        op = assemble(atomic_grid, 1.0, 0.0)
        r = op.stiffness @ s.values - alpha ** 2 * (op.mass * s.values)
        scaled = np.abs(r) / op.mass
        # exclude the wrap rows (boundary defect: s is not periodic at a
        # non-eigenvalue alpha) and the atom-flanking rows (lumped mass)
        i = atomic_grid.node_index(0.5)
        drop = [0, 1, atomic_grid.n - 2, atomic_grid.n - 1, i - 1, i, i + 1]
        interior_max = float(np.max(np.delete(scaled, drop)))
        assert interior_max < 1e-3 * alpha ** 2 * np.max(np.abs(s.values))

    def test_truncation_not_converged_for_huge_alpha(self, atomic_grid, atomic_diag):
        from stielap.errors import TruncationNotConverged
        with pytest.raises(TruncationNotConverged):
            trig_eval(atomic_grid, atomic_diag, TrigKind.CWV, 1e9)


class TestLinearIndependence:
    def test_wronskian_at_origin(self, atomic_grid, atomic_diag):
        # the derivative entry is the W-representation coefficient b, read off
        # as the forward quotient over the first cell (the backward quotient
        # at the tagged zero wraps around the torus)
        alpha = 3.0
        c = trig_eval(atomic_grid, atomic_diag, TrigKind.CWV, alpha).values
        s = trig_eval(atomic_grid, atomic_diag, TrigKind.SWV, alpha).values
        dw1 = atomic_grid.dw[1]
        dc0 = (c.values[1] - c.values[0]) / dw1
        ds0 = (s.values[1] - s.values[0]) / dw1
        m = np.array([
            [c.values[0], s.values[0] / alpha],
            [dc0, ds0 / alpha],
        ])
        np.testing.assert_allclose(m, np.eye(2), atol=0.02)
