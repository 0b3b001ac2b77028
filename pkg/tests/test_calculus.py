import numpy as np
import pytest
from scipy.special import factorial

from stielap import measure
from stielap.calculus import (
    DerivativeSide, DoubleIntegralOrientation, double_integral_T,
    lateral_derivative, maclaurin_eval, polynomial_diagonals,
)
from stielap.errors import TruncationNotConverged, ZeroIncrement
from stielap.measure import (
    GridFunction, Orientation, Side, build_grid, cumulative,
    inner_product_v, inner_product_w, stieltjes_integral, v_mean,
)

from conftest import ATOMIC_V, ATOMIC_W, ATOMIC_W2, IDENTITY_V


class TestLateralDerivative:
    def test_derivative_of_measure_path_is_one(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        w_path = cumulative(atomic_grid.w, one, Orientation.FROM_ZERO_RIGHT_CLOSED)
        d = lateral_derivative(w_path, DerivativeSide.W_LEFT)
        np.testing.assert_allclose(d.values, 1.0, atol=1e-12)

    def test_classical_square_backward_quotient(self, classical_grid):
        f = GridFunction.from_samples(classical_grid, lambda x: x * x)
        d = lateral_derivative(f, DerivativeSide.W_LEFT)
        i = classical_grid.node_index(0.5)
        h = classical_grid.nodes[i] - classical_grid.nodes[i - 1]
        assert d.values[i] == pytest.approx(1.0 - h, abs=1e-12)

    def test_fundamental_theorem_exact_on_cell_constants(self, atomic_grid):
        rng = np.random.default_rng(3)
        g = GridFunction.cell_constant_caglad(atomic_grid, rng.normal(size=atomic_grid.n))
        f = cumulative(atomic_grid.w, g, Orientation.FROM_ZERO_RIGHT_CLOSED)
        d = lateral_derivative(f, DerivativeSide.W_LEFT)
        np.testing.assert_allclose(d.values, g.values, atol=1e-12)

    def test_v_right_fundamental_theorem(self, atomic_grid):
        rng = np.random.default_rng(4)
        g = GridFunction.cell_constant_cadlag(atomic_grid, rng.normal(size=atomic_grid.n))
        f = cumulative(atomic_grid.v, g, Orientation.FROM_ZERO_LEFT_OPEN)
        d = lateral_derivative(f, DerivativeSide.V_RIGHT)
        np.testing.assert_allclose(d.values, g.values, atol=1e-12)

    def test_zero_increment_reported_with_cell(self):
        w = measure.from_spec({"side": "cadlag", "knots": [[0.0, 0.0], [0.5, 1.0], [1.0, 1.0]],
                               "atoms": []})
        v = measure.from_spec(IDENTITY_V)
        grid = build_grid(w, v, m=16)
        f = GridFunction.from_samples(grid, lambda x: x)
        with pytest.raises(ZeroIncrement):
            lateral_derivative(f, DerivativeSide.W_LEFT)

    def test_parity_bookkeeping(self, atomic_grid):
        f = GridFunction.from_samples(atomic_grid, lambda x: np.sin(2 * np.pi * x))
        d1 = lateral_derivative(f, DerivativeSide.W_LEFT)
        assert d1.side is Side.CAGLAD
        d2 = lateral_derivative(d1, DerivativeSide.V_RIGHT)
        assert d2.side is Side.CADLAG


class TestDoubleIntegral:
    def test_classical_half_square(self, classical_grid):
        one = GridFunction.constant(classical_grid, 1.0)
        t = double_integral_T(one, DoubleIntegralOrientation.WV)
        np.testing.assert_allclose(t.values, classical_grid.nodes ** 2 / 2, atol=1e-13)
        assert t.side is Side.CADLAG

    def test_atomic_hand_value_at_one(self, atomic_grid):
        # int_(0,1] s dW(s) = 0.25 (continuous) + 0.25 (atom reads V(0.5-) = 0.5)
        one = GridFunction.constant(atomic_grid, 1.0)
        t = double_integral_T(one, DoubleIntegralOrientation.WV)
        assert t.period_increment == pytest.approx(0.5, abs=1e-13)

    def test_zero_function(self, atomic_grid):
        z = GridFunction.constant(atomic_grid, 0.0)
        t = double_integral_T(z, DoubleIntegralOrientation.WV)
        np.testing.assert_allclose(t.values, 0.0)

    def test_vw_side_convention(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        t = double_integral_T(one, DoubleIntegralOrientation.VW)
        assert t.side is Side.CAGLAD


class TestPolynomialDiagonals:
    def test_classical_monomials(self, classical_grid):
        diag = polynomial_diagonals(classical_grid, n_max=5)
        for k in range(1, 11):
            poly = diag.diagonal(k)
            for x in (0.25, 0.5, 1.0):
                if x == 1.0:
                    got = poly.end_value
                else:
                    got = float(poly.eval(np.array([x]), Side.CADLAG)[0][0])
                assert got == pytest.approx(x ** k / factorial(k), abs=1e-10)

    def test_seed_values(self, atomic_grid):
        diag = polynomial_diagonals(atomic_grid, n_max=2)
        assert diag.p_seq[0] == pytest.approx(1.0)
        assert diag.q_seq[0] == pytest.approx(atomic_grid.w.total_mass)

    def test_atomic_hand_computed_f2_f4(self, atomic_grid):
        diag = polynomial_diagonals(atomic_grid, n_max=2)
        assert diag.p_seq[1] == pytest.approx(0.5, abs=1e-14)
        assert diag.p_seq[2] == pytest.approx(0.03125, abs=1e-14)

    @pytest.mark.parametrize("wdoc,vdoc", [
        (ATOMIC_W, IDENTITY_V),
        (ATOMIC_W2, IDENTITY_V),
        (ATOMIC_W, ATOMIC_V),
    ])
    def test_taylor_bound_chain(self, wdoc, vdoc):
        w, v = measure.from_spec(wdoc), measure.from_spec(vdoc)
        grid = build_grid(w, v, m=64)
        diag = polynomial_diagonals(grid, n_max=15)
        f2 = diag.p_seq[1]
        for n in range(1, 16):
            assert diag.p_seq[n] <= f2 ** n / factorial(n) * (1 + 1e-12)

    def test_grid_quadrature_agrees_with_exact_engine(self, atomic_grid):
        one = GridFunction.constant(atomic_grid, 1.0)
        t_grid = double_integral_T(one, DoubleIntegralOrientation.WV)
        diag = polynomial_diagonals(atomic_grid, n_max=1)
        exact = diag.p_polys[1].to_grid_function(atomic_grid, Side.CADLAG)
        np.testing.assert_allclose(t_grid.values, exact.values, atol=1e-10)


class TestMaclaurin:
    def test_classical_exponential(self, classical_grid):
        diag = polynomial_diagonals(classical_grid, n_max=12)
        val, bound = maclaurin_eval(diag, [1.0] * 21, 1.0)
        assert val == pytest.approx(np.e, abs=max(bound, 1e-10))

    def test_zero_derivatives_constant(self, atomic_grid):
        diag = polynomial_diagonals(atomic_grid, n_max=4)
        val, _ = maclaurin_eval(diag, [3.5] + [0.0] * 8, 0.7)
        assert val == pytest.approx(3.5)

    def test_truncation_error_raised(self, classical_grid):
        diag = polynomial_diagonals(classical_grid, n_max=2)
        with pytest.raises(TruncationNotConverged):
            maclaurin_eval(diag, [1.0] * 21, 1.0)
        with pytest.raises(TruncationNotConverged):
            maclaurin_eval(diag, [1.0] * 5, 1.0, tolerance=1e-12)

    def test_sine_pattern_matches_trig_module(self, atomic_grid):
        # derivatives (0, a, 0, -a^3, 0, a^5, ...) reproduce the generalized sine
        from stielap.trig import TrigKind, trig_eval
        alpha = 2.0
        diag = polynomial_diagonals(atomic_grid, n_max=12)
        derivs = [0.0]
        for k in range(1, 25):
            if k % 2 == 0:
                derivs.append(0.0)
            else:
                n = (k - 1) // 2
                derivs.append((-1.0) ** n * alpha ** k)
        sine = trig_eval(atomic_grid, diag, TrigKind.SWV, alpha)
        for x in (0.25, 0.5, 0.75):
            i = atomic_grid.node_index(x)
            val, _ = maclaurin_eval(diag, derivs, x)
            assert val == pytest.approx(sine.values.values[i], abs=1e-10)


class TestDiscreteIdentities:
    def test_integration_by_parts_exact(self, atomic_grid):
        # cadlag g and caglad f built from cell densities: the identity telescopes
        rng = np.random.default_rng(11)
        gd = GridFunction.cell_constant_caglad(atomic_grid, rng.normal(size=atomic_grid.n))
        fd = GridFunction.cell_constant_cadlag(atomic_grid, rng.normal(size=atomic_grid.n))
        g = cumulative(atomic_grid.w, gd, Orientation.FROM_ZERO_RIGHT_CLOSED)
        f = cumulative(atomic_grid.v, fd, Orientation.FROM_ZERO_LEFT_OPEN)
        dvf = lateral_derivative(f, DerivativeSide.V_RIGHT)
        dwg = lateral_derivative(g, DerivativeSide.W_LEFT)
        nodes = atomic_grid.nodes
        ia, ib = 3, atomic_grid.n - 4
        a, b = nodes[ia], nodes[ib]
        lhs = stieltjes_integral(atomic_grid.v, g * dvf, a, b)
        boundary = f.values[ib] * g.values[ib] - f.values[ia] * g.values[ia]
        rhs = boundary - stieltjes_integral(atomic_grid.w, f * dwg, a, b)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_poincare_inequality(self, atomic_grid):
        rng = np.random.default_rng(23)
        w1, v1 = atomic_grid.w.total_mass, atomic_grid.v.total_mass
        for _ in range(100):
            raw = rng.normal(size=atomic_grid.n)
            g = GridFunction.cell_constant_caglad(atomic_grid, raw)
            mean_w = stieltjes_integral(atomic_grid.w, g, 0.0, 1.0) / w1
            g0 = GridFunction.cell_constant_caglad(atomic_grid, raw - mean_w)
            f = cumulative(atomic_grid.w, g0, Orientation.FROM_ZERO_RIGHT_CLOSED)
            d = lateral_derivative(f, DerivativeSide.W_LEFT)
            lhs = inner_product_v(f, f)
            rhs = w1 * v1 * inner_product_w(d, d) + v1 * v_mean(f) ** 2
            assert lhs <= rhs + 1e-10
