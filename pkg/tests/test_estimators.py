import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from stielap import BrownianPathSampler, LaplacianEigenbasis, MaternFieldSampler
from stielap.errors import BetaTooSmall, ValidationError

from conftest import ATOMIC_W, IDENTITY_V, IDENTITY_W


class TestLaplacianEigenbasis:
    def test_get_set_params_roundtrip(self):
        est = LaplacianEigenbasis(z_max=200.0, m=512)
        params = est.get_params()
        assert params["z_max"] == 200.0
        est.set_params(m=256)
        assert est.m == 256

    def test_fit_transform_roundtrip(self):
        est = LaplacianEigenbasis(z_max=500.0, m=512).fit((IDENTITY_W, IDENTITY_V))
        x = est.grid_.nodes
        rows = np.vstack([
            1.0 + np.sqrt(2) * np.cos(2 * np.pi * x),
            np.sqrt(2) * np.sin(2 * np.pi * x) - 0.5,
        ])
        a = est.transform(rows)
        recon = est.inverse_transform(a)
        np.testing.assert_allclose(recon, rows, atol=1e-6)

    def test_eigenvalues_attribute(self):
        est = LaplacianEigenbasis(z_max=200.0, m=256).fit((IDENTITY_W, IDENTITY_V))
        assert est.eigenvalues_[0] == 0.0
        assert est.eigenvalues_[1] == pytest.approx(4 * np.pi ** 2, rel=1e-8)

    def test_grid_method(self):
        est = LaplacianEigenbasis(method="grid", n_modes=12, m=512)
        est.fit((ATOMIC_W, IDENTITY_V))
        assert est.n_modes_ == 12

    def test_not_fitted_raises(self):
        with pytest.raises(NotFittedError):
            LaplacianEigenbasis().transform(np.zeros((1, 4)))

    def test_rejects_swapped_sides(self):
        with pytest.raises(ValidationError):
            LaplacianEigenbasis(m=128).fit((IDENTITY_V, IDENTITY_W))

    def test_rejects_wrong_row_length(self):
        est = LaplacianEigenbasis(z_max=100.0, m=128).fit((IDENTITY_W, IDENTITY_V))
        with pytest.raises(ValidationError):
            est.transform(np.zeros((2, 7)))

    def test_sobolev_norms(self):
        est = LaplacianEigenbasis(z_max=200.0, m=512).fit((IDENTITY_W, IDENTITY_V))
        x = est.grid_.nodes
        f = np.sqrt(2) * np.cos(2 * np.pi * x)
        norm = est.sobolev_norms(f, s=1.0)[0]
        assert norm == pytest.approx(np.sqrt(1 + 4 * np.pi ** 2), rel=1e-6)


class TestMaternFieldSampler:
    def test_sample_shape_and_determinism(self):
        est = MaternFieldSampler(beta=1.0, kappa=1.0, n_modes=9, m=256)
        est.fit((ATOMIC_W, IDENTITY_V))
        a = est.sample(n_fields=4, seed=3)
        b = est.sample(n_fields=4, seed=3)
        assert a.shape == (4, est.grid_.n)
        np.testing.assert_array_equal(a, b)

    def test_beta_gate_at_fit(self):
        est = MaternFieldSampler(beta=0.2)
        with pytest.raises(BetaTooSmall):
            est.fit((IDENTITY_W, IDENTITY_V))

    def test_nodewise_variance_positive(self):
        est = MaternFieldSampler(beta=1.0, kappa=1.0, n_modes=9, m=256)
        est.fit((IDENTITY_W, IDENTITY_V))
        var = est.nodewise_variance()
        assert np.all(var > 0)


class TestBrownianPathSampler:
    def test_single_measure_fit(self):
        est = BrownianPathSampler(m=128).fit(ATOMIC_W)
        mat = est.sample_matrix(n_paths=5, seed=2)
        assert mat.shape == (5, est.grid_.n)
        np.testing.assert_array_equal(mat[:, 0], 0.0)

    def test_pair_fit(self):
        est = BrownianPathSampler(m=128).fit((ATOMIC_W, IDENTITY_V))
        paths = est.sample(n_paths=2, seed=1)
        assert len(paths) == 2
