"""sklearn-style entry points.

The decomposition pipeline is estimator-shaped: fit on a measure pair,
transform grid-sampled functions into eigenbasis coefficients (and back),
or draw samples from the fitted model.  Everything composes with sklearn
pipelines and `get_params`/`set_params` tuning.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import measure as _measure
from . import spde as _spde
from . import spectral as _spectral
from . import stochastic as _stochastic
from .errors import BetaTooSmall, ValidationError
from .measure import GridFunction, MeasureFunction, Side


def _as_measure(obj, expected_side: Side, arg: str) -> MeasureFunction:
    if isinstance(obj, MeasureFunction):
        m = obj
    elif isinstance(obj, dict):
        m = _measure.from_spec(obj)
    else:
        raise ValidationError(f"{arg} must be a MeasureFunction or a measure-spec dict")
    if m.side is not expected_side:
        raise ValidationError(f"{arg} must be {expected_side.value}, got {m.side.value}")
    return m


def _measure_pair(X) -> tuple[MeasureFunction, MeasureFunction]:
    try:
        w_raw, v_raw = X
    except (TypeError, ValueError):
        raise ValidationError(
            "X must be a (cadlag, caglad) measure pair: specs or MeasureFunctions") from None
    return (_as_measure(w_raw, Side.CADLAG, "X[0] (cadlag role)"),
            _as_measure(v_raw, Side.CAGLAD, "X[1] (caglad role)"))


def _check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} must be fitted first")


class LaplacianEigenbasis(BaseEstimator, TransformerMixin):
    """Eigendecomposition of the two-measure Laplacian as a transformer.

    fit(X) with X = (cadlag measure, caglad measure) finds the spectrum and
    synthesizes the orthonormal eigenbasis; transform maps node-sampled
    functions (n_samples, n_nodes) to coefficient rows (n_samples, n_modes),
    inverse_transform goes back.  ``method="series"`` uses the characteristic
    root scan (machine-precision eigenvalues, shallow spectra);
    ``method="grid"`` uses the matrix pencil (any depth, O(h^2) accuracy).
    """

    def __init__(self, z_max=500.0, n_modes=None, m=1024,
                 tol_series=1e-12, tol_rank=1e-8, method="series"):
        self.z_max = z_max
        self.n_modes = n_modes
        self.m = m
        self.tol_series = tol_series
        self.tol_rank = tol_rank
        self.method = method

    def fit(self, X, y=None):
        w, v = _measure_pair(X)
        grid = _measure.build_grid(w, v, m=self.m)
        if self.method == "grid":
            n = self.n_modes if self.n_modes is not None else 16
            basis = _spectral.eigenbasis_from_gridop(grid, n_keep=n)
        elif self.method == "series":
            report = _spectral.find_spectrum(grid, self.z_max,
                                             tol_rank=self.tol_rank,
                                             tol_series=self.tol_series)
            available = report.lambdas().size
            n = min(self.n_modes, available) if self.n_modes is not None else available
            basis = _spectral.build_eigenbasis(grid, report, n_keep=n,
                                               tol_series=self.tol_series)
        else:
            raise ValidationError(f"unknown method {self.method!r}")
        self.grid_ = grid
        self.basis_ = basis
        self.eigenvalues_ = basis.lambdas.copy()
        self.gammas_ = basis.gammas.copy()
        self.n_modes_ = basis.n_modes
        return self

    def _rows_to_functions(self, F):
        if isinstance(F, GridFunction):
            return [F]
        F = np.atleast_2d(np.asarray(F, dtype=float))
        if F.shape[1] != self.grid_.n:
            raise ValidationError(
                f"expected rows of length {self.grid_.n} (grid nodes), got {F.shape[1]}")
        return [GridFunction(self.grid_, row, Side.CADLAG) for row in F]

    def transform(self, F):
        _check_fitted(self, "basis_")
        from .sobolev import project
        rows = [project(f, self.basis_).alpha for f in self._rows_to_functions(F)]
        return np.vstack(rows)

    def inverse_transform(self, A):
        _check_fitted(self, "basis_")
        A = np.atleast_2d(np.asarray(A, dtype=float))
        shapes = np.vstack([nu.values for nu in self.basis_.functions])
        return A @ shapes[: A.shape[1]]

    def sobolev_norms(self, F, s: float) -> np.ndarray:
        """Truncated H^s norms of each row."""
        _check_fitted(self, "basis_")
        a = self.transform(F)
        return np.sqrt(np.sum(self.gammas_ ** s * a ** 2, axis=1))


class MaternFieldSampler(BaseEstimator):
    """Matern-like random fields u = sum xi_i (kappa^2 + lambda_i)^-beta nu_i."""

    def __init__(self, beta=1.0, kappa=1.0, n_modes=32, m=1024, method="grid",
                 z_max=500.0):
        self.beta = beta
        self.kappa = kappa
        self.n_modes = n_modes
        self.m = m
        self.method = method
        self.z_max = z_max

    def fit(self, X, y=None):
        if self.beta <= 0.25:
            raise BetaTooSmall(f"beta = {self.beta} <= 1/4: field variance diverges")
        inner = LaplacianEigenbasis(z_max=self.z_max, n_modes=self.n_modes,
                                    m=self.m, method=self.method).fit(X)
        self.basis_ = inner.basis_
        self.grid_ = inner.grid_
        return self

    def sample(self, n_fields=1, seed=0) -> np.ndarray:
        _check_fitted(self, "basis_")
        return _spde.sample_field_matrix(self.basis_, self.beta, self.kappa,
                                         seed, n_fields)

    def nodewise_variance(self) -> np.ndarray:
        _check_fitted(self, "basis_")
        return _spde.truncated_variance(self.basis_, self.beta, self.kappa)


class BrownianPathSampler(BaseEstimator):
    """Cadlag Gaussian paths with independent increments of W-measure variance."""

    def __init__(self, m=1024):
        self.m = m

    def fit(self, X, y=None):
        if isinstance(X, (tuple, list)) and len(X) == 2:
            w, v = _measure_pair(X)
        else:
            w = _as_measure(X, Side.CADLAG, "X")
            v = _measure.identity_measure(Side.CAGLAD)
        self.grid_ = _measure.build_grid(w, v, m=self.m)
        return self

    def sample(self, n_paths=1, seed=0) -> list[_stochastic.SamplePath]:
        _check_fitted(self, "grid_")
        return _stochastic.sample_paths(self.grid_, n_paths, seed)

    def sample_matrix(self, n_paths=1, seed=0) -> np.ndarray:
        return _stochastic.path_matrix(self.sample(n_paths, seed))
