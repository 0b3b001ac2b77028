"""Product-measure operator on the d-torus via tensor products (d <= 3).

Eigenfunctions are products of per-axis eigenfunctions; the eigenvalue of a
multi-index is the sum of the per-axis shifted eigenvalues.  Product grids
are never materialized before synthesis: the basis stores axis grids and
multi-indices only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import AxisCoverageInsufficient, BetaTooSmall
from .spectral import EigenBasis
from .stochastic import _philox

_MAX_DIM = 3


@dataclass
class TensorBasis:
    axes: list[EigenBasis]
    multi_indices: np.ndarray   # (n_indices, d), ordered by (alpha, lex)
    alphas: np.ndarray          # alpha = sum_k gamma_{n_k, k}
    cutoff: float

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def n_modes(self) -> int:
        return self.alphas.size

    def product_values(self, idx: np.ndarray) -> np.ndarray:
        """Node values of the product eigenfunction on the product grid
        (meshgrid 'ij' layout flattened on synthesis by the caller)."""
        factors = [self.axes[k].functions[int(idx[k])].values for k in range(self.d)]
        out = factors[0]
        for f in factors[1:]:
            out = np.multiply.outer(out, f)
        return out


def build_tensor_basis(axes: list[EigenBasis], cutoff: float) -> TensorBasis:
    """All multi-indices with summed axis gammas below the cutoff, sorted.

    Coverage precondition: each axis must reach gamma >= cutoff - (sum of the
    other axes' smallest gammas), otherwise the enumeration is incomplete and
    the build refuses.
    """
    d = len(axes)
    if not 1 <= d <= _MAX_DIM:
        raise ValueError(f"dimension must be 1..{_MAX_DIM}")
    gammas = [b.gammas for b in axes]
    min_g = np.array([g[0] for g in gammas])
    for k, g in enumerate(gammas):
        need = cutoff - (min_g.sum() - min_g[k])
        if g[-1] < need and g[-1] < cutoff:
            raise AxisCoverageInsufficient(
                f"axis {k} reaches gamma {g[-1]:.4g} < required {need:.4g} for cutoff {cutoff}")
    idx: list[tuple] = []
    alphas: list[float] = []

    def recurse(k: int, prefix: tuple, acc: float):
        if k == d:
            idx.append(prefix)
            alphas.append(acc)
            return
        rest_min = float(min_g[k + 1:].sum())
        for n, g in enumerate(gammas[k]):
            if acc + g + rest_min > cutoff:
                break
            recurse(k + 1, prefix + (n,), acc + g)

    recurse(0, (), 0.0)
    if not idx:
        raise AxisCoverageInsufficient(f"cutoff {cutoff} admits no multi-index")
    order = sorted(range(len(idx)), key=lambda i: (alphas[i], idx[i]))
    multi = np.array([idx[i] for i in order], dtype=int)
    alph = np.array([alphas[i] for i in order])
    return TensorBasis(list(axes), multi, alph, float(cutoff))


def tensor_trace_sum(basis: TensorBasis, s: float) -> tuple[float, bool]:
    """Partial sum of alpha^{-s} over the enumerated indices plus a divergence flag.

    Divergence is read off the log-log slope of the terms; the threshold
    -1.05 separates the convergent regime from the s = d/2 logarithmic
    boundary (alpha_n grows like n^(2/d), so terms decay like n^(-2s/d)).
    """
    terms = basis.alphas ** (-s)
    partial = float(terms.sum())
    n = np.arange(1, terms.size + 1, dtype=float)
    if terms.size < 8:
        return partial, False
    half = terms.size // 2
    slope = float(np.polyfit(np.log(n[half:]), np.log(terms[half:]), 1)[0])
    return partial, slope >= -1.05


def sample_field_dd(basis: TensorBasis, beta: float, seed: int) -> np.ndarray:
    """One realization of u = sum xi alpha^{-beta} (product eigenfunction).

    Returns the field on the product grid with 'ij' axis layout.  Requires
    beta > d/4.
    """
    if beta <= basis.d / 4.0:
        raise BetaTooSmall(f"beta = {beta} <= d/4 = {basis.d / 4.0}")
    gen = _philox(seed, 0)
    u = gen.random(basis.n_modes)
    u[u == 0.0] = 0.5 / (1 << 53)
    xi = ndtri(u)
    coeffs = xi * basis.alphas ** (-beta)
    shape = tuple(b.grid.n for b in basis.axes)
    out = np.zeros(shape)
    for c, idx in zip(coeffs, basis.multi_indices):
        out += c * basis.product_values(idx)
    return out


def sample_field_dd_matrix(basis: TensorBasis, beta: float, seed: int,
                           n_fields: int) -> np.ndarray:
    """Ensemble of realizations, stacked on axis 0."""
    if beta <= basis.d / 4.0:
        raise BetaTooSmall(f"beta = {beta} <= d/4 = {basis.d / 4.0}")
    gen = _philox(seed, 1)
    u = gen.random((n_fields, basis.n_modes))
    u[u == 0.0] = 0.5 / (1 << 53)
    xi = ndtri(u)
    coeffs = xi * basis.alphas ** (-beta)
    shape = tuple(b.grid.n for b in basis.axes)
    shapes = np.vstack([basis.product_values(idx).ravel()
                        for idx in basis.multi_indices])
    flat = coeffs @ shapes
    return flat.reshape((n_fields,) + shape)


def truncated_variance_dd(basis: TensorBasis, beta: float) -> np.ndarray:
    shape = tuple(b.grid.n for b in basis.axes)
    out = np.zeros(shape)
    for alpha, idx in zip(basis.alphas, basis.multi_indices):
        out += alpha ** (-2 * beta) * basis.product_values(idx) ** 2
    return out


def product_inner_v(basis: TensorBasis, i: int, j: int) -> float:
    """<f_i, f_j> in the product V measure, via per-axis quadrature."""
    from .measure import inner_product_v
    total = 1.0
    for k in range(basis.d):
        fi = basis.axes[k].functions[int(basis.multi_indices[i][k])]
        fj = basis.axes[k].functions[int(basis.multi_indices[j][k])]
        total *= inner_product_v(fi, fj)
    return total
