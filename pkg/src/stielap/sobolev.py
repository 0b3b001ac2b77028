"""Spectral coefficients and fractional Sobolev norms.

A function's coefficients in the eigenbasis diagonalize every fractional
power of (I - Laplacian): the H^s norm is sum gamma_i^s alpha_i^2 for any
real s, negative s giving the dual-space truncation.  gamma_i = 1 + lambda_i
is stored once on the basis and never recomputed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import DerivativeSide, lateral_derivative
from .measure import GridFunction, Side, inner_product_v, inner_product_w
from .spectral import EigenBasis


@dataclass
class SpectralCoefficients:
    alpha: np.ndarray
    basis: EigenBasis
    parseval_defect: float = 0.0
    s_cache: dict = field(default_factory=dict)

    @property
    def gammas(self) -> np.ndarray:
        return self.basis.gammas[: self.alpha.size]

    @property
    def lambdas(self) -> np.ndarray:
        return self.basis.lambdas[: self.alpha.size]


def project(f: GridFunction, basis: EigenBasis) -> SpectralCoefficients:
    """alpha_i = <f, nu_i>_V by Stieltjes quadrature, with the Parseval defect."""
    alpha = np.array([inner_product_v(f, nu) for nu in basis.functions])
    f_norm2 = inner_product_v(f, f)
    defect = f_norm2 - float(np.dot(alpha, alpha))
    return SpectralCoefficients(alpha, basis, defect)


def synthesize(c: SpectralCoefficients) -> GridFunction:
    """Sum of alpha_i nu_i as a grid function (limits carried through)."""
    out = c.alpha[0] * c.basis.functions[0]
    for a, nu in zip(c.alpha[1:], c.basis.functions[1:]):
        out = out + a * nu
    return out


def sobolev_norm(c: SpectralCoefficients, s: float) -> float:
    """Truncated H^s norm squared root: sqrt(sum gamma_i^s alpha_i^2), any real s."""
    key = float(s)
    if key not in c.s_cache:
        c.s_cache[key] = float(np.sqrt(np.sum(c.gammas ** s * c.alpha ** 2)))
    return c.s_cache[key]


def norm_partial_sums(c: SpectralCoefficients, s: float) -> tuple[np.ndarray, bool]:
    """Partial sums of the H^s series plus a divergence diagnostic.

    The diagnostic flags linear-or-worse growth of the partial sums across
    the second half of the modes (the sawtooth-in-H^1 failure mode).
    """
    terms = c.gammas ** s * c.alpha ** 2
    partial = np.cumsum(terms)
    n = partial.size
    if n < 6:
        return partial, False
    half = n // 2
    tail = partial[half:]
    idx = np.arange(half, n, dtype=float)
    slope = np.polyfit(idx, tail, 1)[0]
    divergent = bool(slope > 0.25 * tail[-1] / n)
    return partial, divergent


def apply_fractional(c: SpectralCoefficients, s: float) -> SpectralCoefficients:
    """(I - Laplacian)^(s/2): alpha_i -> gamma_i^(s/2) alpha_i."""
    return SpectralCoefficients(c.gammas ** (s / 2.0) * c.alpha, c.basis, c.parseval_defect)


def weak_derivative_norm(c: SpectralCoefficients) -> float:
    """||D_W^- f||_W^2 = sum lambda_i alpha_i^2 (spectral form)."""
    return float(np.sum(c.lambdas * c.alpha ** 2))


def weak_derivative_norm_quadrature(c: SpectralCoefficients) -> float:
    """Direct route: synthesize, take the discrete derivative, integrate in dW."""
    f = synthesize(c)
    d = lateral_derivative(f, DerivativeSide.W_LEFT)
    return inner_product_w(d, d)
