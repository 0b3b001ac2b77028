"""Two-measure Stieltjes calculus on the circle.

The package decomposes the measure Laplacian built from a cadlag/caglad pair
of increasing functions, evaluates the generalized trigonometric series,
computes fractional Sobolev norms, and samples jump Brownian motion and
Matern-like random fields.  The sklearn-style entry points live in
:mod:`stielap.estimators`; the computational modules mirror the pipeline:
measure -> calculus -> trig -> spectral/gridop -> sobolev -> stochastic ->
spde -> tensor.
"""


from .estimators import BrownianPathSampler, LaplacianEigenbasis, MaternFieldSampler
from .measure import GridFunction, MeasureFunction, Side, build_grid, from_spec

__all__ = [
    "BrownianPathSampler",
    "GridFunction",
    "LaplacianEigenbasis",
    "MaternFieldSampler",
    "MeasureFunction",
    "Side",
    "build_grid",
    "from_spec",
]

__version__ = "0.1.0"
