"""Eigenvalues of the measure Laplacian as roots of its characteristic series.

The characteristic function ``f(z) = -2 + sum (-1)^n z^n (F_2n(1,1) +
G_2n(1,1))`` vanishes exactly at the eigenvalues; its positive roots are
located by scanning sign changes of f and of f' (tangential double roots sit
at extrema where f touches zero).  Multiplicity is decided by the numerical
rank of the 2x2 periodic boundary system, never by the root's shape alone.
The companion grid operator (gridop) provides the independent completeness
check.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import gridop
from .calculus import PolynomialDiagonals, polynomial_diagonals
from .errors import DegenerateSpan, TruncationNotConverged
from .measure import Grid, GridFunction, Side, inner_product_v, v_mean
from .trig import TrigKind, end_values, ensure_order, trig_eval


@dataclass
class Eigenvalue:
    lam: float
    multiplicity: int
    coeff_pairs: list[tuple[float, float]]

    @property
    def gamma(self) -> float:
        return 1.0 + self.lam


@dataclass
class SpectrumReport:
    eigenvalues: list[Eigenvalue]
    counting_samples: list[tuple[float, int]]
    growth_order_estimate: float
    growth_order_stderr: float
    suspects: list[float] = field(default_factory=list)

    def lambdas(self) -> np.ndarray:
        """Eigenvalues repeated according to multiplicity, nondecreasing."""
        out = []
        for ev in self.eigenvalues:
            out.extend([ev.lam] * ev.multiplicity)
        return np.array(out)

    def gammas(self) -> np.ndarray:
        return 1.0 + self.lambdas()


@dataclass
class EigenBasis:
    grid: Grid
    report: SpectrumReport
    lambdas: np.ndarray             # per kept function, multiplicity expanded
    functions: list[GridFunction]   # orthonormal in L^2_V
    residuals: np.ndarray           # discrete-operator defect per function

    @property
    def gammas(self) -> np.ndarray:
        return 1.0 + self.lambdas

    @property
    def n_modes(self) -> int:
        return len(self.functions)


class CharacteristicFunction:
    """Compensated evaluation of the characteristic series and its derivative."""

    def __init__(self, diag: PolynomialDiagonals):
        self.diag = diag
        self.coefs = diag.p_seq + diag.p_dual_seq   # F_2n(1,1) + G_2n(1,1)

    def required_order(self, z_max: float, tol: float = 1e-16) -> int:
        c = max(self.diag.decay_constant, 1e-300)
        from scipy.special import gammaln
        for n in range(2, 500):
            tail = n * np.log(max(z_max, 1e-300) * c) - 2 * gammaln(n + 1)
            if tail < np.log(tol):
                return n
        raise TruncationNotConverged(f"characteristic series does not close at z_max={z_max}")

    def value(self, z: float) -> tuple[float, float]:
        """f(z) and the largest term magnitude (the roundoff scale)."""
        n = self.coefs.size
        total, comp, zp, biggest = -2.0, 0.0, 1.0, 2.0
        for k in range(n):
            term = ((-1.0) ** k) * zp * self.coefs[k]
            if not np.isfinite(term):
                raise TruncationNotConverged(
                    f"characteristic series overflows at z={z}: use the grid-operator "
                    "eigenbasis for spectra this deep")
            biggest = max(biggest, abs(term))
            t = total + term
            comp += (total - t) + term if abs(total) >= abs(term) else (term - t) + total
            total = t
            zp *= z
        return total + comp, biggest

    def deriv(self, z: float) -> float:
        n = self.coefs.size
        total, comp, zp = 0.0, 0.0, 1.0
        for k in range(1, n):
            term = ((-1.0) ** k) * k * zp * self.coefs[k]
            t = total + term
            comp += (total - t) + term if abs(total) >= abs(term) else (term - t) + total
            total = t
            zp *= z
        return total + comp


def char_fn(grid_or_diag, z: float, tol_series: float = 1e-12) -> float:
    """Characteristic function at z >= 0; char_fn(0) == 0 for any measure pair."""
    diag = grid_or_diag if isinstance(grid_or_diag, PolynomialDiagonals) \
        else polynomial_diagonals(grid_or_diag, n_max=8)
    cf = CharacteristicFunction(diag.extend_to(cf_order(diag, z)))
    return cf.value(z)[0]


def cf_order(diag: PolynomialDiagonals, z: float) -> int:
    return CharacteristicFunction(diag).required_order(max(z, 1.0))


def _boundary_matrix(diag: PolynomialDiagonals, lam: float,
                     tol_series: float) -> tuple[np.ndarray, float]:
    """Row-balanced periodic boundary system; its null space carries (a, b)."""
    alpha = float(np.sqrt(lam))
    ends, bound = end_values(diag, alpha, tol_series)
    m = np.array([
        [ends[TrigKind.CWV] - 1.0, ends[TrigKind.SWV] / alpha],
        [-ends[TrigKind.SVW], (ends[TrigKind.CVW] - 1.0) / alpha],
    ])
    return m, bound


def _multiplicity_and_pairs(diag: PolynomialDiagonals, lam: float, tol_rank: float,
                            tol_series: float) -> tuple[int, list[tuple[float, float]]]:
    m, _ = _boundary_matrix(diag, lam, tol_series)
    u, s, vt = np.linalg.svd(m)
    thresh = tol_rank * max(1.0, s[0])
    rank = int(np.sum(s > thresh))
    mult = 2 - rank
    if mult <= 0:
        return 0, []
    if mult == 2:
        return 2, [(1.0, 0.0), (0.0, 1.0)]
    a, b = vt[1]
    if b < 0 or (abs(b) <= tol_rank and a < 0):
        a, b = -a, -b
    return 1, [(float(a), float(b))]


def find_spectrum(grid: Grid, z_max: float, tol_rank: float = 1e-8,
                  tol_series: float = 1e-12,
                  diag: PolynomialDiagonals | None = None) -> SpectrumReport:
    """Scan (0, z_max] for eigenvalues and resolve multiplicities.

    The scan step follows the expected quadratic eigenvalue spacing,
    max(z/50, first_gap/8), each coarse step subdivided so extrema are not
    straddled.  Sign changes of f are refined by bisection; tangential roots
    are local extrema with |f| at roundoff scale.  Every candidate passes
    through the boundary-system rank test; a candidate with full-rank
    boundary system is recorded as a suspect and excluded.
    """
    if z_max <= 0:
        raise ValueError("z_max must be positive")
    if diag is None:
        diag = polynomial_diagonals(grid, n_max=8)
    diag = diag.extend_to(CharacteristicFunction(diag).required_order(z_max))
    cf = CharacteristicFunction(diag)

    roots: list[float] = []
    suspects: list[float] = []

    def f(z):
        return cf.value(z)[0]

    def noise_floor(z):
        return 200.0 * np.finfo(float).eps * cf.value(z)[1]

    # scan points: coarse steps per the quadratic-spacing rule, subdivided x8
    first_gap = z_max / 100.0
    zs = [z_max * 1e-12]
    while zs[-1] < z_max:
        step = max(zs[-1] / 50.0, first_gap / 8.0)
        base = zs[-1]
        zs.extend(min(base + j * step / 8.0, z_max) for j in range(1, 9))
    zs = np.unique(np.asarray(zs))
    fv = np.array([f(z) for z in zs])
    fd = np.array([cf.deriv(z) for z in zs])

    # (i) transversal roots: sign changes of f
    for j in range(len(zs) - 1):
        if fv[j] == 0.0:
            roots.append(float(zs[j]))
        elif fv[j] * fv[j + 1] < 0:
            roots.append(float(brentq(f, zs[j], zs[j + 1], xtol=1e-13 * max(1.0, zs[j + 1]),
                                      rtol=8.9e-16)))
    # (ii) tangential roots: extrema with |f| at the roundoff scale
    for j in range(len(zs) - 1):
        if fd[j] * fd[j + 1] < 0:
            ze = float(brentq(cf.deriv, zs[j], zs[j + 1],
                              xtol=1e-13 * max(1.0, zs[j + 1]), rtol=8.9e-16))
            if abs(f(ze)) < noise_floor(ze):
                roots.append(ze)

    merged: list[float] = []
    for z in sorted(roots):
        if merged and abs(z - merged[-1]) <= 1e-7 * max(1.0, z):
            continue
        merged.append(z)

    eigenvalues = [Eigenvalue(0.0, 1, [])]
    for z in merged:
        mult, pairs = _multiplicity_and_pairs(diag, z, tol_rank, tol_series)
        if mult == 0:
            suspects.append(z)
            continue
        eigenvalues.append(Eigenvalue(z, mult, pairs))
    if suspects:
        warnings.warn(f"characteristic roots with full-rank boundary system: {suspects}",
                      RuntimeWarning, stacklevel=2)

    lams = []
    for ev in eigenvalues[1:]:
        lams.extend([ev.lam] * ev.multiplicity)
    lams = np.array(lams)
    # sample n(r) at the staircase corners: the count is exact there and the
    # power-law fit is unbiased by the plateaus between eigenvalues
    rs = sorted({ev.lam for ev in eigenvalues[1:]} | {z_max})
    counting = [(float(r), int(np.sum(lams <= r * (1 + 1e-12)))) for r in rs]
    rho, rho_err = _fit_growth_order(counting[:-1] or counting)
    return SpectrumReport(eigenvalues, counting, rho, rho_err, suspects)


def _fit_growth_order(counting: list[tuple[float, int]]) -> tuple[float, float]:
    pts = [(np.log(r), np.log(n)) for r, n in counting if n > 0 and r > 0]
    if len(pts) < 3:
        return 0.5, 0.5
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    a = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(a, y, rcond=None)
    dof = max(x.size - 2, 1)
    sigma = float(np.sqrt((res[0] if res.size else 0.0) / dof))
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = sigma / np.sqrt(sxx) if sxx > 0 else 0.5
    return float(coef[0]), stderr


def build_eigenbasis(grid: Grid, report: SpectrumReport, n_keep: int,
                     diag: PolynomialDiagonals | None = None,
                     tol_series: float = 1e-12) -> EigenBasis:
    """Synthesize, mean-correct and V-orthonormalize the first n_keep eigenfunctions.

    The constant mode comes first; each nonzero eigenvalue contributes its
    boundary null-space combinations of the generalized cosine/sine, made
    exactly zero-mean in the discrete V inner product, Gram-Schmidt
    orthonormalized inside multiplicity-2 eigenspaces.  Residuals are the
    discrete-operator defects from the gridop assembly.
    """
    if diag is None:
        diag = polynomial_diagonals(grid, n_max=8)
    total_available = 1 + sum(ev.multiplicity for ev in report.eigenvalues[1:])
    if n_keep > total_available:
        raise ValueError(f"report holds {total_available} modes, requested {n_keep}")

    v1 = grid.v.total_mass
    funcs = [GridFunction.constant(grid, 1.0 / np.sqrt(v1), Side.CADLAG)]
    lams = [0.0]
    for ev in report.eigenvalues[1:]:
        if len(funcs) >= n_keep:
            break
        alpha = float(np.sqrt(ev.lam))
        cwv = trig_eval(grid, diag, TrigKind.CWV, alpha, tol_series).values
        swv = trig_eval(grid, diag, TrigKind.SWV, alpha, tol_series).values
        space = []
        for a, b in ev.coeff_pairs:
            nu = a * cwv + (b / alpha) * swv
            nu = nu + (-v_mean(nu))
            space.append(nu)
        # Gram-Schmidt inside the eigenspace, discrete V inner product
        ortho: list[GridFunction] = []
        for nu in space:
            for prev in ortho:
                nu = nu + (-inner_product_v(nu, prev)) * prev
            norm2 = inner_product_v(nu, nu)
            if norm2 <= (1e-12) ** 2:
                raise DegenerateSpan(
                    f"eigenspace of lambda={ev.lam:.6g} has numerically parallel null vectors")
            ortho.append((1.0 / np.sqrt(norm2)) * nu)
        for nu in ortho:
            if len(funcs) >= n_keep:
                break
            funcs.append(nu)
            lams.append(ev.lam)

    op = gridop.assemble(grid, 1.0, 0.0)
    residuals = np.array([_operator_residual(op, nu.values, lam)
                          for lam, nu in zip(lams, funcs)])
    return EigenBasis(grid, report, np.array(lams), funcs, residuals)


def _operator_residual(op: gridop.DiscreteOperator, u: np.ndarray, lam: float) -> float:
    r = op.stiffness @ u - lam * (op.mass * u)
    num = float(np.sqrt(np.sum(r * r / op.mass)))
    den = float(np.sqrt(np.sum(u * u * op.mass)))
    return num / den


def residual_scale_estimate(basis: EigenBasis) -> np.ndarray:
    """Expected magnitude of the discrete-operator defect per eigenfunction.

    Two sources: smooth-cell consistency O(lambda^2 h^2), and at atoms an
    O(lambda sqrt(h)) term because the lumped diag(dV) mass misattributes the
    flanking half-cells (the W-linear hat at an atom rises through the atom,
    not through the cell).  Eigenvalues are unaffected at leading order; the
    pointwise residual norm is dominated by the atom term whenever atoms
    exist.
    """
    grid = basis.grid
    h = float(np.max(grid.dv_cont))
    atom_nodes = np.nonzero(grid.dw_atom > 0)[0]
    out = []
    for lam, nu in zip(basis.lambdas, basis.functions):
        norm_v = np.sqrt(max(inner_product_v(nu, nu), 1e-300))
        smooth = lam ** 2 * h ** 2 / 8.0 * float(np.max(np.abs(nu.values))) / norm_v
        atom = 0.0
        if atom_nodes.size:
            peak = float(np.max(np.abs(nu.values[atom_nodes])))
            peak = max(peak, float(np.max(np.abs(nu.inner_left()[atom_nodes]))))
            atom = lam * peak * np.sqrt(h) / norm_v
        out.append(smooth + atom)
    return np.array(out)


def eigenbasis_from_gridop(grid: Grid, n_keep: int, h=1.0, kappa=0.0) -> EigenBasis:
    """Eigenbasis from the discrete operator pencil instead of the series roots.

    The series root scan is precision-limited to shallow spectra (the
    alternating characteristic sum amplifies roundoff by ~e^sqrt(z)); the
    matrix pencil reaches any mode count at O(h^2) accuracy and its
    eigenvectors are already mass-orthonormal.  Both routes agree on the
    first eigenvalues, which is the cross-validation the tests pin down.
    """
    op = gridop.assemble(grid, h, kappa)
    pairs = gridop.solve_gep(op, n_keep)
    kappa_min2 = 0.0 if not isinstance(kappa, GridFunction) and kappa == 0.0 else None
    lams = np.array([lam for lam, _ in pairs])
    if kappa_min2 == 0.0:
        lams[0] = 0.0
    funcs = [u for _, u in pairs]
    evs = [Eigenvalue(float(lam), 1, []) for lam in lams]
    if evs and evs[0].lam == 0.0:
        evs[0] = Eigenvalue(0.0, 1, [])
    counting = [(float(r), int(np.sum(lams[lams > 0] <= r))) for r in sorted(set(lams[lams > 0]))]
    rho, rho_err = _fit_growth_order(counting)
    report = SpectrumReport(evs, counting, rho, rho_err)
    residuals = np.array([_operator_residual(op, u.values, lam) for lam, u in pairs])
    return EigenBasis(grid, report, lams, funcs, residuals)


def spectrum_to_document(report: SpectrumReport, basis: EigenBasis | None = None,
                         meta: dict | None = None) -> dict:
    ev_docs = []
    residual_by_lam: dict[float, float] = {}
    if basis is not None:
        for lam, res in zip(basis.lambdas, basis.residuals):
            residual_by_lam.setdefault(float(lam), float(res))
    for ev in report.eigenvalues:
        ev_docs.append({
            "lambda": ev.lam,
            "gamma": ev.gamma,
            "multiplicity": ev.multiplicity,
            "coeffs": [[a, b] for a, b in ev.coeff_pairs],
            "residual": residual_by_lam.get(ev.lam),
        })
    return {
        "eigenvalues": ev_docs,
        "growth_order_estimate": report.growth_order_estimate,
        "growth_order_stderr": report.growth_order_stderr,
        "counting_samples": [[r, n] for r, n in report.counting_samples],
        "suspects": report.suspects,
        "meta": meta or {},
    }
