"""The verify suite: every module invariant as a pass/fail check.

The CLI `verify` subcommand runs these in order and reports measured values;
the checks are deterministic given the seed, so identical configurations
yield byte-identical reports.
"""

from __future__ import annotations

import numpy as np
from scipy.special import factorial

from . import gridop, spde, spectral, stochastic
from .calculus import (
    DerivativeSide, lateral_derivative, polynomial_diagonals,
)
from .measure import (
    Grid, GridFunction, Orientation, Side, build_grid, cumulative,
    inner_product_v, inner_product_w, stieltjes_integral, v_mean,
)
from .trig import derivative_relation_residual, fundamental_defect


def _check(name, passed, detail):
    return {"name": name, "passed": bool(passed), "detail": detail}


def run_verify_suite(grid: Grid, seed: int = 0, n_paths: int = 4000,
                     n_fields: int = 2000, zmax: float = 500.0,
                     tol_rank: float = 1e-8, tol_series: float = 1e-12) -> dict:
    checks = []
    rng = np.random.default_rng(seed)
    w1, v1 = grid.w.total_mass, grid.v.total_mass

    # measure additivity
    f = GridFunction(grid, rng.normal(size=grid.n), Side.CADLAG)
    worst = 0.0
    nodes = grid.nodes
    for _ in range(20):
        i, j, k = sorted(rng.choice(grid.n, size=3, replace=False))
        a, b, c = nodes[i], nodes[j], nodes[k]
        gap = abs(stieltjes_integral(grid.w, f, a, b)
                  + stieltjes_integral(grid.w, f, b, c)
                  - stieltjes_integral(grid.w, f, a, c))
        worst = max(worst, gap)
    checks.append(_check("measure additivity", worst < 1e-14, f"max defect {worst:.2e}"))

    # Poincare inequality on cumulative-built functions
    worst = -np.inf
    for _ in range(100):
        raw = rng.normal(size=grid.n)
        g = GridFunction.cell_constant_caglad(grid, raw)
        mean_w = stieltjes_integral(grid.w, g, 0.0, 1.0) / w1
        g0 = GridFunction.cell_constant_caglad(grid, raw - mean_w)
        u = cumulative(grid.w, g0, Orientation.FROM_ZERO_RIGHT_CLOSED)
        d = lateral_derivative(u, DerivativeSide.W_LEFT)
        slack = (w1 * v1 * inner_product_w(d, d) + v1 * v_mean(u) ** 2
                 - inner_product_v(u, u))
        worst = max(worst, -slack)
    checks.append(_check("Poincare inequality", worst < 1e-10,
                         f"worst violation {worst:.2e}"))

    # discrete integration by parts
    gd = GridFunction.cell_constant_caglad(grid, rng.normal(size=grid.n))
    fd = GridFunction.cell_constant_cadlag(grid, rng.normal(size=grid.n))
    g = cumulative(grid.w, gd, Orientation.FROM_ZERO_RIGHT_CLOSED)
    u = cumulative(grid.v, fd, Orientation.FROM_ZERO_LEFT_OPEN)
    dvu = lateral_derivative(u, DerivativeSide.V_RIGHT)
    dwg = lateral_derivative(g, DerivativeSide.W_LEFT)
    ia, ib = 2, grid.n - 3
    a, b = nodes[ia], nodes[ib]
    lhs = stieltjes_integral(grid.v, g * dvu, a, b)
    rhs = (u.values[ib] * g.values[ib] - u.values[ia] * g.values[ia]
           - stieltjes_integral(grid.w, u * dwg, a, b))
    gap = abs(lhs - rhs)
    checks.append(_check("integration by parts", gap < 1e-12, f"defect {gap:.2e}"))

    # taylor bound chain
    diag = polynomial_diagonals(grid, n_max=15)
    f2 = diag.p_seq[1]
    chain_ok = all(diag.p_seq[n] <= f2 ** n / factorial(n) * (1 + 1e-12)
                   for n in range(1, 16))
    checks.append(_check("taylor bound chain", chain_ok,
                         f"F2(1,1) = {f2:.6g}, orders 1..15"))

    # fundamental trig relation
    worst = 0.0
    for alpha in (1.0, 5.0, 10.0):
        defect = fundamental_defect(grid, diag, alpha, tol_series)
        worst = max(worst, float(np.max(np.abs(defect.values))))
    checks.append(_check("fundamental trig relation", worst < 1e-8,
                         f"sup defect {worst:.2e} over alpha in {{1,5,10}}"))

    # derivative swap relations
    res = derivative_relation_residual(grid, diag, 2.0, tol_series)
    res_tol = 50.0 / grid.resolution
    checks.append(_check("derivative relations", res < res_tol,
                         f"residual {res:.2e} (tol {res_tol:.2e})"))

    # spectrum vs oracle
    report = spectral.find_spectrum(grid, zmax, tol_rank=tol_rank, tol_series=tol_series)
    lams = report.lambdas()
    k = min(5, lams.size)
    factory = lambda m: build_grid(grid.w, grid.v, m=m)
    extrap, bars = gridop.richardson_eigenvalues(factory, (1024, 2048, 4096), k)
    rel = max(abs(l - e) / max(e, 1e-9) for l, e in zip(lams[1:k], extrap[1:k]))
    checks.append(_check("spectrum vs oracle", rel < 0.01,
                         f"max relative gap {rel:.2e} over first {k} modes"))

    # orthonormality and Parseval
    basis = spectral.build_eigenbasis(grid, report, n_keep=min(5, lams.size),
                                      tol_series=tol_series)
    gram_err = 0.0
    for i, fi in enumerate(basis.functions):
        for j, fj in enumerate(basis.functions):
            expect = 1.0 if i == j else 0.0
            gram_err = max(gram_err, abs(inner_product_v(fi, fj) - expect))
    ortho_tol = max(1e-8, 2e3 / grid.resolution ** 2)
    checks.append(_check("eigenbasis orthonormality", gram_err < ortho_tol,
                         f"gram defect {gram_err:.2e} (tol {ortho_tol:.2e})"))

    from .sobolev import project, synthesize
    from .sobolev import SpectralCoefficients
    alpha = np.concatenate([[0.5], rng.normal(size=basis.n_modes - 1)])
    fsyn = synthesize(SpectralCoefficients(alpha, basis))
    c = project(fsyn, basis)
    parseval = abs(c.parseval_defect)
    checks.append(_check("Parseval in the span", parseval < max(1e-8, 10 * ortho_tol),
                         f"defect {parseval:.2e}"))

    # Brownian covariance Monte Carlo
    paths = stochastic.sample_paths(grid, n_paths, seed)
    pts = nodes[np.linspace(8, grid.n - 8, 10, dtype=int)]
    diff, se, _ = stochastic.empirical_covariance_check(paths, pts, pts)
    zscore = float(np.max(np.abs(diff) / se))
    checks.append(_check("Brownian covariance MC", zscore < 5.0,
                         f"max |cov - W(min)|/SE = {zscore:.2f} on a 10x10 grid"))

    # Cameron-Martin identity
    worst = 0.0
    for _ in range(20):
        u1 = _random_trig(grid, rng)
        u2 = _random_trig(grid, rng)
        lhs, rhs = stochastic.cameron_martin_ip(u1, u2)
        scale = np.sqrt(inner_product_v(u1, u1) * inner_product_v(u2, u2)) * w1
        worst = max(worst, abs(lhs - rhs) / scale)
    checks.append(_check("Cameron-Martin identity", worst < 1e-6,
                         f"max scaled gap {worst:.2e}"))

    # isometry Monte Carlo (dW, not dV)
    fint = _random_trig(grid, rng, modes=2)
    fint = GridFunction(grid, fint.values, Side.CAGLAD)
    vals = np.array([stochastic.stoch_integral(fint, p) for p in paths])
    f2w = inner_product_w(fint, fint)
    f2v = inner_product_v(fint, fint)
    se_var = f2w * np.sqrt(2.0 / n_paths)
    match_w = abs(vals.var(ddof=1) - f2w) < 5 * se_var
    msg = f"var {vals.var(ddof=1):.4f} vs dW {f2w:.4f} vs dV {f2v:.4f}"
    if abs(f2w - f2v) > 10 * se_var:
        match = match_w and abs(vals.var(ddof=1) - f2v) > 5 * se_var
    else:
        match = match_w
    checks.append(_check("stochastic isometry (dW)", match, msg))

    # trace thresholds
    gam = 1.0 + basis.lambdas
    partial, tail, div1 = spde.trace_partial_sum(gam, s=1.0)
    _, _, div04 = spde.trace_partial_sum(gam, s=0.4)
    checks.append(_check("trace thresholds", (not div1) and div04,
                         f"s=1 partial {partial:.4f} tail {tail:.2e}; s=0.4 divergent={div04}"))

    return {"checks": checks, "all_passed": all(c["passed"] for c in checks)}


def _random_trig(grid, rng, modes=4):
    x = grid.nodes
    vals = np.full(grid.n, rng.normal())
    for k in range(1, modes + 1):
        a, b = rng.normal(size=2)
        vals += a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    return GridFunction(grid, vals, Side.CADLAG)
