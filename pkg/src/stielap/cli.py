"""Command-line surface.

Every subcommand reads measure-spec JSON documents, runs one pipeline and
writes CSV/JSON artifacts.  All randomness enters through --seed; artifacts
carry no timestamps, so identical configurations produce byte-identical
output.  Exit codes: 0 success, 1 validation error, 2 numerical failure,
with a machine-readable error JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import measure as _measure
from . import spde as _spde
from . import spectral as _spectral
from . import stochastic as _stochastic
from . import tensor as _tensor
from .calculus import maclaurin_eval, polynomial_diagonals
from .errors import NumericalError, StielapError, ValidationError
from .measure import GridFunction, Side, build_grid
from .trig import TrigKind, trig_eval

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


def _load_measure(path: str, expect: Side):
    with open(path) as fh:
        doc = json.load(fh)
    m = _measure.from_spec(doc)
    if m.side is not expect:
        raise ValidationError(f"{path}: expected a {expect.value} measure, got {m.side.value}")
    return m


def _meta(args, w, v=None, extra=None):
    out = {
        "w_hash": w.content_hash(),
        "m": args.m,
        "tol_series": args.tol_series,
        "tol_rank": args.tol_rank,
    }
    if v is not None:
        out["v_hash"] = v.content_hash()
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    if extra:
        out.update(extra)
    return out


def _dump_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if c is None else repr(float(c)) for c in row) + "\n")


def _grid_from_args(args):
    w = _load_measure(args.w, Side.CADLAG)
    v = _load_measure(args.v, Side.CAGLAD)
    return w, v, build_grid(w, v, m=args.m)


def _load_grid_function(args, grid) -> GridFunction:
    if args.f_builtin:
        kind, _, karg = args.f_builtin.partition(":")
        k = int(karg) if karg else 1
        x = grid.nodes
        if kind == "sin":
            vals = np.sqrt(2) * np.sin(2 * np.pi * k * x)
        elif kind == "cos":
            vals = np.sqrt(2) * np.cos(2 * np.pi * k * x)
        elif kind == "sawtooth":
            vals = x - 0.5
            lefts = vals.copy()
            lefts[0] = 0.5
            return GridFunction(grid, vals, Side.CADLAG, left_limits=lefts)
        elif kind == "const":
            vals = np.full(grid.n, float(karg or 1.0))
        else:
            raise ValidationError(f"unknown builtin function {args.f_builtin!r}")
        return GridFunction(grid, vals, Side.CADLAG)
    if not args.f:
        raise ValidationError("provide --f <csv> or --f-builtin")
    data = np.loadtxt(args.f, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.n:
        raise ValidationError(
            f"--f rows ({data.shape[0]}) must match the grid nodes ({grid.n})")
    if np.max(np.abs(data[:, 0] - grid.nodes)) > 1e-9:
        raise ValidationError("--f first column must equal the grid nodes")
    return GridFunction(grid, data[:, 1], Side.CADLAG)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_spectrum(args):
    w, v, grid = _grid_from_args(args)
    report = _spectral.find_spectrum(grid, args.zmax, tol_rank=args.tol_rank,
                                     tol_series=args.tol_series)
    n_keep = report.lambdas().size if args.modes is None else min(args.modes, report.lambdas().size)
    basis = _spectral.build_eigenbasis(grid, report, n_keep=n_keep,
                                       tol_series=args.tol_series)
    doc = _spectral.spectrum_to_document(report, basis, _meta(args, w, v, {"zmax": args.zmax}))
    _dump_json(args.out, doc)
    return EXIT_OK


def cmd_oracle_spectrum(args):
    w, v, grid = _grid_from_args(args)
    k = args.modes or 8
    factory = lambda m: build_grid(w, v, m=m)
    ladder = (args.m, 2 * args.m, 4 * args.m)
    extrap, bars = _spectral.gridop.richardson_eigenvalues(factory, ladder, k)
    doc = {
        "eigenvalues": [{"lambda": float(l), "error_bar": float(b)}
                        for l, b in zip(extrap, bars)],
        "resolutions": list(ladder),
        "meta": _meta(args, w, v),
    }
    _dump_json(args.out, doc)
    return EXIT_OK


def cmd_eigfun(args):
    w, v, grid = _grid_from_args(args)
    report = _spectral.find_spectrum(grid, args.zmax, tol_rank=args.tol_rank,
                                     tol_series=args.tol_series)
    n_keep = min(args.modes or 5, report.lambdas().size)
    basis = _spectral.build_eigenbasis(grid, report, n_keep=n_keep,
                                       tol_series=args.tol_series)
    header = ["x"] + [f"nu{i}" for i in range(basis.n_modes)]
    rows = [[x] + [f.values[j] for f in basis.functions]
            for j, x in enumerate(grid.nodes)]
    _write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_taylor(args):
    w, v, grid = _grid_from_args(args)
    diag = polynomial_diagonals(grid, n_max=max(2, (len(args.derivs) + 1) // 2))
    derivs = [float(s) for s in args.derivs.split(",")]
    value, bound = maclaurin_eval(diag, derivs, args.x, tolerance=args.tolerance)
    _dump_json(args.out, {
        "x": args.x, "value": value, "remainder_bound": bound,
        "order": len(derivs) - 1, "meta": _meta(args, w, v),
    })
    return EXIT_OK


def cmd_trig(args):
    w, v, grid = _grid_from_args(args)
    diag = polynomial_diagonals(grid, n_max=8)
    evs = {kind: trig_eval(grid, diag, kind, args.alpha, args.tol_series)
           for kind in TrigKind}
    header = ["x", "cwv", "swv", "cvw", "svw"]
    rows = [[x,
             evs[TrigKind.CWV].values.values[j], evs[TrigKind.SWV].values.values[j],
             evs[TrigKind.CVW].values.values[j], evs[TrigKind.SVW].values.values[j]]
            for j, x in enumerate(grid.nodes)]
    _write_csv(args.out, header, rows)
    return EXIT_OK


def _basis_from_args(args, grid):
    if args.method == "grid":
        return _spectral.eigenbasis_from_gridop(grid, n_keep=args.modes or 16)
    report = _spectral.find_spectrum(grid, args.zmax, tol_rank=args.tol_rank,
                                     tol_series=args.tol_series)
    n_keep = report.lambdas().size if args.modes is None \
        else min(args.modes, report.lambdas().size)
    return _spectral.build_eigenbasis(grid, report, n_keep=n_keep,
                                      tol_series=args.tol_series)


def cmd_project(args):
    from .sobolev import project
    w, v, grid = _grid_from_args(args)
    basis = _basis_from_args(args, grid)
    f = _load_grid_function(args, grid)
    c = project(f, basis)
    header = ["i", "lambda", "gamma", "alpha"]
    rows = [[i, basis.lambdas[i], basis.gammas[i], c.alpha[i]]
            for i in range(basis.n_modes)]
    _write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_norm(args):
    from .sobolev import norm_partial_sums, project, sobolev_norm
    w, v, grid = _grid_from_args(args)
    basis = _basis_from_args(args, grid)
    f = _load_grid_function(args, grid)
    c = project(f, basis)
    results = []
    for s in (float(t) for t in args.s.split(",")):
        partial, divergent = norm_partial_sums(c, s)
        results.append({
            "s": s,
            "norm": sobolev_norm(c, s),
            "partial_sums_tail": [float(t) for t in partial[-3:]],
            "divergent": divergent,
        })
    _dump_json(args.out, {"norms": results, "parseval_defect": c.parseval_defect,
                          "n_modes": basis.n_modes, "meta": _meta(args, w, v)})
    return EXIT_OK


def cmd_simulate_bw(args):
    w = _load_measure(args.w, Side.CADLAG)
    v = _load_measure(args.v, Side.CAGLAD) if args.v else _measure.identity_measure(Side.CAGLAD)
    grid = build_grid(w, v, m=args.m)
    paths = _stochastic.sample_paths(grid, args.paths, args.seed)
    rows = []
    for p in paths:
        for j, x in enumerate(grid.nodes):
            left = p.pre_jump[j] if grid.dw_atom[j] > 0 else None
            rows.append([x, p.values[j], left])
    _write_csv(args.out, ["t", "value", "left_limit_or_empty"], rows)
    return EXIT_OK


def cmd_spde_sample(args):
    w, v, grid = _grid_from_args(args)
    if args.beta <= args.d / 4.0:
        raise ValidationError(f"beta = {args.beta} <= d/4 = {args.d / 4.0}: refuse to sample")
    basis = _basis_from_args(args, grid)
    fields = _spde.sample_field_matrix(basis, args.beta, args.kappa, args.seed,
                                       args.fields, d=args.d)
    header = ["x"] + [f"field{k}" for k in range(args.fields)]
    rows = [[x] + list(fields[:, j]) for j, x in enumerate(grid.nodes)]
    _write_csv(args.out, header, rows)
    var = fields.var(axis=0, ddof=1) if args.fields > 1 else np.zeros(grid.n)
    mean = fields.mean(axis=0)
    moments = {
        "mean_abs_max": float(np.max(np.abs(mean))),
        "variance_min": float(var.min()),
        "variance_max": float(var.max()),
        "truncated_variance": [float(t) for t in
                               _spde.truncated_variance(basis, args.beta, args.kappa)[:8]],
        "meta": _meta(args, w, v, {"beta": args.beta, "kappa": args.kappa,
                                   "fields": args.fields}),
    }
    _dump_json(args.out + ".moments.json", moments)
    return EXIT_OK


def _split_paths(flag: str) -> list[str]:
    return [p for p in flag.split(",") if p]


def _tensor_basis_from_args(args):
    ws = [_load_measure(p, Side.CADLAG) for p in _split_paths(args.w)]
    vs = [_load_measure(p, Side.CAGLAD) for p in _split_paths(args.v)]
    if len(ws) != len(vs):
        raise ValidationError("--w and --v must list the same number of per-axis measures")
    axes = []
    for w, v in zip(ws, vs):
        grid = build_grid(w, v, m=args.m)
        if args.method == "grid":
            axes.append(_spectral.eigenbasis_from_gridop(grid, n_keep=args.modes or 16))
        else:
            report = _spectral.find_spectrum(grid, args.zmax, tol_rank=args.tol_rank,
                                             tol_series=args.tol_series)
            n_keep = report.lambdas().size if args.modes is None \
                else min(args.modes, report.lambdas().size)
            axes.append(_spectral.build_eigenbasis(grid, report, n_keep=n_keep,
                                                   tol_series=args.tol_series))
    return ws, vs, _tensor.build_tensor_basis(axes, args.cutoff)


def cmd_tensor_spectrum(args):
    ws, vs, basis = _tensor_basis_from_args(args)
    doc = {
        "d": basis.d,
        "cutoff": basis.cutoff,
        "alphas": [float(a) for a in basis.alphas],
        "multi_indices": [[int(i) for i in idx] for idx in basis.multi_indices],
        "meta": {"w_hashes": [w.content_hash() for w in ws],
                 "v_hashes": [v.content_hash() for v in vs],
                 "m": args.m, "tol_series": args.tol_series, "tol_rank": args.tol_rank},
    }
    _dump_json(args.out, doc)
    return EXIT_OK


def cmd_tensor_sample(args):
    ws, vs, basis = _tensor_basis_from_args(args)
    field = _tensor.sample_field_dd(basis, args.beta, args.seed)
    axes_header = ";".join(
        "axis%d:%s" % (k, ",".join(repr(float(x)) for x in basis.axes[k].grid.nodes))
        for k in range(basis.d))
    with open(args.out, "w", newline="\n") as fh:
        fh.write("# " + axes_header + "\n")
        fh.write("flat_index,value\n")
        for i, val in enumerate(field.ravel()):
            fh.write(f"{i},{val!r}\n")
    return EXIT_OK


def cmd_verify(args):
    from .verify import run_verify_suite
    w, v, grid = _grid_from_args(args)
    report = run_verify_suite(grid, seed=args.seed, n_paths=args.paths,
                              n_fields=args.fields, zmax=args.zmax,
                              tol_rank=args.tol_rank, tol_series=args.tol_series)
    report["meta"] = _meta(args, w, v)
    if args.out:
        _dump_json(args.out, report)
    for item in report["checks"]:
        status = "PASS" if item["passed"] else "FAIL"
        print(f"[{status}] {item['name']}: {item['detail']}")
    return EXIT_OK if report["all_passed"] else EXIT_NUMERICAL


# ---------------------------------------------------------------------------

def _add_common(p, needs_v=True):
    p.add_argument("--w", required=True, help="cadlag measure-spec JSON path")
    if needs_v:
        p.add_argument("--v", required=True, help="caglad measure-spec JSON path")
    p.add_argument("--m", type=int, default=1024, help="grid resolution (>= 64)")
    p.add_argument("--tol-series", dest="tol_series", type=float, default=1e-12)
    p.add_argument("--tol-rank", dest="tol_rank", type=float, default=1e-8)


def _add_basis_opts(p):
    p.add_argument("--zmax", type=float, default=500.0)
    p.add_argument("--modes", type=int, default=None)
    p.add_argument("--method", choices=("series", "grid"), default="series")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stielap",
                                 description="two-measure Stieltjes calculus toolbox")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="series root-scan spectrum")
    _add_common(p)
    p.add_argument("--zmax", type=float, default=500.0)
    p.add_argument("--modes", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("oracle-spectrum", help="Richardson-extrapolated pencil spectrum")
    _add_common(p)
    p.add_argument("--modes", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle_spectrum)

    p = sub.add_parser("eigfun", help="eigenfunction table")
    _add_common(p)
    p.add_argument("--zmax", type=float, default=500.0)
    p.add_argument("--modes", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eigfun)

    p = sub.add_parser("taylor", help="generalized Maclaurin evaluation")
    _add_common(p)
    p.add_argument("--derivs", required=True,
                   help="comma list: f(0), then iterated derivatives at 0")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_taylor)

    p = sub.add_parser("trig", help="generalized cosine/sine table")
    _add_common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trig)

    p = sub.add_parser("project", help="eigenbasis coefficients of a function")
    _add_common(p)
    _add_basis_opts(p)
    p.add_argument("--f", default=None, help="CSV (x,value) aligned with the grid")
    p.add_argument("--f-builtin", dest="f_builtin", default=None,
                   help="sin:k | cos:k | sawtooth | const:c")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("norm", help="fractional Sobolev norms")
    _add_common(p)
    _add_basis_opts(p)
    p.add_argument("--f", default=None)
    p.add_argument("--f-builtin", dest="f_builtin", default=None)
    p.add_argument("--s", required=True, help="comma list of orders")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("simulate-bw", help="sample jump Brownian paths")
    p.add_argument("--w", "--measure", dest="w", required=True)
    p.add_argument("--v", default=None)
    p.add_argument("--m", type=int, default=1024)
    p.add_argument("--tol-series", dest="tol_series", type=float, default=1e-12)
    p.add_argument("--tol-rank", dest="tol_rank", type=float, default=1e-8)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_bw)

    p = sub.add_parser("spde-sample", help="Matern-like field sampling")
    _add_common(p)
    _add_basis_opts(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--fields", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spde_sample)

    p = sub.add_parser("tensor-spectrum", help="multi-index spectrum on the product torus")
    p.add_argument("--w", required=True, help="comma list of per-axis cadlag specs")
    p.add_argument("--v", required=True, help="comma list of per-axis caglad specs")
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--tol-series", dest="tol_series", type=float, default=1e-12)
    p.add_argument("--tol-rank", dest="tol_rank", type=float, default=1e-8)
    _add_basis_opts(p)
    p.add_argument("--cutoff", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tensor_spectrum)

    p = sub.add_parser("tensor-sample", help="d-dimensional field sample")
    p.add_argument("--w", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--m", type=int, default=128)
    p.add_argument("--tol-series", dest="tol_series", type=float, default=1e-12)
    p.add_argument("--tol-rank", dest="tol_rank", type=float, default=1e-8)
    _add_basis_opts(p)
    p.add_argument("--cutoff", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tensor_sample)

    p = sub.add_parser("verify", help="run the invariant suite")
    _add_common(p)
    p.add_argument("--zmax", type=float, default=500.0)
    p.add_argument("--paths", type=int, default=4000)
    p.add_argument("--fields", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "m", 64) < 64:
        _err("validation", "grid resolution m must be >= 64")
        return EXIT_VALIDATION
    if getattr(args, "tol_series", 1.0) <= 0 or getattr(args, "tol_rank", 1.0) <= 0:
        _err("validation", "tolerances must be positive")
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except ValidationError as exc:
        _err("validation", str(exc))
        return EXIT_VALIDATION
    except NumericalError as exc:
        _err("numerical", str(exc))
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        _err("validation", str(exc))
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        _err("validation", f"malformed JSON: {exc}")
        return EXIT_VALIDATION
    except StielapError as exc:
        _err("numerical", str(exc))
        return EXIT_NUMERICAL


def _err(kind: str, message: str):
    json.dump({"error": kind, "message": message}, sys.stderr)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
