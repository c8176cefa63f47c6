"""Command-line front end.

Subcommands: ``sample``, ``transform``, ``verify``, ``test-independence`` and
``fit``.  Exit codes: 0 success, 1 failed verification, 2 invalid
parameters or input, 3 sampler abort, 4 Vallois boundary violation.

Every file written gets a JSON sidecar (``<path>.json``) that echoes the
full run configuration, so the output can be regenerated from it.  When
output goes to stdout the report is written to stderr instead.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from . import __version__
from . import distributions as dist
from . import funceq, io, spd, stats, transform
from .distributions import MatrixKummerParams, RngStream, WishartParams
from .errors import (BoundaryViolationError, ExperimentInvalidError, InvalidInputError,
                     SamplerAbortError, SpdKummerError)

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_BAD_INPUT, EXIT_SAMPLER_ABORT, EXIT_BOUNDARY = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    """Validated invocation; serialized verbatim into every sidecar."""

    subcommand: str
    r: int | None = None
    law_params: dict = field(default_factory=dict)
    n: int | None = None
    seed: int = 0
    n_permutations: int | None = None
    output: str | None = None
    format: str = "csv"
    options: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


_LAW_KEYS = ("law", "shape", "a", "b", "c", "scale_c", "scale_diag", "y_shape")
_CORE_KEYS = ("command", "r", "n", "seed", "n_perm", "out", "format", "func")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    ns = vars(args)
    if ns.get("r") is not None and ns["r"] < 1:
        raise InvalidInputError("--r must be at least 1")
    if ns.get("n") is not None and ns["n"] < 1:
        raise InvalidInputError("--n must be positive")
    law = {k: ns[k] for k in _LAW_KEYS if ns.get(k) is not None}
    opts = {k: v for k, v in ns.items() if k not in _LAW_KEYS and k not in _CORE_KEYS}
    sub = args.command + (f" {args.mode}" if ns.get("mode") else "")
    return RunConfig(sub, ns.get("r"), law, ns.get("n"), ns.get("seed", 0), ns.get("n_perm"),
                     ns.get("out"), ns.get("format", "csv"), opts)


def _scale(args, r):
    if getattr(args, "scale_diag", None):
        try:
            diag = [float(t) for t in args.scale_diag.split(",")]
        except ValueError:
            raise InvalidInputError(f"bad --scale-diag {args.scale_diag!r}") from None
        if len(diag) != r:
            raise InvalidInputError(f"--scale-diag needs {r} entries, got {len(diag)}")
        return np.diag(diag)
    return args.scale_c * np.eye(r)


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise InvalidInputError(f"missing required option(s): {', '.join(missing)}")


def _sidecar(cfg: RunConfig, **extra) -> dict:
    return {"schema_version": io.SCHEMA_VERSION, "package": "spd_kummer", "version": __version__,
            "config": cfg.as_dict(), **extra}


def _emit(cfg: RunConfig, body: str | None, report: dict) -> None:
    """Write ``body`` to the output path (or stdout) and ``report`` next to it (or stderr)."""
    text = io.dumps_json(report)
    if cfg.output and cfg.output != "-":
        if body is not None:
            io.write_text(cfg.output, body)
            io.write_text(io.sidecar_path(cfg.output), text)
        else:
            io.write_text(cfg.output, text)
        return
    if body is not None:
        sys.stdout.write(body)
        sys.stderr.write(text)
    else:
        sys.stdout.write(text)


# -- sample -------------------------------------------------------------------

def cmd_sample(args) -> int:
    cfg = config_from_args(args)
    r = args.r
    rng = RngStream(args.seed, args.stream)
    scale = _scale(args, r)
    if args.law == "wishart":
        _require(args, "shape")
        p = WishartParams(args.shape, scale)
        x = dist.wishart_sample(p, args.n, rng)
        acceptance = None
    else:
        _require(args, "a", "b")
        p = MatrixKummerParams(args.a, args.b, scale)
        x, st = dist.kummer_sample(p, args.n, rng, return_stats=True,
                                   acceptance_floor=args.acceptance_floor)
        acceptance = {"proposals": st.proposals, "accepted": st.accepted,
                      "acceptance_rate": st.acceptance_rate}
    report = _sidecar(cfg, params=p.as_dict(), rng=rng.as_dict(), acceptance=acceptance,
                      rows=args.n, columns=io.vech_header(r))
    if args.format == "csv":
        body = io.matrices_to_csv([("m", x)])
    else:
        body = io.dumps_json({"header": io.vech_header(r), "rows": spd.vech(x)})
    _emit(cfg, body, report)
    return EXIT_OK


# -- transform ------------------------------------------------------------------

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from None


def _is_vech_width(w: int) -> bool:
    try:
        spd.rank_from_dim(w)
        return True
    except InvalidInputError:
        return False


def read_pairs(path: str, path_y: str | None = None, layout: str = "auto"):
    """Load ``(x, y)`` batches from one or two CSV files."""
    if path_y is not None:
        (x,) = io.table_to_matrices(io.parse_csv_table(_read(path))[1], 1)
        (y,) = io.table_to_matrices(io.parse_csv_table(_read(path_y))[1], 1)
        if x.shape != y.shape:
            raise InvalidInputError(f"x and y files disagree in shape: {x.shape} vs {y.shape}")
        return x, y
    _, table = io.parse_csv_table(_read(path))
    w = table.shape[1]
    if layout == "auto":
        layout = "side-by-side" if w % 2 == 0 and _is_vech_width(w // 2) else "stacked"
    if layout == "side-by-side":
        return tuple(io.table_to_matrices(table, 2))
    if layout == "stacked":
        if table.shape[0] % 2:
            raise InvalidInputError("stacked layout needs an even number of rows (x rows, then y rows)")
        (m,) = io.table_to_matrices(table, 1)
        half = m.shape[0] // 2
        return m[:half], m[half:]
    raise InvalidInputError(f"unknown layout {layout!r}")


def _rel_err(a, b):
    num = np.sqrt(np.sum((a - b) ** 2, axis=(-2, -1)))
    return num / np.maximum(1.0, np.sqrt(np.sum(b ** 2, axis=(-2, -1))))


def cmd_transform(args) -> int:
    cfg = config_from_args(args)
    x, y = read_pairs(args.input, args.input_y, args.layout)
    x, y = spd.certify_spd(x), spd.certify_spd(y)
    extra = {"rows_in": int(x.shape[0])}
    if args.variant == "hv":
        u, v = transform.hv_forward(x, y)
    else:
        u, v, ok = transform.vallois_batch(x, y, literal=args.literal)
        bad = int(ok.size - ok.sum())
        extra["violations"] = bad
        if bad and not args.allow_discard:
            sys.stderr.write(f"error: {bad} Vallois output(s) left the cone; "
                             f"pass --allow-discard to drop them\n")
            return EXIT_BOUNDARY
        u, v, x, y = u[ok], v[ok], x[ok], y[ok]
    if args.verify_involution:
        if args.variant != "hv":
            raise InvalidInputError("--verify-involution applies to --variant hv only")
        xx, yy = transform.hv_forward(u, v)
        err = np.maximum(_rel_err(xx, x), _rel_err(yy, y))
        extra["involution_max_rel_error"] = float(err.max()) if err.size else 0.0
    extra["rows_out"] = int(u.shape[0])
    body = io.matrices_to_csv([("u", u), ("v", v)])
    _emit(cfg, body, _sidecar(cfg, **extra))
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

def _points(r, n, rng):
    return funceq.random_interior_points(r, n, rng, shape=r + 1.0) - 0.5 * np.eye(r)


def _verify_jacobian(args):
    gen = RngStream(args.seed).generator()
    u = _points(args.r, args.points, gen)
    v = _points(args.r, args.points, gen)
    errs = []
    for k in range(args.points):
        ana = float(transform.jacobian_analytic(u[k], v[k]))
        num = transform.jacobian_numeric(u[k], v[k], richardson=args.richardson)
        errs.append(abs(num - ana) / abs(ana))
    worst = float(max(errs))
    return {"max_rel_error": worst, "tol": args.tol, "points": args.points}, worst < args.tol


def _verify_detp(args):
    gen = RngStream(args.seed).generator()
    x = _points(args.r, args.points, gen)
    errs = [abs(spd.endo_det(spd.quadratic_rep_endo(m)) / spd.det(m) ** (args.r + 1) - 1.0)
            for m in x]
    worst = float(max(errs))
    return {"max_rel_error": worst, "tol": args.tol, "points": args.points}, worst < args.tol


def _verify_psi(args):
    _require(args, "a", "b", "c")
    r, a, b, c = args.r, args.a, args.b, args.c
    rng = RngStream(args.seed)
    g = (r + 1) / 2
    lhs = dist.psi_mc(a + b, g + b, c, args.n, rng.spawn(0), r=r)
    rhs = dist.psi_mc(a, g - b, c, args.n, rng.spawn(1), r=r)
    factor = c ** (r * b)
    diff = abs(lhs.estimate * factor - rhs.estimate)
    se = float(np.hypot(lhs.se * factor, rhs.se))
    checks = {"mc": {"lhs": lhs.estimate * factor, "rhs": rhs.estimate, "abs_diff": diff,
                     "combined_se": se, "passed": diff < 3 * se}}
    if r == 1:
        ql = dist.psi_scalar_quad(a + b, g + b, c) * factor
        qr = dist.psi_scalar_quad(a, g - b, c)
        ref = float(special.hyperu(a, g - b, c))
        rel = max(abs(ql - ref), abs(qr - ref)) / abs(ref)
        checks["quadrature"] = {"lhs": ql, "rhs": qr, "hyperu": ref, "max_rel_error": rel,
                                "tol": 1e-3, "passed": rel < 1e-3}
    return checks, all(ch["passed"] for ch in checks.values())


def _random_solution_params(gen):
    a, b, c1, c2, d = gen.uniform(-3, 3, size=5)
    return funceq.SolutionParams(a, b, c1, c2, d, lam=gen.uniform(-2, 2))


def _verify_funceq(args):
    gen = RngStream(args.seed).generator()
    worst = 0.0
    for _ in range(args.params):
        rep = funceq.residual_report(_random_solution_params(gen), args.r, args.points, gen)
        worst = max(worst, rep.max_rel_residual)
    out = {"max_rel_residual": worst, "tol": args.tol, "param_tuples": args.params,
           "points": args.points}
    ok = worst <= args.tol
    if args.r == 1:
        sc = 0.0
        for _ in range(args.params):
            p = _random_solution_params(gen)
            sp = funceq.ScalarFamilyParams.from_matrix(p)
            xs, ys = gen.exponential(2.0, size=(2, args.points)) + 1e-3
            for xv, yv in zip(xs, ys):
                mat = float(funceq.main_residual(p, np.array([[xv]]), np.array([[yv]])))
                sc = max(sc, abs(funceq.scalar_family_residual(sp, xv, yv) - mat))
        out["scalar_reduction_max_abs_diff"] = sc
        ok = ok and sc < 1e-10
    return out, ok


def _verify_pexider(args):
    gen = RngStream(args.seed).generator()
    x = funceq.random_interior_points(args.r, args.points, gen)
    y = funceq.random_interior_points(args.r, args.points, gen)
    p = funceq.PexiderParams(args.q, *gen.normal(size=2))
    res = float(np.abs(funceq.pexider_residual(p, x, y)).max())
    ctrl = float(np.abs(funceq.pexider_residual(p, x, y, base="trace")).max())
    out = {"max_abs_residual": res, "tol": args.tol, "trace_base_max_abs_residual": ctrl}
    return out, res < args.tol and ctrl > 1e-6


def _verify_xalpha(args):
    gen = RngStream(args.seed).generator()
    u, z = _points(args.r, 2, gen)
    alphas = (1e-2, 1e-3, 1e-4)
    errs = [float(np.linalg.norm(transform.x_alpha(u, z, al) / al - z)) for al in alphas]
    ratios = [errs[k] / errs[k + 1] for k in range(len(errs) - 1)]
    # first-order decay: each tenfold drop in alpha cuts the error about tenfold
    ok = all(5.0 < q < 20.0 for q in ratios)
    e = np.eye(args.r)
    ident = 0.0
    for al in alphas:
        xa = transform.x_alpha(u, z, al)
        s = u + e / al
        lhs = spd.quadratic_rep(spd.spd_sqrt(e + xa), s)
        ident = max(ident, float(np.abs(lhs - z - s).max() / np.abs(z + s).max()))
    return {"alphas": list(alphas), "errors": errs, "ratios": ratios,
            "identity_max_rel_error": ident}, ok and ident < 1e-8


_VERIFY = {"jacobian": _verify_jacobian, "detp": _verify_detp, "psi-identity": _verify_psi,
           "funceq": _verify_funceq, "pexider": _verify_pexider, "xalpha": _verify_xalpha}


def cmd_verify(args) -> int:
    cfg = config_from_args(args)
    checks, passed = _VERIFY[args.mode](args)
    _emit(cfg, None, _sidecar(cfg, mode=args.mode, checks=checks, passed=bool(passed)))
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


# -- test-independence ----------------------------------------------------------

def cmd_test_independence(args) -> int:
    cfg = config_from_args(args)
    scale = _scale(args, args.r) if args.scale_diag else None
    summary = stats.rejection_rate(
        args.scenario, args.a, args.b, args.c, args.r, args.n, args.reps, RngStream(args.seed),
        alpha=args.alpha, n_perm=args.n_perm, features=args.features, scale=scale,
        method=args.method, y_shape=args.y_shape, allow_mismatch=args.allow_mismatch,
        literal=args.literal)
    report = _sidecar(cfg, scenario=args.scenario, statistic=summary.statistics[0],
                      p_value=summary.p_values[0], repetitions=summary.as_dict(),
                      pvalue_uniformity_ks=(stats.pvalue_uniformity(summary.p_values)
                                            if summary.reps > 1 else None))
    _emit(cfg, None, report)
    return EXIT_OK


# -- fit --------------------------------------------------------------------------

def _analytic_logpdfs(a, b, c, r, normalization, n_mc, rng):
    """Log-densities of U, V, X, Y in the positive HV setting."""
    scale = c * np.eye(r)
    pu, pv = MatrixKummerParams(a + b, -b, scale), WishartParams(a, scale)
    px, py = MatrixKummerParams(a, b, scale), WishartParams(a + b, scale)
    if normalization == "none":
        return (lambda m: dist.kummer_logpdf_unnorm(pu, m),
                lambda m: dist.wishart_logpdf(pv, m) - dist.wishart_logpdf(pv, np.eye(r)),
                lambda m: dist.kummer_logpdf_unnorm(px, m),
                lambda m: dist.wishart_logpdf(py, m) - dist.wishart_logpdf(py, np.eye(r)))
    if normalization == "quadrature":
        if r != 1:
            raise InvalidInputError("quadrature normalization is only available at r = 1")
        log_cu = -np.log(special.gamma(a + b) * dist.psi_scalar_quad(a + b, 1 + b, c))
        log_cx = -np.log(special.gamma(a) * dist.psi_scalar_quad(a, 1 - b, c))
    else:
        log_cu = dist.kummer_log_norm_const(pu, n_mc, rng.spawn(0)).estimate
        log_cx = dist.kummer_log_norm_const(px, n_mc, rng.spawn(1)).estimate
    return (lambda m: dist.kummer_logpdf(pu, m, log_cu), lambda m: dist.wishart_logpdf(pv, m),
            lambda m: dist.kummer_logpdf(px, m, log_cx), lambda m: dist.wishart_logpdf(py, m))


def cmd_fit(args) -> int:
    cfg = config_from_args(args)
    rng = RngStream(args.seed)
    norm = args.normalization
    if norm == "auto":
        norm = "quadrature" if args.r == 1 else "none"
    fns = _analytic_logpdfs(args.a, args.b, args.c, args.r, norm, args.n or 100_000, rng)
    pts = funceq.random_interior_points(args.r, args.points, rng.spawn(2)) - 0.5 * np.eye(args.r)
    fit = funceq.fit_solution_params(*fns, pts, tol=args.tol)
    _emit(cfg, None, _sidecar(cfg, normalization=norm, fit=fit.as_dict()))
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def _add_common(p, n_default=None):
    p.add_argument("--r", type=int, default=1, help="matrix rank (default 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    if n_default is not False:
        p.add_argument("--n", type=int, default=n_default)


def _add_law(p):
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float, default=1.0, help="scalar scale c (Sigma = c e)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spd-kummer", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw Wishart or matrix-Kummer samples")
    _add_common(p, n_default=1000)
    p.add_argument("--law", choices=("wishart", "matrix-kummer"), required=True)
    p.add_argument("--shape", type=float, help="Wishart shape")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--scale-c", type=float, default=1.0)
    p.add_argument("--scale-diag", help="comma-separated diagonal scale, overrides --scale-c")
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--acceptance-floor", type=float, default=1e-4)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("transform", help="apply the HV or Vallois map to paired CSV input")
    p.add_argument("input", help="CSV with x and y vech columns side by side, or x rows then y rows")
    p.add_argument("--input-y", help="separate CSV of y matrices")
    p.add_argument("--layout", choices=("auto", "side-by-side", "stacked"), default="auto")
    p.add_argument("--variant", choices=("hv", "vallois"), default="hv")
    p.add_argument("--literal", action="store_true", help="Vallois map with s (e+x)^-1 s")
    p.add_argument("--allow-discard", action="store_true",
                   help="drop Vallois outputs that leave the cone instead of failing")
    p.add_argument("--verify-involution", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("verify", help="numerical verification gates")
    vsub = p.add_subparsers(dest="mode", required=True)
    specs = {"jacobian": (100, 1e-5), "detp": (1000, 1e-9), "psi-identity": (None, None),
             "funceq": (100, 1e-9), "pexider": (100, 1e-9), "xalpha": (None, None)}
    for mode, (pts, tol) in specs.items():
        q = vsub.add_parser(mode)
        _add_common(q, n_default=100_000 if mode == "psi-identity" else False)
        if pts is not None:
            q.add_argument("--points", type=int, default=pts)
            q.add_argument("--tol", type=float, default=tol)
        if mode == "jacobian":
            q.add_argument("--richardson", action="store_true")
        if mode == "psi-identity":
            _add_law(q)
        if mode == "funceq":
            q.add_argument("--params", type=int, default=50, help="random parameter tuples")
        if mode == "pexider":
            q.add_argument("--q", type=float, default=1.5)
        q.set_defaults(func=cmd_verify)

    p = sub.add_parser("test-independence", help="repeated permutation tests of U, V independence")
    _add_common(p, n_default=500)
    _add_law(p)
    p.set_defaults(a=1.0, b=1.0)
    p.add_argument("--scenario", choices=stats.SCENARIOS, required=True)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--n-perm", type=int, default=199)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--features", choices=stats.FEATURES, default="summaries")
    p.add_argument("--method", choices=("auto", "exact", "marginal"), default="auto")
    p.add_argument("--scale-diag", help="comma-separated diagonal scale Sigma")
    p.add_argument("--y-shape", type=float, help="Wishart shape of Y (default a + b)")
    p.add_argument("--allow-mismatch", action="store_true",
                   help="run hv-positive with parameters that break the property")
    p.add_argument("--literal", action="store_true", help="literal Vallois map")
    p.set_defaults(func=cmd_test_independence)

    p = sub.add_parser("fit", help="fit the solution family to analytic HV log-densities")
    _add_common(p, n_default=None)
    _add_law(p)
    p.add_argument("--points", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--normalization", choices=("auto", "none", "quadrature", "mc"), default="auto")
    p.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit":
            _require(args, "a", "b")
        return args.func(args)
    except SamplerAbortError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_SAMPLER_ABORT
    except (BoundaryViolationError, ExperimentInvalidError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BOUNDARY
    except (InvalidInputError, SpdKummerError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
