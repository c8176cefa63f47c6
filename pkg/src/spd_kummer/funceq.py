"""Functional equation of the HV map and its solution family.

For continuous ``A, B, C, D`` on the cone,

    A(u) + B(v) = C(x) + D(y),   (x, y) = hv_forward(u, v),

is solved exactly by

    A(x) = a logdet x - b logdet(e+x) + c1 + lam tr x
    B(x) = b logdet x + c2 + d + lam tr x
    C(x) = b logdet x - a logdet(e+x) + c2 + lam tr x
    D(x) = a logdet x + c1 + d + lam tr x

Everything here works in log space.  For log-densities,
``A(u) = log f_U(u) + (r+1)/2 logdet u`` and so on, and the linear
coefficient is ``lam = -c`` for a scale ``c e``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import spd
from .distributions import RngStream, WishartParams, as_generator, wishart_sample
from .errors import IllPosedFitError, InvalidInputError
from .transform import hv_forward, scalar_t0


@dataclass(frozen=True)
class SolutionParams:
    a: float
    b: float
    c1: float = 0.0
    c2: float = 0.0
    d: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(list(asdict(self).values()))):
            raise InvalidInputError("solution parameters must be finite")

    def as_dict(self) -> dict:
        return asdict(self)


def _ld(x):
    return spd.logdet(x)


def _ld1(x):
    return spd.logdet(np.eye(np.shape(x)[-1]) + x)


def family_A(p: SolutionParams, x):
    return p.a * _ld(x) - p.b * _ld1(x) + p.c1 + p.lam * spd.trace(x)


def family_B(p: SolutionParams, x):
    return p.b * _ld(x) + p.c2 + p.d + p.lam * spd.trace(x)


def family_C(p: SolutionParams, x):
    return p.b * _ld(x) - p.a * _ld1(x) + p.c2 + p.lam * spd.trace(x)


def family_D(p: SolutionParams, x):
    return p.a * _ld(x) + p.c1 + p.d + p.lam * spd.trace(x)


def main_residual(p: SolutionParams, u, v, funcs=None):
    """``A(u) + B(v) - C(x) - D(y)`` at ``(x, y) = hv_forward(u, v)``.

    ``funcs`` optionally replaces the family by four callables ``(A, B, C, D)``
    taking ``(params, x)``.
    """
    fa, fb, fc, fd = funcs or (family_A, family_B, family_C, family_D)
    x, y = hv_forward(u, v)
    return fa(p, u) + fb(p, v) - fc(p, x) - fd(p, y)


def swapped_residual(p: SolutionParams, u, v):
    """The equivalent form ``A(x) + B(y) - C(u) - D(v)``, ``(x, y) = hv_forward(u, v)``."""
    x, y = hv_forward(u, v)
    return family_A(p, x) + family_B(p, y) - family_C(p, u) - family_D(p, v)


@dataclass(frozen=True)
class ResidualReport:
    max_abs_residual: float
    max_rel_residual: float
    argmax: tuple
    n_points: int

    def as_dict(self) -> dict:
        u, v = self.argmax
        return {"max_abs_residual": self.max_abs_residual, "max_rel_residual": self.max_rel_residual,
                "argmax": {"u": np.asarray(u).tolist(), "v": np.asarray(v).tolist()},
                "n_points": self.n_points}


def random_interior_points(r: int, n: int, rng, shape: float | None = None):
    """``e + W`` draws: interior points away from the boundary of the cone."""
    w = WishartParams(shape if shape is not None else r + 1.0, np.eye(r))
    return np.eye(r) + wishart_sample(w, n, rng)


def residual_report(p: SolutionParams, r: int, n_points: int, rng) -> ResidualReport:
    """Largest residual over random ``(u, v)``; relative to ``1 + |A(u) + B(v)|``."""
    gen = as_generator(rng)
    u = random_interior_points(r, n_points, gen)
    v = random_interior_points(r, n_points, gen)
    res = main_residual(p, u, v)
    lhs = family_A(p, u) + family_B(p, v)
    rel = np.abs(res) / (1.0 + np.abs(lhs))
    k = int(np.argmax(rel))
    return ResidualReport(float(np.abs(res).max()), float(rel[k]), (u[k], v[k]), n_points)


@dataclass(frozen=True)
class ScalarFamilyParams:
    """Rank-one solution family; the constants must satisfy ``c1 + c2 = c3 + c4``.

    a(x) = b log x - c x - a log(1+x) + c1
    b(x) = a log x - c x + c2
    c(x) = a log x - c x - b log(1+x) + c3
    d(x) = b log x - c x + c4
    """

    a: float
    b: float
    c: float
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    strict: bool = True

    def __post_init__(self):
        if self.strict and not np.isclose(self.c1 + self.c2, self.c3 + self.c4, rtol=0, atol=1e-12):
            raise InvalidInputError("constants must satisfy c1 + c2 = c3 + c4")

    @property
    def gap(self) -> float:
        return (self.c1 + self.c2) - (self.c3 + self.c4)

    @classmethod
    def from_matrix(cls, p: SolutionParams) -> "ScalarFamilyParams":
        """Rank-one image of the matrix family."""
        return cls(a=p.b, b=p.a, c=-p.lam, c1=p.c1, c2=p.c2 + p.d, c3=p.c2, c4=p.c1 + p.d)


def scalar_family_residual(p: ScalarFamilyParams, x: float, y: float) -> float:
    u, v = scalar_t0(x, y)
    fa = p.b * np.log(x) - p.c * x - p.a * np.log1p(x) + p.c1
    fb = p.a * np.log(y) - p.c * y + p.c2
    fc = p.a * np.log(u) - p.c * u - p.b * np.log1p(u) + p.c3
    fd = p.b * np.log(v) - p.c * v + p.c4
    return float(fa + fb - fc - fd)


@dataclass(frozen=True)
class PexiderParams:
    q: float
    gamma1: float = 0.0
    gamma2: float = 0.0


def pexider_residual(p: PexiderParams, x, y, base: str = "logdet"):
    """``f1(x) + f2(y) - f3(P(x^(1/2)) y)`` with ``f0 = q logdet`` on ``e + cone``.

    ``base="trace"`` swaps ``logdet`` for ``tr`` (not a solution).
    """
    x = spd.certify_spd(x)
    y = spd.certify_spd(y)
    e = np.eye(x.shape[-1])
    if not (np.all(spd.is_spd(x - e)) and np.all(spd.is_spd(y - e))):
        raise InvalidInputError("Pexider arguments must lie in e + cone")
    f0 = {"logdet": spd.logdet, "trace": spd.trace}.get(base)
    if f0 is None:
        raise InvalidInputError(f"unknown base {base!r}")
    z = spd.quadratic_rep(spd.spd_sqrt(x), y)
    return (p.q * f0(x) + p.gamma1) + (p.q * f0(y) + p.gamma2) - (p.q * f0(z) + p.gamma1 + p.gamma2)


@dataclass(frozen=True)
class FitResult:
    params: SolutionParams
    residual: float
    equation_residual: float
    n_points: int
    tol: float

    @property
    def is_solution(self) -> bool:
        return self.residual < self.tol

    def distribution_params(self) -> dict:
        """``(a, b, c)`` of ``X ~ MK(a, b, c e)``, ``Y ~ W(a+b, c e)`` implied by the fit."""
        p = self.params
        return {"a": p.b, "b": p.a - p.b, "c": -p.lam}

    def as_dict(self) -> dict:
        return {"params": self.params.as_dict(), "distribution_params": self.distribution_params(),
                "residual": self.residual, "equation_residual": self.equation_residual,
                "n_points": self.n_points, "is_solution": self.is_solution, "tol": self.tol}


LogDensity = Callable[[np.ndarray], np.ndarray]


def _design(x):
    n = x.shape[0]
    ld, ld1, tr = _ld(x), _ld1(x), spd.trace(x)
    zero, one = np.zeros(n), np.ones(n)
    # columns: a, b, c1, c2, d, lam
    rows_a = np.column_stack([ld, -ld1, one, zero, zero, tr])
    rows_b = np.column_stack([zero, ld, zero, one, one, tr])
    rows_c = np.column_stack([-ld1, ld, zero, one, zero, tr])
    rows_d = np.column_stack([ld, zero, one, zero, one, tr])
    return np.vstack([rows_a, rows_b, rows_c, rows_d])


def fit_solution_params(logpdf_u: LogDensity, logpdf_v: LogDensity, logpdf_x: LogDensity,
                        logpdf_y: LogDensity, points, tol: float = 1e-8) -> FitResult:
    """Least-squares fit of the solution family to four log-densities.

    ``A = log f_U + (r+1)/2 logdet`` (and likewise ``B, C, D`` from ``f_V,
    f_X, f_Y``) are sampled at ``points``.  All six parameters enter
    linearly, so this is one linear solve.  ``equation_residual`` is the
    largest ``|A(u) + B(v) - C(x) - D(y)|`` over consecutive point pairs,
    computed from the densities directly.
    """
    x = spd.certify_spd(points)
    if x.ndim != 3 or x.shape[0] < 6:
        raise InvalidInputError("need a batch of at least 6 points")
    r = x.shape[-1]
    half = 0.5 * (r + 1) * _ld(x)
    fns = (logpdf_u, logpdf_v, logpdf_x, logpdf_y)
    target = np.concatenate([np.asarray(f(x), float) + half for f in fns])
    if not np.all(np.isfinite(target)):
        raise InvalidInputError("log-densities must be finite at the sample points")
    design = _design(x)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise IllPosedFitError("design matrix is rank deficient; use points in general position")
    theta, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = float(np.abs(design @ theta - target).max())

    u, v = x[0::2][: x.shape[0] // 2], x[1::2][: x.shape[0] // 2]
    xx, yy = hv_forward(u, v)
    half_ = lambda m: 0.5 * (r + 1) * _ld(m)
    eq = (logpdf_u(u) + half_(u) + logpdf_v(v) + half_(v)
          - logpdf_x(xx) - half_(xx) - logpdf_y(yy) - half_(yy))
    params = SolutionParams(*map(float, theta))
    return FitResult(params, resid, float(np.abs(eq).max()), x.shape[0], tol)
