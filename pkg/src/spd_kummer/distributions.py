"""Wishart and matrix-Kummer laws on the SPD cone.

Parameterization follows the Laplace-transform convention

    E exp<s, Y> = (det S / det(S - s))**b,   Y ~ W(b, S),

so ``E[Y] = b S^(-1)`` (shape ``b``, "rate" matrix ``S``).  All densities are
with respect to Lebesgue measure on the vech coordinates, ``dx = prod_{i<=j}
dx_ij``.

The matrix-Kummer law ``MK(a, b, S)`` has density proportional to
``det(x)^(a-(r+1)/2) det(e+x)^(-(a+b)) exp(-<S, x>)`` and normalizing
constant ``1 / (Gamma_r(a) Psi(a, (r+1)/2 - b; S))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from . import spd
from .errors import DomainError, InvalidInputError, SamplerAbortError, UnsupportedParametersError


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream id; identical pairs give identical draws.

    ``spawn(k)`` derives an independent child stream, used for per-task
    streams in repeated experiments.
    """

    seed: int
    stream: int = 0
    path: tuple[int, ...] = field(default=())

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self.path))
        return np.random.Generator(np.random.PCG64(ss))

    def spawn(self, k: int) -> "RngStream":
        return RngStream(self.seed, self.stream, self.path + (int(k),))

    def as_dict(self) -> dict:
        return {"seed": self.seed, "stream": self.stream, "path": list(self.path)}


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise InvalidInputError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def _scale_matrix(scale, r: int | None):
    scale = np.asarray(scale, dtype=float)
    if scale.ndim == 0:
        if r is None:
            raise InvalidInputError("scalar scale needs an explicit rank r")
        scale = float(scale) * np.eye(r)
    return spd.certify_spd(scale)


@dataclass(frozen=True, eq=False)
class WishartParams:
    """Shape ``b > (r-1)/2`` and SPD scale; a scalar scale ``c`` means ``c e``."""

    shape: float
    scale: np.ndarray
    r: int | None = None

    def __post_init__(self):
        scale = _scale_matrix(self.scale, self.r)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "r", scale.shape[-1])
        if not self.shape > (self.r - 1) / 2:
            raise DomainError(f"Wishart shape must exceed (r-1)/2 = {(self.r - 1) / 2}, got {self.shape}")

    def mean(self):
        return self.shape * spd.spd_inverse(self.scale)

    def as_dict(self) -> dict:
        return {"law": "wishart", "r": self.r, "shape": self.shape, "scale": self.scale.tolist()}


@dataclass(frozen=True, eq=False)
class MatrixKummerParams:
    """Parameters ``a > (r-1)/2``, real ``b`` and SPD scale."""

    a: float
    b: float
    scale: np.ndarray
    r: int | None = None

    def __post_init__(self):
        scale = _scale_matrix(self.scale, self.r)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "r", scale.shape[-1])
        if not self.a > (self.r - 1) / 2:
            raise DomainError(f"matrix-Kummer a must exceed (r-1)/2 = {(self.r - 1) / 2}, got {self.a}")
        if not np.isfinite(self.b):
            raise DomainError("matrix-Kummer b must be finite")

    def as_dict(self) -> dict:
        return {"law": "matrix-kummer", "r": self.r, "a": self.a, "b": self.b,
                "scale": self.scale.tolist()}


def log_multivariate_gamma(r: int, z: float) -> float:
    """``log Gamma_r(z) = r(r-1)/4 log(pi) + sum_j log Gamma(z - (j-1)/2)``."""
    if r < 1:
        raise InvalidInputError("rank must be at least 1")
    if not z > (r - 1) / 2:
        raise DomainError(f"Gamma_{r}(z) needs z > {(r - 1) / 2}, got {z}")
    j = np.arange(r)
    return float(r * (r - 1) / 4 * np.log(np.pi) + np.sum(special.gammaln(z - j / 2)))


def wishart_sample(p: WishartParams, n: int, rng) -> np.ndarray:
    """``n`` draws from ``W(b, S)`` by the Bartlett construction.

    ``Y = C B B^T C^T`` with ``C = chol(S^(-1))``, ``B`` lower triangular,
    ``B_ii^2 ~ Gamma(b - (i-1)/2, 1)`` and ``B_ij ~ N(0, 1/2)`` below the
    diagonal; this gives ``E[Y] = b S^(-1)``.
    """
    gen = as_generator(rng)
    r = p.r
    shapes = p.shape - np.arange(r) / 2
    bmat = np.zeros((n, r, r))
    diag = np.sqrt(gen.standard_gamma(shapes, size=(n, r)))
    bmat[:, np.arange(r), np.arange(r)] = diag
    il, jl = np.tril_indices(r, -1)
    if il.size:
        bmat[:, il, jl] = gen.standard_normal((n, il.size)) / np.sqrt(2.0)
    c = np.linalg.cholesky(spd.spd_inverse(p.scale))
    cb = c @ bmat
    return spd.symmetrize(cb @ np.swapaxes(cb, -1, -2))


def wishart_logpdf(p: WishartParams, y) -> np.ndarray:
    y = spd.certify_spd(y)
    r = p.r
    return (p.shape * spd.logdet(p.scale) - log_multivariate_gamma(r, p.shape)
            + (p.shape - (r + 1) / 2) * spd.logdet(y) - spd.inner(p.scale, y))


def kummer_logpdf_unnorm(p: MatrixKummerParams, x) -> np.ndarray:
    x = spd.certify_spd(x)
    r = p.r
    return ((p.a - (r + 1) / 2) * spd.logdet(x)
            - (p.a + p.b) * spd.logdet(np.eye(r) + x) - spd.inner(p.scale, x))


def kummer_logpdf(p: MatrixKummerParams, x, log_norm: float) -> np.ndarray:
    """Normalized log density given ``log C`` (see :func:`kummer_log_norm_const`)."""
    return log_norm + kummer_logpdf_unnorm(p, x)


class MCEstimate(NamedTuple):
    estimate: float
    se: float


def psi_mc(a: float, gamma: float, scale, n: int, rng, r: int | None = None) -> MCEstimate:
    """Monte-Carlo ``Psi(a, gamma; S)`` with its standard error.

    Uses ``Psi(a, gamma; S) = det(S)^(-a) E[det(e+X)^(gamma-a-(r+1)/2)]``
    for ``X ~ W(a, S)``, which follows from normalizing the matrix-Kummer
    density.
    """
    if n < 1000:
        raise InvalidInputError("psi_mc needs n >= 1000")
    w = WishartParams(a, scale, r)
    x = wishart_sample(w, n, rng)
    expo = gamma - a - (w.r + 1) / 2
    vals = np.exp(expo * spd.logdet(np.eye(w.r) + x) - a * spd.logdet(w.scale))
    return MCEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n)))


def psi_scalar_quad(a: float, gamma: float, c: float) -> float:
    """Rank-one ``Psi``: Tricomi ``U(a, gamma, c)`` by adaptive quadrature.

    ``U(a, g, c) = Gamma(a)^(-1) int_0^inf e^(-cx) x^(a-1) (1+x)^(g-a-1) dx``.
    """
    if not (a > 0 and c > 0):
        raise DomainError("psi_scalar_quad needs a > 0 and c > 0")
    return float(_kummer_integral(a, 1.0 - gamma, c, 0) / special.gamma(a))


def _kummer_integral(a, b, c, k):
    f = lambda x: np.exp((a - 1 + k) * np.log(x) - (a + b) * np.log1p(x) - c * x)
    lo, _ = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    hi, _ = integrate.quad(f, 1.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return lo + hi


def kummer_moment_quad(a: float, b: float, c: float, k: int) -> float:
    """``E[X^k]`` for rank-one ``MK(a, b, c)`` by adaptive quadrature."""
    return float(_kummer_integral(a, b, c, k) / _kummer_integral(a, b, c, 0))


def kummer_log_norm_const(p: MatrixKummerParams, n: int, rng) -> MCEstimate:
    """``log C = -log Gamma_r(a) - log Psi(a, (r+1)/2 - b; S)`` with delta-method SE."""
    est = psi_mc(p.a, (p.r + 1) / 2 - p.b, p.scale, n, rng)
    log_c = -log_multivariate_gamma(p.r, p.a) - np.log(est.estimate)
    return MCEstimate(float(log_c), est.se / est.estimate)


class RejectionStats(NamedTuple):
    proposals: int
    accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else float("nan")


def kummer_sample(p: MatrixKummerParams, n: int, rng, *, return_stats: bool = False,
                  acceptance_floor: float = 1e-4, floor_after: int = 10**6,
                  max_batch: int = 200_000):
    """Exact draws from ``MK(a, b, S)`` by rejection from ``W(a, S)``.

    A proposal is accepted with probability ``det(e+X)^(-(a+b))``, which is
    at most one when ``a + b > 0``; other parameters are unsupported.  The
    sampler aborts if, after ``floor_after`` proposals, the acceptance rate
    is below ``acceptance_floor``.
    """
    if not p.a + p.b > 0:
        raise UnsupportedParametersError("rejection sampler needs a + b > 0")
    gen = as_generator(rng)
    proposal = WishartParams(p.a, p.scale)
    e = np.eye(p.r)
    kept = []
    n_kept = proposals = 0
    rate = 0.5
    while n_kept < n:
        batch = int(min(max_batch, max(256, 1.2 * (n - n_kept) / max(rate, 1e-6))))
        x = wishart_sample(proposal, batch, gen)
        log_acc = -(p.a + p.b) * spd.logdet(e + x)
        ok = np.log(gen.random(batch)) < log_acc
        kept.append(x[ok])
        n_kept += int(ok.sum())
        proposals += batch
        rate = max(n_kept / proposals, 1.0 / proposals)
        if proposals >= floor_after and n_kept / proposals < acceptance_floor:
            raise SamplerAbortError(
                f"acceptance rate {n_kept / proposals:.2e} below floor {acceptance_floor:g} "
                f"after {proposals} proposals")
    out = np.concatenate(kept)[:n]
    if return_stats:
        return out, RejectionStats(proposals, n_kept)
    return out


def sample(p, n: int, rng) -> np.ndarray:
    """Dispatch to the sampler for ``WishartParams`` or ``MatrixKummerParams``."""
    if isinstance(p, WishartParams):
        return wishart_sample(p, n, rng)
    if isinstance(p, MatrixKummerParams):
        return kummer_sample(p, n, rng)
    raise InvalidInputError(f"unknown law parameters {type(p).__name__}")
