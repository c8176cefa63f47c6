"""Monte-Carlo checks of the independence property and its converse.

Independence of ``(U, V)`` is tested with a distance-covariance statistic
and permutation p-values.  Repeated experiments use one child
:class:`~spd_kummer.distributions.RngStream` per repetition, so results do
not depend on the number of worker threads (``SPD_KUMMER_THREADS``).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from . import distributions as dist
from . import spd
from .distributions import MatrixKummerParams, RngStream, WishartParams
from .errors import DegenerateInputError, ExperimentInvalidError, InvalidInputError
from ._dcov import UnivariateDcov, abs_row_sums, ranks
from .transform import hv_forward, vallois_batch

FEATURES = ("summaries", "vech")
SCENARIOS = ("hv-positive", "hv-wrong-x", "hv-wrong-scale", "vallois", "independent")


@dataclass
class SamplePairs:
    u: np.ndarray
    v: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.u.shape != self.v.shape:
            raise InvalidInputError("u and v samples must have equal shapes")

    @property
    def n(self) -> int:
        return self.u.shape[0]


@dataclass(frozen=True)
class IndependenceTestResult:
    statistic: float
    p_value: float
    n_permutations: int
    features: str
    n: int
    method: str = "exact"

    def as_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value,
                "n_permutations": self.n_permutations, "features": self.features, "n": self.n,
                "method": self.method}


def _is_scalar_scale(scale) -> bool:
    c = scale[0, 0]
    return bool(np.allclose(scale, c * np.eye(scale.shape[0]), rtol=1e-12, atol=0.0))


def generate_hv_pairs(kummer: MatrixKummerParams, wishart: WishartParams, n: int, rng: RngStream,
                      *, x_law: str = "matrix-kummer", allow_mismatch: bool = False) -> SamplePairs:
    """Draw ``X ~ MK(a, b, S)``, ``Y ~ W(a+b, S)`` independently and apply the HV map.

    The positive setting needs ``wishart.shape == a + b`` and a common
    scalar scale ``c e``; anything else (including ``x_law="wishart"``,
    which draws ``X ~ W(a, S)``) requires ``allow_mismatch`` and is tagged
    as a negative control.
    """
    consistent = (np.isclose(wishart.shape, kummer.a + kummer.b, rtol=1e-12, atol=0)
                  and kummer.r == wishart.r
                  and np.allclose(kummer.scale, wishart.scale, rtol=1e-12, atol=0)
                  and _is_scalar_scale(kummer.scale))
    negative = (not consistent) or x_law != "matrix-kummer"
    if not consistent and not allow_mismatch:
        raise InvalidInputError(
            "HV property needs Y ~ W(a+b, c e) with the same scalar scale as X; "
            "pass allow_mismatch=True for a negative control")
    if x_law == "matrix-kummer":
        x = dist.kummer_sample(kummer, n, rng.spawn(0))
    elif x_law == "wishart":
        if not allow_mismatch:
            raise InvalidInputError("x_law='wishart' is a negative control; pass allow_mismatch=True")
        x = dist.wishart_sample(WishartParams(kummer.a, kummer.scale), n, rng.spawn(0))
    else:
        raise InvalidInputError(f"unknown x_law {x_law!r}")
    y = dist.wishart_sample(wishart, n, rng.spawn(1))
    u, v = hv_forward(x, y)
    prov = {"kind": "negative-control" if negative else "hv-positive", "x_law": x_law,
            "kummer": kummer.as_dict(), "wishart": wishart.as_dict(), "rng": rng.as_dict()}
    return SamplePairs(u, v, prov)


def feature_map(m: np.ndarray, features: str = "summaries") -> np.ndarray:
    """Per-draw features, each column standardized to unit variance."""
    if features == "summaries":
        lam = np.linalg.eigvalsh(m)
        f = np.column_stack([lam.sum(-1), np.log(lam).sum(-1), lam[:, 0]])
    elif features == "vech":
        f = spd.vech(m)
    else:
        raise InvalidInputError(f"unknown feature map {features!r}; choose from {FEATURES}")
    sd = f.std(axis=0)
    if np.any(sd <= 1e-12 * np.maximum(1.0, np.abs(f).max(axis=0))):
        raise DegenerateInputError("constant feature column")
    return (f - f.mean(axis=0)) / sd


def _centered_distances(f: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.maximum(((f[:, None, :] - f[None, :, :]) ** 2).sum(-1), 0.0))
    return d - d.mean(0)[None, :] - d.mean(1)[:, None] + d.mean()


def distance_covariance(fx: np.ndarray, fy: np.ndarray) -> float:
    """Squared sample distance covariance (V-statistic)."""
    fx = np.asarray(fx, float).reshape(len(fx), -1)
    fy = np.asarray(fy, float).reshape(len(fy), -1)
    return float(np.mean(_centered_distances(fx) * _centered_distances(fy)))


def _marginal_statistic(kernels, fy, fy_rows, fy_ranks=None):
    total = 0.0
    for j in range(fy.shape[1]):
        rk = None if fy_ranks is None else fy_ranks[:, j]
        total += sum(k.with_y(fy[:, j], fy_rows[:, j], rk) for k in kernels)
    return float(total)


def marginal_distance_covariance(fx: np.ndarray, fy: np.ndarray) -> float:
    """Sum of univariate squared dCov over all (column of fx, column of fy) pairs."""
    fx = np.asarray(fx, float).reshape(len(fx), -1)
    fy = np.asarray(fy, float).reshape(len(fy), -1)
    kernels = [UnivariateDcov(fx[:, i]) for i in range(fx.shape[1])]
    rows = np.column_stack([abs_row_sums(fy[:, j]) for j in range(fy.shape[1])])
    return _marginal_statistic(kernels, fy, rows)


#: above this many pairs ``method="auto"`` switches to the O(n log n) statistic
EXACT_MAX_N = 3000


def distance_covariance_test(pairs: SamplePairs, features: str = "summaries", n_perm: int = 199,
                             rng=None, method: str = "auto") -> IndependenceTestResult:
    """Permutation test of independence between the U and V samples.

    ``method="exact"`` uses the multivariate distance covariance of the
    feature vectors (O(n^2) memory).  ``method="marginal"`` sums univariate
    distance covariances over feature-coordinate pairs in O(n log n), which
    keeps samples of 10^4 to 10^5 pairs tractable.  ``"auto"`` picks exact
    up to ``EXACT_MAX_N`` pairs.
    """
    if pairs.n < 100:
        raise InvalidInputError("independence test needs at least 100 pairs")
    if method == "auto":
        method = "exact" if pairs.n <= EXACT_MAX_N else "marginal"
    gen = dist.as_generator(rng if rng is not None else RngStream(0))
    fu = feature_map(pairs.u, features)
    fv = feature_map(pairs.v, features)
    exceed = 0
    if method == "exact":
        a = _centered_distances(fu)
        b = _centered_distances(fv)
        stat = float(np.mean(a * b))
        for _ in range(n_perm):
            p = gen.permutation(pairs.n)
            if np.mean(a * b[np.ix_(p, p)]) >= stat:
                exceed += 1
    elif method == "marginal":
        kernels = [UnivariateDcov(fu[:, i]) for i in range(fu.shape[1])]
        rows = np.column_stack([abs_row_sums(fv[:, j]) for j in range(fv.shape[1])])
        rk = np.column_stack([ranks(fv[:, j]) for j in range(fv.shape[1])])
        stat = _marginal_statistic(kernels, fv, rows, rk)
        for _ in range(n_perm):
            p = gen.permutation(pairs.n)
            if _marginal_statistic(kernels, fv[p], rows[p], rk[p]) >= stat:
                exceed += 1
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    return IndependenceTestResult(stat, (1 + exceed) / (1 + n_perm), n_perm, features, pairs.n,
                                  method)


def _wishart_trace_moments(p: WishartParams):
    inv = spd.spd_inverse(p.scale)
    m1 = p.shape * np.trace(inv)
    return m1, p.shape * np.trace(inv @ inv) + m1 ** 2


def _mean_z(sample, ref_mean):
    se = sample.std(axis=0, ddof=1) / np.sqrt(len(sample))
    return (sample.mean(axis=0) - ref_mean) / se


def _two_sample_z(s1, s2):
    se = np.sqrt(s1.var(axis=0, ddof=1) / len(s1) + s2.var(axis=0, ddof=1) / len(s2))
    return (s1.mean(axis=0) - s2.mean(axis=0)) / se


def marginal_moment_check(sample: np.ndarray, target, rng=None, n_ref: int | None = None) -> dict:
    """Compare empirical mean and ``E[(tr X)^2]`` of ``sample`` with ``target``.

    Wishart moments are exact.  Matrix-Kummer moments come from quadrature
    at r = 1 and otherwise from an independent sample of the target law
    (two-sample z).  Returns z-scores with ``passed = max|z| < 3``.
    """
    sample = spd.certify_spd(sample)
    n = sample.shape[0]
    coords = spd.vech(sample)
    tr2 = spd.trace(sample) ** 2
    if isinstance(target, WishartParams):
        _, m2 = _wishart_trace_moments(target)
        z_mean = _mean_z(coords, spd.vech(target.mean()))
        z_tr2 = float(_mean_z(tr2, m2))
        method = "exact"
    elif isinstance(target, MatrixKummerParams):
        if target.a + target.b <= 0:
            raise InvalidInputError("target matrix-Kummer parameters outside sampler support")
        if target.r == 1:
            c = float(target.scale[0, 0])
            m1 = dist.kummer_moment_quad(target.a, target.b, c, 1)
            m2 = dist.kummer_moment_quad(target.a, target.b, c, 2)
            z_mean = _mean_z(coords, np.array([m1]))
            z_tr2 = float(_mean_z(tr2, m2))
            method = "quadrature"
        else:
            ref = dist.kummer_sample(target, n_ref or n, rng if rng is not None else RngStream(0))
            z_mean = _two_sample_z(coords, spd.vech(ref))
            z_tr2 = float(_two_sample_z(tr2, spd.trace(ref) ** 2))
            method = "reference-sample"
    else:
        raise InvalidInputError(f"unknown target law {type(target).__name__}")
    z_mean = np.atleast_1d(z_mean).astype(float)
    max_z = float(max(np.abs(z_mean).max(), abs(z_tr2)))
    return {"target": target.as_dict(), "method": method, "n": n, "z_mean": z_mean.tolist(),
            "z_trace_sq": z_tr2, "max_abs_z": max_z, "passed": max_z < 3.0}


@dataclass(frozen=True)
class ValloisResult:
    test: IndependenceTestResult
    violations: int
    n_total: int

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.n_total


def vallois_pairs(kummer: MatrixKummerParams, wishart: WishartParams, n: int, rng: RngStream,
                  *, literal: bool = False, x_law: str = "matrix-kummer"):
    """Vallois-transformed pairs restricted to the cone; returns ``(pairs, violations)``.

    Raises :class:`ExperimentInvalidError` when more than half of the draws
    leave the cone.
    """
    if x_law == "matrix-kummer":
        x = dist.kummer_sample(kummer, n, rng.spawn(0))
    elif x_law == "wishart":
        x = dist.wishart_sample(WishartParams(kummer.a, kummer.scale), n, rng.spawn(0))
    else:
        raise InvalidInputError(f"unknown x_law {x_law!r}")
    y = dist.wishart_sample(wishart, n, rng.spawn(1))
    u, v, ok = vallois_batch(x, y, literal=literal)
    violations = int(n - ok.sum())
    if violations > n / 2:
        raise ExperimentInvalidError(f"{violations} of {n} Vallois outputs left the cone")
    prov = {"kind": "vallois", "x_law": x_law, "literal": literal, "violations": violations,
            "kummer": kummer.as_dict(), "wishart": wishart.as_dict(), "rng": rng.as_dict()}
    return SamplePairs(u[ok], v[ok], prov), violations


def vallois_experiment(kummer: MatrixKummerParams, wishart: WishartParams, n: int, rng: RngStream,
                       *, literal: bool = False, x_law: str = "matrix-kummer",
                       features: str = "summaries", n_perm: int = 199,
                       method: str = "auto") -> ValloisResult:
    pairs, violations = vallois_pairs(kummer, wishart, n, rng, literal=literal, x_law=x_law)
    test = distance_covariance_test(pairs, features, n_perm, rng.spawn(2), method)
    return ValloisResult(test, violations, n)


def scenario_pairs(scenario: str, a: float, b: float, c: float, r: int, n: int, rng: RngStream,
                   scale=None, y_shape: float | None = None, allow_mismatch: bool = False,
                   literal: bool = False) -> SamplePairs:
    """Sample pairs for one named scenario.

    ``scale`` overrides ``c e`` (used by ``hv-wrong-scale``, default
    ``diag(1, 2, ..., r)``, and by ``vallois``).  ``y_shape`` overrides the
    Wishart shape ``a + b``; in ``hv-positive`` any such mismatch needs
    ``allow_mismatch``.
    """
    if scenario not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    sigma = c * np.eye(r) if scale is None else np.asarray(scale, float)
    if scenario == "hv-wrong-scale" and scale is None:
        sigma = np.diag(np.arange(1.0, r + 1))
    kummer = MatrixKummerParams(a, b, sigma)
    wishart = WishartParams(a + b if y_shape is None else y_shape, sigma)
    if scenario == "hv-positive":
        return generate_hv_pairs(kummer, wishart, n, rng, allow_mismatch=allow_mismatch)
    if scenario == "hv-wrong-x":
        return generate_hv_pairs(kummer, wishart, n, rng, x_law="wishart", allow_mismatch=True)
    if scenario == "hv-wrong-scale":
        return generate_hv_pairs(kummer, wishart, n, rng, allow_mismatch=True)
    if scenario == "vallois":
        return vallois_pairs(kummer, wishart, n, rng, literal=literal)[0]
    # independent by construction: separate streams, no transform
    u = dist.kummer_sample(kummer, n, rng.spawn(0))
    v = dist.wishart_sample(wishart, n, rng.spawn(1))
    return SamplePairs(u, v, {"kind": "independent", "rng": rng.as_dict()})


def worker_count() -> int:
    env = os.environ.get("SPD_KUMMER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidInputError(f"SPD_KUMMER_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RepetitionSummary:
    scenario: str
    reps: int
    rejections: int
    alpha: float
    p_values: tuple
    statistics: tuple = ()
    violations: tuple = ()

    @property
    def rate(self) -> float:
        return self.rejections / self.reps

    def binomial_band(self, k: float = 3.0) -> tuple[float, float]:
        """``alpha +- k * sqrt(alpha(1-alpha)/reps)``."""
        half = k * np.sqrt(self.alpha * (1 - self.alpha) / self.reps)
        return self.alpha - half, self.alpha + half

    def calibrated(self, k: float = 3.0) -> bool:
        lo, hi = self.binomial_band(k)
        return lo <= self.rate <= hi

    def as_dict(self) -> dict:
        lo, hi = self.binomial_band()
        return {"scenario": self.scenario, "reps": self.reps, "rejections": self.rejections,
                "rate": self.rate, "alpha": self.alpha, "band_3sigma": [lo, hi],
                "calibrated": self.calibrated(), "p_values": list(self.p_values),
                "statistics": list(self.statistics), "violations": list(self.violations)}


def rejection_rate(scenario: str, a: float, b: float, c: float, r: int, n: int, reps: int,
                   rng: RngStream, *, alpha: float = 0.05, n_perm: int = 199,
                   features: str = "summaries", scale=None, method: str = "auto",
                   workers: int | None = None, y_shape: float | None = None,
                   allow_mismatch: bool = False, literal: bool = False) -> RepetitionSummary:
    """Repeat sample-and-test ``reps`` times; repetition ``k`` uses ``rng.spawn(k)``.

    Results are collected in repetition order, so they do not depend on
    ``workers``.  For ``vallois`` the per-repetition count of discarded
    (off-cone) pairs is kept in ``violations``.
    """
    if reps < 1:
        raise InvalidInputError("reps must be positive")

    def one(k):
        task = rng.spawn(k)
        pairs = scenario_pairs(scenario, a, b, c, r, n, task, scale=scale, y_shape=y_shape,
                               allow_mismatch=allow_mismatch, literal=literal)
        res = distance_covariance_test(pairs, features, n_perm, task.spawn(99), method)
        return res.p_value, res.statistic, pairs.provenance.get("violations", 0)

    workers = workers or worker_count()
    if workers == 1:
        out = [one(k) for k in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(one, range(reps)))
    pv, st, viol = zip(*out)
    rejections = int(sum(p <= alpha for p in pv))
    return RepetitionSummary(scenario, reps, rejections, alpha, pv, st, viol)


def pvalue_uniformity(p_values) -> float:
    """KS p-value of permutation p-values against Uniform(0, 1)."""
    return float(sps.kstest(np.asarray(p_values), "uniform").pvalue)
