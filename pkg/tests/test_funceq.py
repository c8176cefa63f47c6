import numpy as np
import pytest
from hypothesis import given, strategies as st

from spd_kummer import distributions as dist
from spd_kummer import funceq, spd
from spd_kummer.distributions import MatrixKummerParams, RngStream, WishartParams
from spd_kummer.errors import IllPosedFitError, InvalidInputError
from spd_kummer.funceq import PexiderParams, ScalarFamilyParams, SolutionParams

import oracles
from conftest import random_spd

finite = st.floats(-5, 5, allow_nan=False)
solution_params = st.builds(SolutionParams, finite, finite, finite, finite, finite, finite)


class TestSolutionFamily:
    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_random_parameters(self, rng, r):
        for _ in range(50):
            p = SolutionParams(*rng.uniform(-3, 3, size=6))
            rep = funceq.residual_report(p, r, 100, rng)
            assert rep.max_rel_residual <= 1e-9
            assert rep.n_points == 100

    @given(solution_params)
    def test_swapped_form(self, p):
        gen = np.random.default_rng(1)
        u, v = funceq.random_interior_points(2, 5, gen), funceq.random_interior_points(2, 5, gen)
        lhs = np.abs(funceq.family_A(p, u) + funceq.family_B(p, v))
        assert np.all(np.abs(funceq.swapped_residual(p, u, v)) <= 1e-9 * (1 + lhs))

    def test_wrong_function_is_detected(self, rng):
        p = SolutionParams(1.0, 2.0, lam=-1.0)
        u, v = random_spd(rng, 2, 20), random_spd(rng, 2, 20)
        bad_a = lambda q, x: funceq.family_A(q, x) + 0.1 * spd.trace(x @ x)
        res = funceq.main_residual(p, u, v, funcs=(bad_a, funceq.family_B, funceq.family_C,
                                                   funceq.family_D))
        assert np.abs(res).max() > 1e-3

    def test_params_must_be_finite(self):
        with pytest.raises(InvalidInputError):
            SolutionParams(np.nan, 1.0)

    def test_report_serializes(self, rng):
        d = funceq.residual_report(SolutionParams(1, 1), 2, 5, rng).as_dict()
        assert set(d) == {"max_abs_residual", "max_rel_residual", "argmax", "n_points"}


class TestScalarFamily:
    def test_constraint(self):
        with pytest.raises(InvalidInputError):
            ScalarFamilyParams(1, 1, 1, c1=1.0)
        assert ScalarFamilyParams(1, 1, 1, c1=1.0, strict=False).gap == 1.0

    @given(solution_params, st.floats(1e-2, 50), st.floats(1e-2, 50))
    def test_rank_one_reduction(self, p, x, y):
        sp = ScalarFamilyParams.from_matrix(p)
        mat = float(funceq.main_residual(p, np.array([[x]]), np.array([[y]])))
        assert abs(funceq.scalar_family_residual(sp, x, y) - mat) < 1e-10 * (1 + abs(x) + abs(y))

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(1e-2, 20), st.floats(1e-2, 20))
    def test_scalar_solutions(self, a, b, c, x, y):
        sp = ScalarFamilyParams(a, b, c, c1=0.3, c2=-1.1, c3=0.5, c4=-1.3)
        assert abs(funceq.scalar_family_residual(sp, x, y)) < 1e-10 * (1 + x + y)

    def test_constant_gap_shows_up(self):
        sp = ScalarFamilyParams(1, 1, 1, c1=1.0, strict=False)
        assert funceq.scalar_family_residual(sp, 2.0, 3.0) == pytest.approx(1.0, abs=1e-12)


class TestPexider:
    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_logdet_solves(self, rng, r):
        x = funceq.random_interior_points(r, 50, rng)
        y = funceq.random_interior_points(r, 50, rng)
        res = funceq.pexider_residual(PexiderParams(1.7, 0.4, -2.0), x, y)
        assert np.abs(res).max() < 1e-9

    def test_trace_does_not(self, rng):
        x = funceq.random_interior_points(2, 50, rng)
        y = funceq.random_interior_points(2, 50, rng)
        assert np.abs(funceq.pexider_residual(PexiderParams(1.0), x, y, base="trace")).max() > 1e-3

    def test_domain(self):
        with pytest.raises(InvalidInputError):
            funceq.pexider_residual(PexiderParams(1.0), 0.5 * np.eye(2), 2 * np.eye(2))
        with pytest.raises(InvalidInputError):
            funceq.pexider_residual(PexiderParams(1.0), 2 * np.eye(2), 2 * np.eye(2), base="det")


def hv_logpdfs(a, b, c, r):
    """Normalized log-densities of U, V, X, Y with oracle normalizers."""
    scale = c * np.eye(r)
    pu, pv = MatrixKummerParams(a + b, -b, scale), WishartParams(a, scale)
    px, py = MatrixKummerParams(a, b, scale), WishartParams(a + b, scale)
    cu, cx = oracles.kummer_log_norm(a + b, -b, c, r), oracles.kummer_log_norm(a, b, c, r)
    return (lambda m: dist.kummer_logpdf(pu, m, cu), lambda m: dist.wishart_logpdf(pv, m),
            lambda m: dist.kummer_logpdf(px, m, cx), lambda m: dist.wishart_logpdf(py, m))


class TestFit:
    @pytest.mark.parametrize("r", [1, 2])
    @pytest.mark.parametrize("a, b, c", [(1.0, 1.0, 1.0), (2.0, 0.5, 1.0), (1.5, -0.5, 2.0)])
    def test_recovers_parameters(self, r, a, b, c):
        pts = 0.5 * np.eye(r) + dist.wishart_sample(WishartParams(r + 1.0, np.eye(r)), 40, RngStream(3))
        fit = funceq.fit_solution_params(*hv_logpdfs(a, b, c, r), pts)
        assert fit.is_solution
        got = fit.distribution_params()
        assert got["a"] == pytest.approx(a, abs=1e-6)
        assert got["b"] == pytest.approx(b, abs=1e-6)
        assert got["c"] == pytest.approx(c, abs=1e-6)
        assert fit.equation_residual < 1e-8

    def test_wrong_law_is_not_a_solution(self):
        fu, fv, fx, _ = hv_logpdfs(1.0, 1.0, 1.0, 1)
        fy = lambda m: dist.kummer_logpdf_unnorm(MatrixKummerParams(2.0, 1.0, 1.0, r=1), m)
        pts = funceq.random_interior_points(1, 40, RngStream(4))
        fit = funceq.fit_solution_params(fu, fv, fx, fy, pts)
        assert not fit.is_solution
        assert fit.as_dict()["is_solution"] is False

    def test_rank_deficient_design(self):
        pts = np.repeat(np.eye(2)[None], 10, axis=0)
        with pytest.raises(IllPosedFitError):
            funceq.fit_solution_params(*hv_logpdfs(1.0, 1.0, 1.0, 2), pts)

    def test_needs_points(self):
        with pytest.raises(InvalidInputError):
            funceq.fit_solution_params(*hv_logpdfs(1.0, 1.0, 1.0, 1), np.ones((3, 1, 1)))


class TestFamilyStructure:
    @given(solution_params, st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_difference_identities(self, p, r, seed):
        y = random_spd(np.random.default_rng(seed), r)
        ld1 = spd.logdet(np.eye(r) + y)
        assert funceq.family_B(p, y) - funceq.family_C(p, y) == pytest.approx(p.a * ld1 + p.d, abs=1e-9)
        assert funceq.family_D(p, y) - funceq.family_A(p, y) == pytest.approx(p.b * ld1 + p.d, abs=1e-9)

    def test_trace_term_is_additive(self, rng):
        p = SolutionParams(0.0, 0.0, lam=1.7)
        x, y = random_spd(rng, 3), random_spd(rng, 3)
        assert funceq.family_A(p, x + y) == pytest.approx(funceq.family_A(p, x) + funceq.family_A(p, y))
