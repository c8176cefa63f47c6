import numpy as np
import pytest
from hypothesis import given, strategies as st

from spd_kummer import spd, transform
from spd_kummer.errors import BoundaryViolationError, InvalidInputError

import oracles
from conftest import random_spd, spd_pairs


def max_rel(a, b):
    num = np.linalg.norm(a - b, axis=(-2, -1))
    return float(np.max(num / np.maximum(1.0, np.linalg.norm(b, axis=(-2, -1)))))


class TestHV:
    @pytest.mark.parametrize("r", [1, 2, 3, 5])
    def test_involution(self, rng, r):
        x, y = random_spd(rng, r, 1000), random_spd(rng, r, 1000)
        u, v = transform.hv_forward(x, y)
        xx, yy = transform.hv_inverse(u, v)
        assert max(max_rel(xx, x), max_rel(yy, y)) < 1e-10

    def test_inverse_is_alias(self):
        assert transform.hv_inverse is transform.hv_forward

    def test_scalar_fixed_point(self):
        u, v = transform.hv_forward(np.array([[1.0]]), np.array([[2.0]]))
        assert (u.item(), v.item()) == pytest.approx((1.0, 2.0), rel=1e-14)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_matches_scalar_map(self, x, y):
        u, v = transform.hv_forward(np.array([[x]]), np.array([[y]]))
        su, sv = oracles.scalar_hv(x, y)
        assert u.item() == pytest.approx(su, rel=1e-12)
        assert v.item() == pytest.approx(sv, rel=1e-12)
        assert transform.scalar_t0(x, y) == pytest.approx((su, sv), rel=1e-14)

    @pytest.mark.parametrize("x, y", [(0.0, 1.0), (1.0, -1.0)])
    def test_scalar_domain(self, x, y):
        with pytest.raises(InvalidInputError):
            transform.scalar_t0(x, y)

    @given(spd_pairs())
    def test_outputs_in_cone(self, pair):
        u, v = transform.hv_forward(*pair)
        assert spd.is_spd(u) and spd.is_spd(v)

    @given(spd_pairs())
    def test_determinant_bookkeeping(self, pair):
        x, y = pair
        e = np.eye(x.shape[-1])
        u, v = transform.hv_forward(x, y)
        direct = spd.logdet(e + x)
        via = spd.logdet(e + u + v) - spd.logdet(e + u)
        assert via == pytest.approx(direct, abs=1e-10, rel=1e-10)

    @given(spd_pairs())
    def test_trace_bookkeeping(self, pair):
        x, y = pair
        u, v = transform.hv_forward(x, y)
        t = np.trace(x + y)
        assert np.trace(u + v) == pytest.approx(t, rel=1e-10)

    def test_rejects_rank_mismatch(self):
        with pytest.raises(InvalidInputError):
            transform.hv_forward(np.eye(2), np.eye(3))


class TestJacobian:
    def test_scalar_point(self):
        # 1/(1+1)^2 * (1+1+1)^1 = 3/4
        assert transform.jacobian_analytic(np.eye(1), np.eye(1)) == pytest.approx(0.75, rel=1e-14)
        num = transform.jacobian_numeric(np.eye(1), np.eye(1), h=1e-5)
        assert num == pytest.approx(0.75, abs=1e-6)

    def test_rank_two_identity(self):
        # det(2e)^-3 det(3e)^(3/2) = 27/64
        assert transform.jacobian_analytic(np.eye(2), np.eye(2)) == pytest.approx(27 / 64, rel=1e-14)
        num = transform.jacobian_numeric(np.eye(2), np.eye(2), h=1e-5)
        assert num == pytest.approx(27 / 64, abs=1e-5)

    def test_scalar_closed_form(self, rng):
        # d(x, y)/d(u, v) for the scalar map: |J| = (1 + u + v) / (1 + u)^2
        for u, v in rng.uniform(0.1, 4, size=(20, 2)):
            ana = transform.jacobian_analytic(np.array([[u]]), np.array([[v]]))
            assert ana == pytest.approx((1 + u + v) / (1 + u) ** 2, rel=1e-13)

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_agreement(self, rng, r):
        u, v = random_spd(rng, r, 15, floor=0.3), random_spd(rng, r, 15, floor=0.3)
        for a, b in zip(u, v):
            ana = transform.jacobian_analytic(a, b)
            assert transform.jacobian_numeric(a, b) == pytest.approx(ana, rel=1e-5)

    def test_richardson(self, rng):
        u, v = random_spd(rng, 2), random_spd(rng, 2)
        ana = transform.jacobian_analytic(u, v)
        assert transform.jacobian_numeric(u, v, h=1e-3, richardson=True) == pytest.approx(ana, rel=1e-7)

    def test_step_halving_near_boundary(self):
        u = np.diag([1.0, 2e-5])
        ana = transform.jacobian_analytic(u, np.eye(2))
        assert transform.jacobian_numeric(u, np.eye(2)) == pytest.approx(ana, rel=1e-4)

    def test_bad_step(self):
        with pytest.raises(InvalidInputError):
            transform.jacobian_numeric(np.eye(1), np.eye(1), h=0.0)


class TestVallois:
    def test_sum_preserving(self, rng):
        x, y = random_spd(rng, 3, 100), random_spd(rng, 3, 100)
        for literal in (False, True):
            u, v, _ = transform.vallois_batch(x, y, literal=literal)
            np.testing.assert_allclose(u + v, x + y, rtol=1e-12, atol=1e-12)

    @given(st.floats(1e-2, 1e2), st.floats(1e-2, 1e2))
    def test_reduces_to_scalar_map(self, x, y):
        u, v = transform.vallois_transform(np.array([[x]]), np.array([[y]]))
        assert (u.item(), v.item()) == pytest.approx(oracles.scalar_hv(x, y), rel=1e-10)

    def test_literal_form_leaves_cone(self):
        # s = 3: u = 9/2 - 1 = 3.5, v = 2 - 3.5 = -1.5
        u, v, ok = transform.vallois_batch(np.eye(1), np.eye(1), literal=True)
        assert (u.item(), v.item()) == pytest.approx((3.5, -1.5), rel=1e-14)
        assert not ok.item()
        with pytest.raises(BoundaryViolationError):
            transform.vallois_transform(np.eye(1), np.eye(1), literal=True)

    @given(spd_pairs())
    def test_root_form_stays_in_cone(self, pair):
        u, v, ok = transform.vallois_batch(*pair)
        assert ok.all()


class TestXAlpha:
    def test_scalar_closed_form(self):
        xa = transform.x_alpha(np.eye(1), 2 * np.eye(1), 0.1)
        assert xa.item() == pytest.approx(0.2 / 1.1, rel=1e-13)

    @pytest.mark.parametrize("r", [1, 2, 4])
    @pytest.mark.parametrize("alpha", [0.5, 1e-2])
    def test_commuting_case(self, r, alpha):
        e = np.eye(r)
        np.testing.assert_allclose(transform.x_alpha(e, e, alpha), alpha / (1 + alpha) * e,
                                   rtol=1e-10, atol=1e-14)

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_first_order_convergence(self, rng, r):
        u, z = random_spd(rng, r), random_spd(rng, r)
        errs = [np.linalg.norm(transform.x_alpha(u, z, a) / a - z) for a in (1e-2, 1e-3, 1e-4)]
        assert errs[0] > errs[1] > errs[2]
        for k in range(2):
            assert 5 < errs[k] / errs[k + 1] < 20

    @given(spd_pairs(max_r=3), st.floats(1e-3, 1.0))
    def test_defining_identity(self, pair, alpha):
        u, z = pair
        e = np.eye(u.shape[-1])
        xa = transform.x_alpha(u, z, alpha)
        s = u + e / alpha
        lhs = spd.quadratic_rep(spd.spd_sqrt(e + xa), s)
        np.testing.assert_allclose(lhs, z + s, rtol=1e-8, atol=1e-8 * np.abs(z + s).max())

    def test_small_alpha_in_cone(self, rng):
        u, z = random_spd(rng, 3), random_spd(rng, 3)
        assert spd.is_spd(transform.x_alpha(u, z, 1e-3))

    def test_alpha_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            transform.x_alpha(np.eye(2), np.eye(2), 0.0)
