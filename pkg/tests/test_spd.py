import numpy as np
import pytest
from hypothesis import given

from spd_kummer import spd
from spd_kummer.errors import InvalidInputError, NotSPDError

import oracles
from conftest import random_spd, spd_matrices, spd_pairs


def rel(a, b):
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


class TestVech:
    def test_roundtrip(self, rng):
        x = random_spd(rng, 4)
        np.testing.assert_array_equal(spd.unvech(spd.vech(x)), x)

    def test_order_is_upper_row_major(self):
        x = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
        np.testing.assert_array_equal(spd.vech(x), [1, 2, 3, 4, 5, 6])

    def test_weighted_inner_is_trace(self, rng):
        x, y = random_spd(rng, 3), random_spd(rng, 3)
        assert spd.vech_inner(spd.vech(x), spd.vech(y)) == pytest.approx(np.trace(x @ y), rel=1e-13)

    @pytest.mark.parametrize("d", [2, 4, 5, 7])
    def test_non_triangular_dim(self, d):
        with pytest.raises(InvalidInputError):
            spd.rank_from_dim(d)


class TestCertification:
    def test_identity(self):
        assert spd.det(np.eye(3)) == 1.0
        assert spd.logdet(np.eye(3)) == 0.0

    def test_two_by_two_closed_form(self):
        x = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert spd.det(x) == pytest.approx(3.0, rel=1e-14)
        assert spd.min_eigenvalue(x) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("bad", [
        np.array([[1.0, 2.0], [2.0, 1.0]]),          # indefinite
        np.array([[1.0, 1.0], [1.0, 1.0]]),          # singular
        np.zeros((2, 2)),
    ])
    def test_rejects_off_cone(self, bad):
        with pytest.raises(NotSPDError):
            spd.certify_spd(bad)

    def test_rejects_asymmetric_and_nonfinite(self):
        with pytest.raises(InvalidInputError):
            spd.certify_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(InvalidInputError):
            spd.certify_spd(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_relative_floor(self):
        # tiny but well conditioned relative to |x|: accepted
        spd.certify_spd(1e-6 * np.eye(2))
        with pytest.raises(NotSPDError):
            spd.certify_spd(np.diag([1e6, 1e-7]))

    def test_is_spd_batched(self):
        xs = np.stack([np.eye(2), -np.eye(2)])
        np.testing.assert_array_equal(spd.is_spd(xs), [True, False])


class TestDecomposition:
    @pytest.mark.parametrize("r", [1, 2, 3, 5])
    def test_sqrt_and_inverse_sqrt(self, rng, r):
        x = random_spd(rng, r, 1000)
        s = spd.spd_sqrt(x)
        assert max(rel(a, b) for a, b in zip(s @ s, x)) < 1e-10
        inv_s = spd.spd_inv_sqrt(x)
        alt = spd.spd_inverse(s)
        assert max(rel(a, b) for a, b in zip(inv_s, alt)) < 1e-10

    def test_against_closed_forms_2x2(self, rng):
        for x in random_spd(rng, 2, 50):
            np.testing.assert_allclose(spd.spd_sqrt(x), oracles.sqrt2(x), rtol=1e-12, atol=1e-13)
            np.testing.assert_allclose(spd.spd_inverse(x), oracles.inv2(x), rtol=1e-11, atol=1e-13)
            np.testing.assert_allclose(spd.eig(x).eigenvalues, oracles.eig2(x), rtol=1e-11, atol=1e-13)

    @pytest.mark.parametrize("r", [2, 3, 5])
    def test_jacobi_matches_lapack(self, rng, r):
        x = random_spd(rng, r)
        jac = spd.eig(x, method="jacobi")
        lap = spd.eig(x)
        np.testing.assert_allclose(jac.eigenvalues, lap.eigenvalues, rtol=1e-12)
        assert rel(jac.reconstruct(), x) < 1e-13

    def test_jacobi_handles_diagonal(self):
        res = spd.jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_array_equal(res.eigenvalues, [1.0, 2.0, 3.0])

    def test_unknown_method(self):
        with pytest.raises(InvalidInputError):
            spd.eig(np.eye(2), method="qr")

    @given(spd_matrices())
    def test_power_laws(self, x):
        np.testing.assert_allclose(spd.spd_power(x, 0.3) @ spd.spd_power(x, 0.7), x,
                                   rtol=1e-9, atol=1e-9 * np.abs(x).max())
        assert spd.logdet(x) == pytest.approx(np.linalg.slogdet(x)[1], rel=1e-10, abs=1e-10)


class TestQuadraticRepresentation:
    def test_definition(self, rng):
        x, y = random_spd(rng, 3), random_spd(rng, 3)
        np.testing.assert_allclose(spd.quadratic_rep(y, x), y @ x @ y, rtol=1e-14)

    def test_rank_mismatch(self):
        with pytest.raises(InvalidInputError):
            spd.quadratic_rep(np.eye(2), np.eye(3))

    def test_endomorphism_acts_like_map(self, rng):
        y, x = random_spd(rng, 3), random_spd(rng, 3)
        m = spd.quadratic_rep_endo(y)
        np.testing.assert_allclose(m.apply(x), y @ x @ y, rtol=1e-12)

    @pytest.mark.parametrize("r", [1, 2, 3, 5])
    def test_endomorphism_determinant(self, rng, r):
        xs = random_spd(rng, r, 1000)
        errs = [abs(spd.endo_det(spd.quadratic_rep_endo(x)) / np.linalg.det(x) ** (r + 1) - 1)
                for x in xs]
        assert max(errs) < 1e-9

    def test_endomorphism_shape_check(self):
        with pytest.raises(InvalidInputError):
            spd.SymEndomorphism(2, np.eye(2))

    @given(spd_pairs())
    def test_min_eigenvalue_product_bound(self, pair):
        x, y = pair
        z = spd.quadratic_rep(spd.spd_sqrt(x), y)
        bound = spd.min_eigenvalue(x) * spd.min_eigenvalue(y)
        assert spd.min_eigenvalue(z) >= bound * (1 - 1e-9) - 1e-12

    @given(spd_pairs())
    def test_symmetric_pairing(self, pair):
        u, v = pair
        lhs = np.trace(spd.quadratic_rep(u, v @ v))
        rhs = np.trace(spd.quadratic_rep(v, u @ u))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_pairing_fails_for_non_scalar_weight(self, rng):
        c = np.diag([1.0, 2.0])
        gaps = []
        for _ in range(200):
            u, v = random_spd(rng, 2), random_spd(rng, 2)
            gaps.append(abs(spd.inner(c, spd.quadratic_rep(u, v @ v))
                            - spd.inner(c, spd.quadratic_rep(v, u @ u))))
        assert max(gaps) > 1e-6

    @given(spd_pairs())
    def test_logdet_multiplicative(self, pair):
        x, y = pair
        z = spd.quadratic_rep(spd.spd_sqrt(x), y)
        assert spd.logdet(z) == pytest.approx(spd.logdet(x) + spd.logdet(y), abs=1e-10, rel=1e-10)
