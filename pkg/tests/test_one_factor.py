import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import one_factor_matrix, random_correlation
from mvpert.corr_matrix import equicorrelated
from mvpert.errors import LoadingClipped, LoadingOutOfRange
from mvpert.one_factor import (
    CLIP,
    _loadings_from_row_sums,
    OneFactorModel,
    analytic_inverse,
    check_positive_definite,
    fit_constant_factor,
    fit_one_factor,
    fit_pc_k_factor,
)

loadings = st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=12)
seeds = st.integers(0, 2**32 - 1)


class TestModel:
    @given(loadings)
    def test_invariants(self, c):
        m = OneFactorModel.from_loadings(c)
        n = m.n
        assert np.all(m.s > 0)
        np.testing.assert_array_equal(np.diag(m.rho_f), 1.0)
        off = ~np.eye(n, dtype=bool)
        np.testing.assert_array_equal(m.rho_f[off], np.outer(m.c, m.c)[off])
        assert np.max(np.abs(m.rho_f @ m.rho_f_inv - np.eye(n))) < 1e-10
        np.testing.assert_allclose(m.det_rho_f, np.linalg.det(m.rho_f), rtol=1e-10)

    @given(loadings)
    def test_sherman_morrison_form(self, c):
        m = OneFactorModel.from_loadings(c)
        u = m.c / m.s**2
        ref = np.diag(1 / m.s**2) - np.outer(u, u) / m.sigma2
        np.testing.assert_allclose(analytic_inverse(m), ref, rtol=1e-13, atol=1e-13)

    def test_inverse_examples(self):
        np.testing.assert_allclose(analytic_inverse(OneFactorModel.from_loadings([0, 0, 0])), np.eye(3))
        m = OneFactorModel.from_loadings([0.6, 0.6])
        ref = np.array([[1, -0.36], [-0.36, 1]]) / (1 - 0.36**2)
        np.testing.assert_allclose(m.rho_f_inv, ref, rtol=1e-14)

    def test_determinant_lemma_large(self, rng):
        c = rng.uniform(-0.8, 0.8, 50)
        m = OneFactorModel.from_loadings(c)
        sign, logdet = np.linalg.slogdet(m.rho_f)
        assert sign > 0
        np.testing.assert_allclose(math.log(m.det_rho_f), logdet, rtol=1e-10)
        np.testing.assert_allclose(m.rho_f @ m.rho_f_inv, np.eye(50), atol=1e-10)

    def test_out_of_range(self):
        with pytest.raises(LoadingOutOfRange) as info:
            OneFactorModel.from_loadings([0.2, 1.0])
        assert info.value.index == 1

    def test_json_round_trip(self):
        m = OneFactorModel.from_loadings([0.3, -0.2, 0.7])
        back = OneFactorModel.from_json(m.to_json())
        np.testing.assert_array_equal(back.c, m.c)
        np.testing.assert_array_equal(back.rho_f_inv, m.rho_f_inv)
        assert back.det_rho_f == m.det_rho_f

    def test_positive_definite_check(self):
        assert check_positive_definite(OneFactorModel.from_loadings([0.5, 0.5])) == pytest.approx(0.75)


class TestFit:
    def test_equicorrelated(self):
        m = fit_one_factor(equicorrelated(5, 0.36))
        np.testing.assert_allclose(m.c, 0.6, rtol=1e-15)
        np.testing.assert_allclose(m.rho_f, np.asarray(equicorrelated(5, 0.36).entries), atol=1e-15)

    def test_identity(self):
        m = fit_one_factor(np.eye(4))
        np.testing.assert_array_equal(m.c, 0)
        np.testing.assert_array_equal(m.rho_f, np.eye(4))
        assert m.sigma2 == 1.0

    def test_signed_geometric_mean_of_row_averages(self, rng):
        a = random_correlation(rng, 4)
        m = fit_one_factor(a)
        avg = (a.sum(axis=1) - 1) / 3
        for i in range(4):
            for j in range(4):
                if i != j:
                    ref = np.sign(avg[i]) * np.sign(avg[j]) * math.sqrt(abs(avg[i] * avg[j]))
                    assert m.rho_f[i, j] == pytest.approx(ref, rel=1e-12, abs=1e-15)

    def test_constant_one_factor_input_reproduced(self):
        m = fit_one_factor(one_factor_matrix(np.full(6, -0.45)))
        np.testing.assert_allclose(m.rho_f, one_factor_matrix(np.full(6, -0.45)), atol=1e-15)

    def test_non_constant_one_factor_input_not_reproduced(self):
        # the row-average fit gives c_i^2 = |c_i sum_{l!=i} c_l| / (n-1), which equals c_i^2
        # only when every loading equals the mean of the others
        c = np.array([0.3, 0.5, 0.7])
        m = fit_one_factor(one_factor_matrix(c))
        assert np.max(np.abs(m.rho_f - one_factor_matrix(c))) > 1e-3

    def test_loadings_below_one_on_valid_input(self, rng):
        # |row average| < 1 for any valid matrix, so sqrt keeps |c_i| < 1
        m = fit_one_factor(equicorrelated(4, 0.999999))
        assert np.all(np.abs(m.c) < 1)

    def test_clipping(self):
        rows = np.array([0.5, 3.3, -3.3])
        with pytest.raises(LoadingOutOfRange) as info:
            _loadings_from_row_sums(rows, 3, None)
        assert info.value.index == 1
        with pytest.warns(LoadingClipped):
            c = _loadings_from_row_sums(rows, 3, CLIP)
        np.testing.assert_array_equal(c[1:], [CLIP, -CLIP])

    def test_constant_factor(self):
        assert fit_constant_factor(equicorrelated(4, 0.36)).c[0] == pytest.approx(0.6)
        assert fit_constant_factor(np.eye(3)).c[0] == 0.0
        a = np.array([[1, 0.2, 0.4], [0.2, 1, 0.6], [0.4, 0.6, 1]])
        m = fit_constant_factor(a)
        np.testing.assert_allclose(m.c, math.sqrt(0.4))

    def test_constant_factor_minimizes_chi2(self):
        a = np.array([[1, 0.2, 0.4], [0.2, 1, 0.6], [0.4, 0.6, 1]])
        off = a[np.triu_indices(3, 1)]
        grid = np.linspace(0, 0.99, 99001)
        chi2 = ((off[None, :] - grid[:, None]) ** 2).sum(axis=1)
        c2 = grid[np.argmin(chi2)]
        assert fit_constant_factor(a).c[0] ** 2 == pytest.approx(c2, abs=1e-5)


class TestPrincipalComponents:
    def test_full_rank_reproduces(self, rng):
        a = random_correlation(rng, 5)
        np.testing.assert_allclose(fit_pc_k_factor(a, 5), a, atol=1e-10)

    def test_rank_one_on_equicorrelated(self):
        np.testing.assert_allclose(fit_pc_k_factor(equicorrelated(4, 0.3), 1), np.ones((4, 4)), atol=1e-14)

    @given(seeds, st.integers(1, 4))
    def test_rank_k(self, seed, k):
        a = random_correlation(np.random.default_rng(seed), 5)
        out = fit_pc_k_factor(a, k)
        np.testing.assert_array_equal(np.diag(out), 1.0)
        lam = np.linalg.eigvalsh(out)
        assert np.all(lam > -1e-8)
        assert np.count_nonzero(lam > 1e-8) == k

    def test_bad_k(self):
        with pytest.raises(ValueError):
            fit_pc_k_factor(np.eye(3), 0)
