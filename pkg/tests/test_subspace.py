import itertools
import warnings

import numpy as np
import pytest

from matgcd.errors import ExtractionWarning, NormalizationError, ParameterError
from matgcd.matpoly import (MatPoly, PolyPair, add_noise_pair, monic_normalize, mul,
                            random_with_common_factor)
from matgcd.numkernel import null_space_basis
from matgcd.structmat import block_hankel, build_resultant, toeplitz_of
from matgcd.subspace import (exact_gcd_echelon, recover_cofactors, shifted_echelon,
                             subspace_gcd)

from conftest import WORKED_C, from_roots


def max_coeff_error(p, q):
    n = max(p.degree, q.degree)
    return float(np.max(np.abs(p.padded(n) - q.padded(n))))


def _left_mul(t, pair):
    return PolyPair(MatPoly(np.matmul(t, pair.a.coeffs)), MatPoly(np.matmul(t, pair.b.coeffs)))


class TestSubspaceGcd:
    def test_worked_example(self, worked_pair):
        triple, diag = subspace_gcd(worked_pair, 1)
        assert max_coeff_error(triple.c, WORKED_C) <= 1e-6
        assert diag.distance <= 1e-8
        assert diag.residual <= 1e-8
        assert np.all(diag.k_matrix_singulars >= 0)
        assert diag.nullspace_gap > 1e6

    def test_scalar(self):
        a, b = from_roots([1, 2]), from_roots([1, 3])
        triple, _ = subspace_gcd(PolyPair(a, b), 1)
        assert max_coeff_error(triple.c, from_roots([1])) <= 1e-8

    def test_noisy_worked_example(self, worked_pair):
        noisy = add_noise_pair(worked_pair, 0.1, 0)
        triple, diag = subspace_gcd(noisy, 1)
        assert triple.c.degree == 1
        np.testing.assert_allclose(triple.c.leading, np.eye(2), atol=1e-12)
        assert diag.residual > 0 and diag.distance > 0

    def test_degree_checks(self, worked_pair):
        with pytest.raises(ParameterError):
            subspace_gcd(worked_pair, 2)
        with pytest.raises(ParameterError):
            subspace_gcd(worked_pair, 0)

    @pytest.mark.parametrize("m,n,d", [(m, n, d) for m, n, d in
                                       itertools.product((2, 3), (2, 3, 4), (1, 2)) if d < n])
    def test_planted_recovery(self, m, n, d):
        for seed in range(5):
            pair, triple = random_with_common_factor(m, n, d, 100 * m + 10 * n + d + seed)
            got, diag = subspace_gcd(pair, d)
            assert max_coeff_error(got.c, triple.c) <= 1e-6
            assert diag.distance <= 1e-8
            assert diag.residual <= 1e-8

    def test_hankel_reformulation(self):
        # sum_i ||C_coeff H(V_i)||^2 equals ||tau(C) V0||^2
        pair, triple = random_with_common_factor(2, 3, 1, 7)
        noisy = add_noise_pair(pair, 0.05, 8)
        s = build_resultant(noisy)
        v0, _ = null_space_basis(s.dense, 2)
        c = MatPoly(triple.c.coeffs + 0.1)
        crow = np.concatenate(c.coeffs[::-1], axis=1)
        lhs = sum(np.linalg.norm(crow @ block_hankel(v0[:, i], 2, 1)) ** 2 for i in range(2))
        rhs = np.linalg.norm(toeplitz_of(c, s.layout.ell) @ v0) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_left_multiplication_invariance(self):
        # row operations keep the kernel of the resultant on exact data
        rng = np.random.default_rng(11)
        pair, _ = random_with_common_factor(2, 3, 1, 9)
        t = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        c1, _ = subspace_gcd(pair, 1)
        c2, _ = subspace_gcd(_left_mul(t, pair), 1)
        assert max_coeff_error(c1.c, c2.c) <= 1e-6
        # on noisy data only orthogonal transforms keep the singular vectors
        noisy = add_noise_pair(pair, 0.05, 10)
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        c1, _ = subspace_gcd(noisy, 1)
        c2, _ = subspace_gcd(_left_mul(q, noisy), 1)
        assert max_coeff_error(c1.c, c2.c) <= 1e-6

    def test_singular_leading_block(self):
        # common right factor [[1, 0], [0, lam]] has a singular leading coefficient
        c = MatPoly(np.array([[[1.0, 0], [0, 0]], [[0, 0], [0, 1.0]]]))
        rng = np.random.default_rng(12)
        pair = PolyPair(mul(MatPoly(rng.standard_normal((2, 2, 2))), c),
                        mul(MatPoly(rng.standard_normal((2, 2, 2))), c))
        with pytest.raises(NormalizationError):
            subspace_gcd(pair, 1)


class TestRecoverCofactors:
    def test_planted(self):
        pair, triple = random_with_common_factor(2, 3, 1, 13)
        _, d = recover_cofactors(pair, triple.c)
        assert d <= 1e-10

    def test_identity(self, worked_pair):
        triple, d = recover_cofactors(worked_pair, MatPoly.identity(2))
        assert triple.abar.allclose(worked_pair.a, atol=1e-12)
        assert triple.bbar.allclose(worked_pair.b, atol=1e-12)
        assert d <= 1e-12

    def test_normal_equations_oracle(self):
        rng = np.random.default_rng(14)
        pair = PolyPair(MatPoly(rng.standard_normal((3, 2, 2))),
                        MatPoly(rng.standard_normal((3, 2, 2))))
        c = monic_normalize(MatPoly(rng.standard_normal((2, 2, 2))))
        # columns: images of unit cofactor coefficients under X -> X c
        target = np.concatenate([pair.a.coeffs.ravel(), pair.b.coeffs.ravel()])
        cols = []
        for half in range(2):
            for idx in itertools.product(range(2), range(2), range(2)):
                x = np.zeros((2, 2, 2))
                x[idx] = 1.0
                img = mul(MatPoly(x), c).padded(2).ravel()
                z = np.zeros(2 * img.size)
                z[half * img.size:(half + 1) * img.size] = img
                cols.append(z)
        m = np.array(cols).T
        sol = np.linalg.solve(m.T @ m, m.T @ target)
        oracle = np.linalg.norm(m @ sol - target)
        _, d = recover_cofactors(pair, c)
        assert d == pytest.approx(oracle, rel=1e-10)

    def test_bad_shapes(self, worked_pair):
        with pytest.raises(ParameterError):
            recover_cofactors(worked_pair, MatPoly.identity(3))


class TestEchelon:
    def test_worked_example(self, worked_pair):
        g = exact_gcd_echelon(worked_pair, expected_degree=1)
        assert g.degree == 1
        assert max_coeff_error(monic_normalize(g), WORKED_C) <= 1e-6

    def test_coprime_pair(self, coprime_pair):
        with pytest.warns(ExtractionWarning):
            g = exact_gcd_echelon(coprime_pair)
        assert g.degree == 0
        np.testing.assert_allclose(monic_normalize(g).coeffs[0], np.eye(2), atol=1e-12)

    def test_scalar(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            g = exact_gcd_echelon(PolyPair(from_roots([1, 2]), from_roots([1, 3])))
        assert max_coeff_error(monic_normalize(g), from_roots([1])) <= 1e-10

    def test_planted(self):
        for seed in range(5):
            pair, triple = random_with_common_factor(2, 3, 1, 20 + seed)
            g = exact_gcd_echelon(pair, expected_degree=1)
            assert max_coeff_error(monic_normalize(g), triple.c) <= 1e-6

    def test_echelon_shape(self):
        m = np.array([[0.0, 2, 1], [1, 1, 1], [2, 2, 2]])
        rows, piv = shifted_echelon(m)
        assert piv == [0, 1]
        np.testing.assert_allclose(np.tril(rows[:, :2], -1), 0)
