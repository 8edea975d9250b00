"""Kernel values, mean bases and the hyperprior density."""

import math

import numpy as np
import pytest

from bayesbench.config import default_params, parse_expression
from bayesbench.errors import DimensionMismatchError, LengthMismatchError
from bayesbench.kernels import (
    basis_matrix,
    cross_kernel,
    gram_matrix,
    hyperprior_logpdf,
    kernel_eval,
    kernel_param_count,
    mean_basis,
)
from bayesbench.linalg import cholesky
from dataclasses import replace

M3 = parse_expression("kMaternISO3")
M5 = parse_expression("kMaternISO5")
SE = parse_expression("kSEISO")
RQ = parse_expression("kRQISO")
SUM = parse_expression("kSum(kMaternISO3,kRQISO)")
PROD = parse_expression("kProd(kMaternISO5,kSEISO)")

ALL_LEAVES = [
    (parse_expression("kMaternISO1"), [0.7]),
    (M3, [1.3]),
    (M5, [0.4]),
    (SE, [2.0]),
    (RQ, [0.9, 1.7]),
    (parse_expression("kConst"), [0.8]),
]


def brute_force_r(tree, theta, r):
    """Independent evaluation of each closed form at a scalar distance."""
    if tree.node == "kSum":
        n_left = kernel_param_count(tree.children[0])
        return brute_force_r(tree.children[0], theta[:n_left], r) + brute_force_r(
            tree.children[1], theta[n_left:], r
        )
    if tree.node == "kProd":
        n_left = kernel_param_count(tree.children[0])
        return brute_force_r(tree.children[0], theta[:n_left], r) * brute_force_r(
            tree.children[1], theta[n_left:], r
        )
    if tree.node == "kMaternISO1":
        return math.exp(-r / theta[0])
    if tree.node == "kMaternISO3":
        s = math.sqrt(3.0) * r / theta[0]
        return (1 + s) * math.exp(-s)
    if tree.node == "kMaternISO5":
        s = math.sqrt(5.0) * r / theta[0]
        return (1 + s + s * s / 3) * math.exp(-s)
    if tree.node == "kSEISO":
        return math.exp(-0.5 * (r / theta[0]) ** 2)
    if tree.node == "kRQISO":
        ell, a = theta
        return (1 + r * r / (2 * a * ell * ell)) ** (-a)
    if tree.node == "kConst":
        return theta[0]
    raise AssertionError(tree.node)


class TestKernelEval:
    def test_unit_diagonal(self):
        x = np.array([0.3, -1.2])
        assert kernel_eval(M3, [1.0], x, x) == pytest.approx(1.0, abs=1e-15)

    def test_matern3_at_unit_distance(self):
        # (1 + sqrt(3)) * exp(-sqrt(3)), high-precision closed form
        v = kernel_eval(M3, [1.0], np.array([0.0]), np.array([1.0]))
        assert v == pytest.approx(0.4833577245965077, abs=1e-12)

    def test_sum_diagonal_is_two(self):
        x = np.array([0.5, 0.5])
        assert kernel_eval(SUM, [1.0, 1.0, 1.0], x, x) == pytest.approx(2.0, abs=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kernel_eval(M3, [1.0], np.zeros(2), np.zeros(3))

    def test_wrong_param_count(self):
        with pytest.raises(LengthMismatchError):
            kernel_eval(RQ, [1.0], np.zeros(2), np.zeros(2))

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for tree, theta in ALL_LEAVES + [(SUM, [0.6, 1.1, 2.0]), (PROD, [0.5, 1.5])]:
            for _ in range(25):
                a, b = rng.normal(size=3), rng.normal(size=3)
                assert kernel_eval(tree, theta, a, b) == pytest.approx(
                    kernel_eval(tree, theta, b, a), rel=1e-14
                )

    def test_stationarity_under_translation(self):
        rng = np.random.default_rng(4)
        for tree, theta in ALL_LEAVES:
            for _ in range(20):
                a, b, shift = rng.normal(size=(3, 4))
                assert kernel_eval(tree, theta, a, b) == pytest.approx(
                    kernel_eval(tree, theta, a + shift, b + shift), rel=1e-12
                )

    def test_combinators_match_pointwise_oracle(self):
        rng = np.random.default_rng(5)
        for tree, theta in [(SUM, [0.6, 1.1, 2.0]), (PROD, [0.5, 1.5])]:
            for _ in range(30):
                a, b = rng.normal(size=(2, 3))
                r = float(np.linalg.norm(a - b))
                assert kernel_eval(tree, theta, a, b) == pytest.approx(
                    brute_force_r(tree, theta, r), rel=1e-12
                )


class TestGramAndCross:
    def test_single_point(self):
        K = gram_matrix(M3, [1.0], np.array([[0.1, 0.2]]))
        assert K.shape == (1, 1)
        assert K[0, 0] == pytest.approx(1.0)

    def test_two_identical_points(self):
        X = np.array([[0.4, 0.4], [0.4, 0.4]])
        K = gram_matrix(M3, [1.0], X)
        assert np.allclose(K, 1.0)

    def test_matches_pairwise_loop(self):
        rng = np.random.default_rng(6)
        X = rng.random((5, 3))
        for tree, theta in [(M5, [0.7]), (SUM, [0.6, 1.1, 2.0])]:
            K = gram_matrix(tree, theta, X)
            for i in range(5):
                for j in range(5):
                    assert K[i, j] == pytest.approx(
                        kernel_eval(tree, theta, X[i], X[j]), rel=1e-12
                    )

    def test_cross_at_training_point(self):
        rng = np.random.default_rng(7)
        X = rng.random((6, 2))
        k = cross_kernel(M3, [1.0], X, X[0])
        assert k[0] == pytest.approx(1.0)

    def test_cross_empty(self):
        assert cross_kernel(M3, [1.0], np.zeros((0, 2)), np.zeros(2)).shape == (0,)

    def test_cross_matches_gram_row(self):
        rng = np.random.default_rng(8)
        X = rng.random((7, 2))
        xq = rng.random(2)
        full = gram_matrix(M5, [0.8], np.vstack([X, xq]))
        k = cross_kernel(M5, [0.8], X, xq)
        assert np.allclose(k, full[-1, :-1], atol=1e-14)

    def test_gram_with_jitter_factors(self):
        rng = np.random.default_rng(9)
        for dim in (1, 2, 3):
            for tree, theta in [(M3, [1.0]), (M5, [0.5]), (SE, [1.0])]:
                X = rng.random((200, dim))
                K = gram_matrix(tree, theta, X)
                cholesky(K + 1e-10 * np.eye(200))  # must not raise


class TestMeanBasis:
    def test_const(self):
        assert np.array_equal(mean_basis(parse_expression("mConst"), [9.0, 1.0]), [1.0])

    def test_linear(self):
        assert np.array_equal(
            mean_basis(parse_expression("mLinear"), [2.0, 3.0]), [1.0, 2.0, 3.0]
        )

    def test_zero(self):
        assert mean_basis(parse_expression("mZero"), [1.0]).shape == (0,)

    def test_basis_matrix_rows(self):
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        Phi = basis_matrix(parse_expression("mLinear"), X)
        assert np.array_equal(Phi, [[1.0, 1.0, 2.0], [1.0, 3.0, 4.0]])


class TestHyperprior:
    def test_at_prior_mean(self):
        # log-normal log-density at the mode of the underlying normal:
        # sum_j -log(theta_j * std_j * sqrt(2 pi))
        params = replace(
            default_params(),
            kernel_name="kSum(kMaternISO3,kRQISO)",
            kernel_hp_mean=(1.0, 2.0, 0.5),
            kernel_hp_std=(5.0, 1.0, 2.0),
        )
        theta = np.array([1.0, 2.0, 0.5])
        expected = sum(
            -math.log(t * s * math.sqrt(2 * math.pi))
            for t, s in zip(theta, params.kernel_hp_std)
        )
        assert hyperprior_logpdf(params, theta) == pytest.approx(expected, rel=1e-12)

    def test_single_param_closed_form(self):
        params = replace(default_params(), kernel_hp_mean=(1.0,), kernel_hp_std=(5.0,))
        assert hyperprior_logpdf(params, [1.0]) == pytest.approx(
            -2.528376445638773, abs=1e-9
        )

    def test_wider_prior_is_flatter(self):
        values = []
        for std in (1.0, 5.0, 50.0, 500.0):
            params = replace(
                default_params(), kernel_hp_mean=(1.0,), kernel_hp_std=(std,)
            )
            values.append(hyperprior_logpdf(params, [1.0]))
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            hyperprior_logpdf(default_params(), [1.0, 2.0])

    def test_matches_scipy_lognorm(self):
        from scipy.stats import lognorm

        params = replace(default_params(), kernel_hp_mean=(1.5,), kernel_hp_std=(0.8,))
        for theta in (0.2, 1.0, 3.7):
            expected = lognorm.logpdf(theta, s=0.8, scale=1.5)
            assert hyperprior_logpdf(params, [theta]) == pytest.approx(
                expected, rel=1e-10
            )

    def test_nonpositive_theta(self):
        assert hyperprior_logpdf(default_params(), [0.0]) == -math.inf
