"""Covariance functions, mean bases and the kernel-parameter hyperprior.

All kernel leaves are isotropic (value depends only on r = ||x1 - x2||) and
unit-signal: k(x, x) = 1, except ``kConst`` whose parameter is its value.
``kSum``/``kProd`` combine children pointwise; parameters are consumed in
tree (depth-first) order.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .config import REGISTRY, SpecTree, kernel_param_count
from .errors import DimensionMismatchError, LengthMismatchError

__all__ = [
    "kernel_param_count",
    "kernel_on_distance",
    "kernel_eval",
    "gram_matrix",
    "cross_kernel",
    "basis_dim",
    "mean_basis",
    "basis_matrix",
    "hyperprior_logpdf",
]

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


def _leaf_on_distance(node: str, theta: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    if node == "kMaternISO1":
        ell = theta[0]
        return lambda r: np.exp(-r / ell)
    if node == "kMaternISO3":
        ell = theta[0]

        def matern3(r):
            s = (_SQRT3 / ell) * r
            return (1.0 + s) * np.exp(-s)

        return matern3
    if node == "kMaternISO5":
        ell = theta[0]

        def matern5(r):
            s = (_SQRT5 / ell) * r
            return (1.0 + s + s * s / 3.0) * np.exp(-s)

        return matern5
    if node == "kSEISO":
        ell = theta[0]
        return lambda r: np.exp(-0.5 * (r / ell) ** 2)
    if node == "kRQISO":
        ell, shape = theta[0], theta[1]
        return lambda r: (1.0 + r * r / (2.0 * shape * ell * ell)) ** (-shape)
    if node == "kConst":
        c = theta[0]
        return lambda r: np.full_like(np.asarray(r, dtype=float), c)
    raise AssertionError(f"not a kernel leaf: {node}")


def kernel_on_distance(tree: SpecTree, theta) -> Callable[[np.ndarray], np.ndarray]:
    """Compile the kernel tree into a function of the pairwise distance."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or len(theta) != kernel_param_count(tree):
        raise LengthMismatchError(
            f"kernel {tree.render()} needs {kernel_param_count(tree)} parameters, "
            f"got {theta.shape}"
        )

    def build(node: SpecTree, offset: int) -> tuple[Callable, int]:
        if not node.children:
            n_own = REGISTRY[node.node].n_params
            return _leaf_on_distance(node.node, theta[offset:offset + n_own]), offset + n_own
        left, offset = build(node.children[0], offset)
        right, offset = build(node.children[1], offset)
        if node.node == "kSum":
            return (lambda r: left(r) + right(r)), offset
        if node.node == "kProd":
            return (lambda r: left(r) * right(r)), offset
        raise AssertionError(f"not a kernel combinator: {node.node}")

    func, _ = build(tree, 0)
    return func


def kernel_eval(tree: SpecTree, theta, x1, x2) -> float:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise DimensionMismatchError(f"point shapes differ: {x1.shape} vs {x2.shape}")
    r = float(np.linalg.norm(x1 - x2))
    return float(kernel_on_distance(tree, theta)(np.float64(r)))


def gram_matrix(tree: SpecTree, theta, X) -> np.ndarray:
    """Symmetric n x n matrix of pairwise kernel values."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    diff = X[:, None, :] - X[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    K = kernel_on_distance(tree, theta)(r)
    return 0.5 * (K + K.T)  # exact symmetry despite round-off


def cross_kernel(tree: SpecTree, theta, X, xq) -> np.ndarray:
    """Kernel values between each row of X and the query point."""
    X = np.asarray(X, dtype=float)
    xq = np.asarray(xq, dtype=float)
    if X.size == 0:
        return np.zeros(0)
    if X.shape[1] != xq.shape[0]:
        raise DimensionMismatchError(
            f"query dimension {xq.shape[0]} != data dimension {X.shape[1]}"
        )
    diff = X - xq
    r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return np.asarray(kernel_on_distance(tree, theta)(r), dtype=float)


def basis_dim(tree: SpecTree, d: int) -> int:
    """Output dimension p of the mean basis for input dimension d."""
    if tree.node == "mZero":
        return 0
    if tree.node == "mConst":
        return 1
    if tree.node == "mLinear":
        return d + 1
    raise AssertionError(f"not a mean basis: {tree.node}")


def mean_basis(tree: SpecTree, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if tree.node == "mZero":
        return np.zeros(0)
    if tree.node == "mConst":
        return np.ones(1)
    if tree.node == "mLinear":
        return np.concatenate(([1.0], x))
    raise AssertionError(f"not a mean basis: {tree.node}")


def basis_matrix(tree: SpecTree, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if tree.node == "mZero":
        return np.zeros((n, 0))
    if tree.node == "mConst":
        return np.ones((n, 1))
    if tree.node == "mLinear":
        return np.hstack([np.ones((n, 1)), X])
    raise AssertionError(f"not a mean basis: {tree.node}")


def hyperprior_logpdf(params, theta) -> float:
    """Log density of independent log-normal priors over kernel parameters.

    Prior j has median ``kernel_hp_mean[j]`` and log-space standard deviation
    ``kernel_hp_std[j]``.
    """
    theta = np.asarray(theta, dtype=float)
    mean = np.asarray(params.kernel_hp_mean, dtype=float)
    std = np.asarray(params.kernel_hp_std, dtype=float)
    if theta.shape != mean.shape or theta.shape != std.shape:
        raise LengthMismatchError(
            f"theta has length {len(theta)}, hyperprior has length {len(mean)}"
        )
    if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
        return -math.inf
    z = (np.log(theta) - np.log(mean)) / std
    return float(
        np.sum(-np.log(theta * std * math.sqrt(2.0 * math.pi)) - 0.5 * z * z)
    )
