"""Semiparametric surrogate models: basis mean plus a stationary process.

The model is y = Phi w + e with e ~ process(0, sigma_s^2 (K(theta) +
noise I)).  Two weight/variance treatments are provided:

``sGaussianProcess``
    Vague prior on w (generalized least squares) with the signal variance
    profiled out; Student-t predictive with n - p degrees of freedom.

``sStudentTProcessNIG``
    Conjugate normal-inverse-gamma prior: w ~ N(w0, sigma_s^2 W0) with W0 =
    mean_w_scale * I, sigma_s^2 ~ IG(prior_alpha, prior_beta); Student-t
    predictive with 2 alpha_n degrees of freedom and closed-form evidence.

Fitting factors R = K + noise I once; everything independent of the query
point is precomputed so ``predict`` performs a single triangular solve.
States are immutable; ``update`` extends the factor by one bordered row in
O(n^2) and reuses the same posterior algebra as ``fit``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg.blas import dtrsv
from scipy.special import gammaln

from . import linalg
from .config import Params, SpecTree, _cached_parse
from .dists import draw_standard_t
from .errors import (
    DegenerateBasisError,
    DimensionMismatchError,
    NotPositiveDefiniteError,
)
from .kernels import (
    basis_matrix,
    cross_kernel,
    hyperprior_logpdf,
    kernel_eval,
    kernel_on_distance,
    gram_matrix,
    mean_basis,
)

__all__ = [
    "Dataset",
    "Predictive",
    "PosteriorState",
    "fit",
    "update",
    "predict",
    "score",
    "sample_predictive",
]

_JITTER_START = 1e-10
_JITTER_MAX = 1e-4


@dataclass(frozen=True)
class Dataset:
    """Observed inputs (n x d) and responses (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def append(self, x, y: float) -> "Dataset":
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return Dataset(np.vstack([self.X, x]), np.append(self.y, float(y)))


@dataclass(frozen=True)
class Predictive:
    """Pointwise posterior of the latent function value."""

    mean: float
    scale: float
    dof: float


@dataclass(frozen=True)
class PosteriorState:
    """Fitted surrogate with all query-independent terms precomputed."""

    surr: SpecTree
    kernel: SpecTree
    mean: SpecTree
    params: Params
    hp: np.ndarray
    X: np.ndarray
    y: np.ndarray
    factor: linalg.CholFactor
    L: np.ndarray  # contiguous copy of factor.L for fast solves
    kfunc: Callable  # kernel as a function of distance, theta bound
    k_diag: float  # kernel_eval(x, x), constant for stationary kernels
    Phi: np.ndarray
    PhiTRinv: np.ndarray
    w_n: np.ndarray
    resid_alpha: np.ndarray
    basis_factor: np.ndarray | None  # chol of the p x p precision in scale
    alpha_n: float
    beta_n: float
    sig2: float  # predictive variance multiplier
    dof: float
    log_evidence: float
    jitter: float

    @property
    def n(self) -> int:
        return self.X.shape[0]


def _solve_lower(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    # L is C-contiguous; L.T is then Fortran-ordered upper, and trans=1
    # solves (L.T).T z = L z = b without copying.
    return dtrsv(L.T, b, lower=0, trans=1)


def _chol_with_jitter(K: np.ndarray, noise: float):
    """Factor K + noise I, escalating diagonal jitter on failure."""
    n = K.shape[0]
    R = K + noise * np.eye(n)
    try:
        return linalg.cholesky(R), 0.0
    except NotPositiveDefiniteError:
        pass
    jitter = _JITTER_START
    while jitter <= _JITTER_MAX:
        try:
            return linalg.cholesky(R + jitter * np.eye(n)), jitter
        except NotPositiveDefiniteError:
            jitter *= 10.0
    raise NotPositiveDefiniteError(
        f"kernel matrix not positive definite after jitter up to {_JITTER_MAX}"
    )


def fit(surr: SpecTree, data: Dataset, hp, params: Params) -> PosteriorState:
    """Fit the surrogate, factoring the kernel matrix from scratch."""
    hp = np.asarray(hp, dtype=float)
    kernel = _cached_parse(params.kernel_name)
    mean = _cached_parse(params.mean_name)
    K = gram_matrix(kernel, hp, data.X)
    factor, jitter = _chol_with_jitter(K, params.noise)
    return _posterior_from_factor(surr, kernel, mean, data, hp, params, factor, jitter)


def update(state: PosteriorState, x_new, y_new: float) -> PosteriorState:
    """Incorporate one observation via an O(n^2) bordered-row append.

    Kernel parameters must be unchanged since the fit; the result matches a
    full refit on the augmented dataset up to round-off.
    """
    x_new = np.asarray(x_new, dtype=float)
    if x_new.shape[0] != state.X.shape[1]:
        raise DimensionMismatchError(
            f"new point has dim {x_new.shape[0]}, data has dim {state.X.shape[1]}"
        )
    data = Dataset(state.X, state.y).append(x_new, y_new)
    cross = cross_kernel(state.kernel, state.hp, state.X, x_new)
    corner = state.k_diag + state.params.noise + state.jitter
    try:
        factor = linalg.chol_append(state.factor, cross, corner)
    except NotPositiveDefiniteError:
        # ill-conditioned append (e.g. duplicate point at tiny noise):
        # fall back to a fresh factorization with escalated jitter
        return fit(state.surr, data, state.hp, state.params)
    return _posterior_from_factor(
        state.surr, state.kernel, state.mean, data, state.hp, state.params,
        factor, state.jitter,
    )


def _posterior_from_factor(
    surr, kernel, mean, data, hp, params, factor, jitter
) -> PosteriorState:
    """Posterior algebra shared by fit and update; costs O(p n^2)."""
    n = data.n
    y = data.y
    Phi = basis_matrix(mean, data.X)
    p = Phi.shape[1]

    u = linalg.chol_solve(factor, y)  # R^-1 y
    yRy = float(y @ u)
    if p:
        A = np.column_stack(
            [linalg.chol_solve(factor, Phi[:, j]) for j in range(p)]
        )  # R^-1 Phi
        PhiTRinv = np.ascontiguousarray(A.T)
        M = Phi.T @ A
        M = 0.5 * (M + M.T)
        b = A.T @ y
    else:
        PhiTRinv = np.zeros((0, n))
        M = np.zeros((0, 0))
        b = np.zeros(0)

    log_det_R = linalg.log_det(factor)
    kind = surr.node

    if kind == "sGaussianProcess":
        if p:
            if n <= p:
                raise DegenerateBasisError(
                    f"sGaussianProcess needs n > p (n={n}, p={p})"
                )
            try:
                basis_factor = np.linalg.cholesky(M)
            except np.linalg.LinAlgError as exc:
                raise DegenerateBasisError(
                    "basis design matrix is rank deficient"
                ) from exc
            w_n = _chol_solve_dense(basis_factor, b)
            resid_alpha = u - A @ w_n
        else:
            basis_factor = None
            w_n = np.zeros(0)
            resid_alpha = u
        rss = float((y - Phi @ w_n) @ resid_alpha)
        rss = max(rss, 1e-300)
        dof = float(n - p)
        sig2 = rss / dof
        sig2_ml = rss / n
        log_evidence = -0.5 * n * math.log(2.0 * math.pi * sig2_ml) \
            - 0.5 * log_det_R - 0.5 * n
        alpha_n = beta_n = math.nan
    elif kind == "sStudentTProcessNIG":
        alpha0 = params.prior_alpha
        beta0 = params.prior_beta
        if p:
            w0 = _broadcast_w0(params.mean_w0, p)
            w0_prec = 1.0 / params.mean_w_scale
            Wn_inv = M + w0_prec * np.eye(p)
            try:
                basis_factor = np.linalg.cholesky(Wn_inv)
            except np.linalg.LinAlgError as exc:
                raise DegenerateBasisError(
                    "posterior weight precision is not positive definite"
                ) from exc
            rhs = w0_prec * w0 + b
            w_n = _chol_solve_dense(basis_factor, rhs)
            quad = yRy + w0_prec * float(w0 @ w0) - float(w_n @ rhs)
            log_det_W0 = p * math.log(params.mean_w_scale)
            log_det_Wn_inv = float(2.0 * np.sum(np.log(np.diagonal(basis_factor))))
            resid_alpha = u - A @ w_n
        else:
            basis_factor = None
            w_n = np.zeros(0)
            quad = yRy
            log_det_W0 = 0.0
            log_det_Wn_inv = 0.0
            resid_alpha = u
        alpha_n = alpha0 + 0.5 * n
        beta_n = beta0 + 0.5 * quad
        if beta_n <= 0.0:
            raise NotPositiveDefiniteError(
                f"posterior scale collapsed (beta_n={beta_n:g})"
            )
        dof = 2.0 * alpha_n
        sig2 = beta_n / alpha_n
        log_evidence = (
            -0.5 * n * math.log(2.0 * math.pi)
            - 0.5 * log_det_R
            - 0.5 * log_det_W0
            - 0.5 * log_det_Wn_inv
            + alpha0 * math.log(beta0)
            - alpha_n * math.log(beta_n)
            + float(gammaln(alpha_n) - gammaln(alpha0))
        )
    else:
        raise ValueError(f"unknown surrogate {kind!r}")

    kfunc = kernel_on_distance(kernel, hp)
    k_diag = kernel_eval(kernel, hp, data.X[0], data.X[0])
    return PosteriorState(
        surr=surr, kernel=kernel, mean=mean, params=params, hp=hp,
        X=data.X, y=y, factor=factor, L=np.ascontiguousarray(factor.L),
        kfunc=kfunc, k_diag=k_diag, Phi=Phi, PhiTRinv=PhiTRinv, w_n=w_n,
        resid_alpha=resid_alpha, basis_factor=basis_factor,
        alpha_n=alpha_n, beta_n=beta_n, sig2=sig2, dof=dof,
        log_evidence=log_evidence, jitter=jitter,
    )


def _broadcast_w0(w0: tuple, p: int) -> np.ndarray:
    w0 = np.asarray(w0, dtype=float)
    if w0.shape == (p,):
        return w0
    if w0.shape == (1,):
        return np.full(p, w0[0])
    raise DimensionMismatchError(
        f"mean_w0 has length {len(w0)}, basis has dimension {p}"
    )


def _chol_solve_dense(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    z = dtrsv(L.T, b, lower=0, trans=1)
    return dtrsv(L.T, z, lower=0, trans=0)


def predict(state: PosteriorState, xq) -> Predictive:
    """Posterior mean/scale/dof at a query point; one triangular solve."""
    xq = np.asarray(xq, dtype=float)
    if xq.shape != (state.X.shape[1],):
        raise DimensionMismatchError(
            f"query has shape {xq.shape}, expected ({state.X.shape[1]},)"
        )
    diff = state.X - xq
    r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    kstar = np.asarray(state.kfunc(r), dtype=float)
    phi = mean_basis(state.mean, xq)

    mu = float(phi @ state.w_n) + float(kstar @ state.resid_alpha)
    z = _solve_lower(state.L, kstar)
    var_latent = state.k_diag - float(z @ z)
    if state.basis_factor is not None:
        h = phi - state.PhiTRinv @ kstar
        t = dtrsv(state.basis_factor.T, h, lower=0, trans=1)
        var_latent += float(t @ t)
    scale = math.sqrt(state.sig2 * max(var_latent, 0.0))
    return Predictive(mean=mu, scale=scale, dof=state.dof)


def score(surr: SpecTree, data: Dataset | None, hp, params: Params) -> float:
    """Model-selection score for the kernel parameters.

    SC_ML is the log marginal evidence; SC_MAP adds the hyperprior term.
    Returns -inf when the kernel matrix cannot be factored, so searches can
    continue past bad candidates.  With no data the evidence term is zero.
    """
    prior = hyperprior_logpdf(params, hp) if params.sc_type == "SC_MAP" else 0.0
    if prior == -math.inf:
        return -math.inf
    if data is None or data.n == 0:
        return prior
    try:
        state = fit(surr, data, hp, params)
    except NotPositiveDefiniteError:
        return -math.inf
    return state.log_evidence + prior


def sample_predictive(state: PosteriorState, xq, rng: np.random.Generator) -> float:
    """One draw from the pointwise predictive distribution."""
    pred = predict(state, xq)
    if pred.scale == 0.0:
        return pred.mean
    return pred.mean + pred.scale * draw_standard_t(rng, pred.dof)
