"""Kernel-parameter learning: derivative-free point estimates and MCMC.

Point estimation (ML/MAP) maximizes the model score over a log-space box
with the global+local inner optimizer, avoiding likelihood derivatives.
MCMC runs a coordinate-wise slice sampler on log theta targeting the same
score (which includes the log-normal hyperprior when sc_type is SC_MAP).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import Params, SpecTree
from .inneropt import Box, InnerBudget, maximize
from .surrogate import Dataset, score

__all__ = [
    "ThetaPosterior",
    "theta_search_box",
    "learn_point",
    "learn_mcmc",
    "relearn_due",
    "slice_sample",
]

# score maximization gets a smaller budget than criterion maximization
_SCORE_BUDGET = InnerBudget(global_evals=500, local_evals=100)
_LOG_THETA_MIN = math.log(1e-4)
_LOG_THETA_MAX = math.log(1e4)
_SLICE_WIDTH = 1.0
_MAX_STEPOUT = 10
_MAX_SHRINK = 100


@dataclass(frozen=True)
class ThetaPosterior:
    """Equally weighted kernel-parameter particles (one for ML/MAP)."""

    particles: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.particles:
            raise ValueError("at least one particle required")
        converted = tuple(np.asarray(p, dtype=float) for p in self.particles)
        for p in converted:
            if np.any(p <= 0) or not np.all(np.isfinite(p)):
                raise ValueError("particles must be strictly positive and finite")
        object.__setattr__(self, "particles", converted)


def theta_search_box(params: Params, n_params: int) -> Box:
    """Prior-informed log-space box, clamped to [log 1e-4, log 1e4]."""
    mean = np.asarray(params.kernel_hp_mean, dtype=float)
    std = np.asarray(params.kernel_hp_std, dtype=float)
    lower = np.maximum(np.log(mean) - 3.0 * std, _LOG_THETA_MIN)
    upper = np.minimum(np.log(mean) + 3.0 * std, _LOG_THETA_MAX)
    # keep the box nonempty even with extreme prior settings
    upper = np.maximum(upper, lower + 1e-6)
    return Box(lower[:n_params], upper[:n_params])


def _score_on_log(surr: SpecTree, data: Dataset | None, params: Params) -> Callable:
    def objective(log_theta: np.ndarray) -> float:
        return score(surr, data, np.exp(log_theta), params)

    return objective


def learn_point(
    surr: SpecTree, data: Dataset, params: Params, bounds: Box
) -> ThetaPosterior:
    """MAP/ML point estimate of theta over the log-space box.

    The returned particle scores at least as high as every candidate the
    search evaluated, including the prior mean.  Falls back to the prior
    mean when everything scores -inf.
    """
    objective = _score_on_log(surr, data, params)
    log_mean = bounds.clamp(np.log(np.asarray(params.kernel_hp_mean, dtype=float)))
    v_mean = objective(log_mean)
    if v_mean == -math.inf:
        shift = 0.0
    else:
        shift = v_mean

    # Shift so the search sees values near zero: DIRECT's potentially-optimal
    # slack is relative to |best|, so this keeps the argmax invariant under
    # constant offsets of the score.
    def shifted(lt: np.ndarray) -> float:
        return objective(lt) - shift

    x_best, v_best = maximize(shifted, bounds, _SCORE_BUDGET)
    if v_best == -math.inf and v_mean == -math.inf:
        return ThetaPosterior((np.asarray(params.kernel_hp_mean, dtype=float),))
    if v_mean - shift > v_best:
        x_best = log_mean
    return ThetaPosterior((np.exp(x_best),))


def learn_mcmc(
    surr: SpecTree, data: Dataset | None, params: Params, rng: np.random.Generator
) -> ThetaPosterior:
    """Slice-sample mcmc_particles values of theta from the score posterior.

    Runs mcmc_burnin discarded sweeps from the prior mean, then keeps one
    particle per sweep.  Deterministic given the generator state.
    """
    n_params = len(params.kernel_hp_mean)
    bounds = theta_search_box(params, n_params)
    objective = _score_on_log(surr, data, params)

    def target(lt: np.ndarray) -> float:
        # density of log theta: the change of variables adds sum(log theta)
        if not bounds.contains(lt):
            return -math.inf
        value = objective(lt)
        if value == -math.inf:
            return value
        return value + float(np.sum(lt))

    x0 = bounds.clamp(np.log(np.asarray(params.kernel_hp_mean, dtype=float)))
    samples = slice_sample(
        target, x0, params.mcmc_particles, rng, burnin=params.mcmc_burnin
    )
    return ThetaPosterior(tuple(np.exp(s) for s in samples))


def slice_sample(
    logpdf: Callable[[np.ndarray], float],
    x0: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
    burnin: int = 0,
    width: float = _SLICE_WIDTH,
) -> list[np.ndarray]:
    """Coordinate-wise slice sampler with step-out and shrinkage.

    One sample per sweep over the coordinates.  If shrinkage fails to find
    an acceptable point within 100 iterations the coordinate keeps its
    current value (step-size collapse fallback).
    """
    x = np.asarray(x0, dtype=float).copy()
    fx = logpdf(x)
    if fx == -math.inf:
        raise ValueError("slice sampler needs a feasible starting point")
    samples: list[np.ndarray] = []
    for sweep in range(burnin + n_samples):
        for i in range(len(x)):
            fx = _slice_update(logpdf, x, i, fx, rng, width)
        if sweep >= burnin:
            samples.append(x.copy())
    return samples


def _slice_update(logpdf, x, i, fx, rng, width) -> float:
    y_slice = fx + math.log(1.0 - rng.random())  # log of U(0,1], never -inf
    u = rng.random()
    left = x[i] - width * u
    right = left + width

    def eval_at(v):
        old = x[i]
        x[i] = v
        out = logpdf(x)
        x[i] = old
        return out

    steps = 0
    f_left = eval_at(left)
    while f_left > y_slice and steps < _MAX_STEPOUT:
        left -= width
        f_left = eval_at(left)
        steps += 1
    steps = 0
    f_right = eval_at(right)
    while f_right > y_slice and steps < _MAX_STEPOUT:
        right += width
        f_right = eval_at(right)
        steps += 1

    for _ in range(_MAX_SHRINK):
        candidate = left + rng.random() * (right - left)
        f_cand = eval_at(candidate)
        if f_cand >= y_slice:
            x[i] = candidate
            return f_cand
        if candidate < x[i]:
            left = candidate
        else:
            right = candidate
    return fx  # collapse: keep the current coordinate


def relearn_due(iteration: int, params: Params) -> bool:
    """Kernel parameters are refreshed every learn_frequency iterations."""
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    return iteration % params.learn_frequency == 0
