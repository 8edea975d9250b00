"""Acquisition criteria over the posterior and the GP-Hedge portfolio.

Convention: the target is MINIMIZED while every criterion returns a value to
MAXIMIZE.  With multiple hyperparameter particles a criterion is the average
of its per-particle values.

The portfolio combinator ``cHedge`` is not pointwise evaluable: the
optimizer lets each sub-criterion nominate its own maximizer, samples one
nominee with probability proportional to exp(eta * gain), and rewards all
arms from the updated posterior.  Gains are recentred at zero after every
update so the softmax never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Params, SpecTree
from .dists import norm_cdf, norm_pdf, t_cdf, t_pdf
from .surrogate import PosteriorState, predict, sample_predictive

__all__ = [
    "crit_eval",
    "HedgeState",
    "make_hedge_state",
    "hedge_select",
    "hedge_update",
    "epsilon_override",
    "expected_improvement",
]

_SCALE_FLOOR = 1e-12  # below this the deterministic limit forms apply
_MIN_DOF = 1.0 + 1e-6  # Student-t EI needs dof > 1


def expected_improvement(mu: float, s: float, dof: float, y_best: float) -> float:
    """Closed-form EI of observing below y_best under a t/normal predictive."""
    if s < _SCALE_FLOOR:
        return max(y_best - mu, 0.0)
    z = (y_best - mu) / s
    if math.isinf(dof):
        return (y_best - mu) * float(norm_cdf(z)) + s * float(norm_pdf(z))
    nu = max(dof, _MIN_DOF)
    density = float(t_pdf(z, nu))
    return (y_best - mu) * float(t_cdf(z, nu)) + s * (nu + z * z) / (nu - 1.0) * density


def _leaf_value(
    node: str,
    state: PosteriorState,
    xq: np.ndarray,
    y_best: float,
    params: Params,
    rng: np.random.Generator,
) -> float:
    if node == "cThompsonSampling":
        return -sample_predictive(state, xq, rng)
    pred = predict(state, xq)
    mu, s, dof = pred.mean, pred.scale, pred.dof
    if node == "cEI":
        return expected_improvement(mu, s, dof, y_best)
    if node == "cLCB":
        return -(mu - params.lcb_kappa * s)
    if node == "cPOI":
        if s < _SCALE_FLOOR:
            return 1.0 if mu < y_best else 0.0
        z = (y_best - mu) / s
        if math.isinf(dof):
            return float(norm_cdf(z))
        return float(t_cdf(z, dof))
    raise ValueError(f"criterion {node!r} has no pointwise value")


def crit_eval(
    spec: SpecTree,
    states,
    xq,
    y_best: float,
    params: Params,
    rng: np.random.Generator,
) -> float:
    """Evaluate a leaf criterion at xq, averaged over posterior particles.

    ``cHedge`` trees are rejected: portfolio selection happens in the
    optimizer, which evaluates each arm separately.
    """
    if spec.children:
        raise ValueError(
            f"{spec.node} is a portfolio criterion; evaluate its children instead"
        )
    xq = np.asarray(xq, dtype=float)
    total = 0.0
    for state in states:
        total += _leaf_value(spec.node, state, xq, y_best, params, rng)
    return total / len(states)


@dataclass
class HedgeState:
    """Gains per portfolio arm; max(gains) == 0 after every update."""

    gains: np.ndarray
    eta: float
    rng: np.random.Generator


def make_hedge_state(n_arms: int, eta: float, rng: np.random.Generator) -> HedgeState:
    if n_arms < 2:
        raise ValueError("a portfolio needs at least two arms")
    return HedgeState(gains=np.zeros(n_arms), eta=eta, rng=rng)


def hedge_select(state: HedgeState) -> int:
    """Sample an arm with probability softmax(eta * gains)."""
    scaled = state.eta * (state.gains - state.gains.max())
    weights = np.exp(scaled)
    probs = weights / weights.sum()
    return int(state.rng.choice(len(probs), p=probs))


def hedge_update(state: HedgeState, rewards) -> HedgeState:
    """Accumulate per-arm rewards, then recenter gains at zero."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.shape != state.gains.shape:
        raise ValueError(
            f"got {rewards.shape[0]} rewards for {state.gains.shape[0]} arms"
        )
    if not np.all(np.isfinite(rewards)):
        raise ValueError("rewards must be finite")
    state.gains = state.gains + rewards
    state.gains -= state.gains.max()
    return state


def epsilon_override(params: Params, rng: np.random.Generator) -> bool:
    """True with probability epsilon: explore uniformly instead of optimizing."""
    if params.epsilon <= 0.0:
        return False
    return float(rng.random()) < params.epsilon
