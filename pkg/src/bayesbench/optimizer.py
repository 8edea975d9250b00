"""The main optimization loop: initial design, posterior updates, proposals.

Internally the domain is normalized to the unit cube; user coordinates
appear only at the evaluation boundary and in history records.  The loop is
exposed two ways:

* ``run()`` / ``step()`` evaluate the target callable directly;
* ``propose()`` / ``tell(x, y)`` decompose a step for callers that evaluate
  externally (the ask/tell protocol used by the serve endpoint/bindings).

Both paths share the same code, so ask/tell sessions reproduce ``run()``
bit for bit under equal seeds.  A target that raises leaves the optimizer
steppable: the pending proposal survives and no state is mutated.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import Params, validate_params, _cached_parse
from .criteria import (
    crit_eval,
    epsilon_override,
    hedge_select,
    hedge_update,
    make_hedge_state,
)
from .errors import (
    DimensionMismatchError,
    InitDesignInfeasibleError,
    OutOfOrderError,
)
from .initdesign import lhs, sobol
from .inneropt import Box, InnerBudget, maximize
from .kernels import basis_dim
from .learning import ThetaPosterior, learn_mcmc, learn_point, relearn_due, theta_search_box
from .surrogate import Dataset, fit, predict, update

__all__ = ["Problem", "HistoryRecord", "OptResult", "Optimizer"]

logger = logging.getLogger("bayesbench")

_DUPLICATE_TOL = 1e-8  # normalized max-norm distance treated as a duplicate
_PERTURB_HALF_WIDTH = 5e-4  # half of the 1e-3 perturbation cube


@dataclass
class Problem:
    """Target description: box-bounded minimization with optional feasibility."""

    dim: int
    box: Box
    evaluate: Callable[[np.ndarray], float]
    reachable: Callable[[np.ndarray], bool] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.box.dim != self.dim:
            raise DimensionMismatchError(
                f"box has dim {self.box.dim}, problem has dim {self.dim}"
            )


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int  # 0 for initial-design evaluations
    eval_index: int  # 1-based position in the evaluation sequence
    x: tuple[float, ...]
    y: float
    y_best: float
    criterion: str  # "init", "epsilon" or the chosen criterion leaf
    theta: tuple[tuple[float, ...], ...]
    elapsed_s: float


@dataclass(frozen=True)
class OptResult:
    x_best: tuple[float, ...]
    y_best: float
    history: tuple[HistoryRecord, ...]
    n_evals: int


@dataclass
class _Pending:
    x_unit: np.ndarray
    x_user: np.ndarray
    label: str
    iteration: int
    nominees: list[np.ndarray] | None = None  # unit coords, hedge arms


class Optimizer:
    """Sequential model-based minimizer over a box-bounded domain.

    One instance is single-owner: distinct instances share no mutable state
    and may run concurrently.  ``clock`` is injectable so experiments can
    record deterministic timings.
    """

    def __init__(
        self,
        problem: Problem,
        params: Params,
        clock: Callable[[], float] | None = None,
    ):
        self.problem = problem
        self.params = validate_params(params)
        self._surr = _cached_parse(params.surr_name)
        self._crit = _cached_parse(params.crit_name)
        self._kernel = _cached_parse(params.kernel_name)
        self._mean = _cached_parse(params.mean_name)
        p = basis_dim(self._mean, problem.dim)
        if p and len(params.mean_w0) not in (1, p):
            raise DimensionMismatchError(
                f"mean_w0 has length {len(params.mean_w0)}, basis dimension is {p}"
            )
        self._rng = np.random.default_rng(params.random_seed)
        self._clock = clock if clock is not None else time.perf_counter
        self._t0 = self._clock()
        self._unit_box = Box.unit(problem.dim)
        self._budget = InnerBudget(
            params.n_inner_global_evals, params.n_inner_local_evals
        )
        self._hedge = None
        if self._crit.node == "cHedge":
            self._hedge = make_hedge_state(
                len(self._crit.children), params.hedge_eta, self._rng
            )
        self._dataset: Dataset | None = None
        self._states: list = []
        self._theta = ThetaPosterior(
            (np.asarray(params.kernel_hp_mean, dtype=float),)
        )
        self._y_offset = 0.0
        self._iteration = 0
        self._init_queue: list[np.ndarray] = []
        self._pending: _Pending | None = None
        self._history: list[HistoryRecord] = []
        self._best: tuple[tuple[float, ...], float] | None = None
        self.full_refits = 0

    # -- public surface ----------------------------------------------------

    @property
    def initialized(self) -> bool:
        return bool(self._states)

    @property
    def history(self) -> list[HistoryRecord]:
        return list(self._history)

    @property
    def n_evals(self) -> int:
        return self._dataset.n if self._dataset is not None else 0

    @property
    def n_evals_total(self) -> int:
        return self.params.n_init_samples + self.params.n_iterations

    @property
    def done(self) -> bool:
        return self.n_evals >= self.n_evals_total

    def propose(self) -> np.ndarray:
        """Next point to evaluate; must be answered with ``tell``."""
        if self._pending is not None:
            raise OutOfOrderError("propose() called while a proposal is pending")
        self._pending = self._next_pending()
        return self._pending.x_user.copy()

    def tell(self, x, y: float) -> HistoryRecord:
        """Report the observed value for the pending proposal."""
        if self._pending is None:
            raise OutOfOrderError("tell() without a pending proposal")
        x = np.asarray(x, dtype=float)
        pending = self._pending
        if x.shape != pending.x_user.shape or not np.allclose(
            x, pending.x_user, rtol=0.0, atol=1e-12
        ):
            raise OutOfOrderError("tell() coordinates do not match the proposal")
        y = float(y)
        if not math.isfinite(y):
            raise ValueError(f"objective value must be finite, got {y}")
        record = self._absorb(pending, y)
        self._pending = None
        return record

    def step(self) -> HistoryRecord:
        """Propose (or resume a pending proposal), evaluate, and tell."""
        if self._pending is None:
            self.propose()
        x_user = self._pending.x_user.copy()
        y = self.problem.evaluate(x_user)
        return self.tell(x_user, y)

    def initialize(self) -> None:
        """Evaluate the full initial design and fit the first posterior."""
        if self.initialized:
            raise OutOfOrderError("optimizer is already initialized")
        while not self.initialized:
            self.step()

    def run(self) -> OptResult:
        """Run to the evaluation budget and return the best point found."""
        while self.n_evals < self.n_evals_total:
            self.step()
        return self.result()

    def result(self) -> OptResult:
        if self._best is None:
            raise OutOfOrderError("no evaluations recorded yet")
        return OptResult(
            x_best=self._best[0],
            y_best=self._best[1],
            history=tuple(self._history),
            n_evals=self.n_evals,
        )

    # -- proposal machinery -------------------------------------------------

    def _next_pending(self) -> _Pending:
        if not self.initialized:
            if not self._init_queue:
                self._init_queue = self._initial_design()
            x_unit = self._init_queue.pop(0)
            return _Pending(x_unit, self._to_user(x_unit), "init", 0)

        if self.done:
            raise OutOfOrderError("evaluation budget exhausted")

        iteration = self._iteration + 1
        if relearn_due(iteration, self.params):
            self._learn_and_fit()
            self.full_refits += 1
            logger.debug("iteration %d: relearned hyperparameters", iteration)

        iter_rng = np.random.default_rng(int(self._rng.integers(0, 2**63)))
        if epsilon_override(self.params, self._rng):
            x_unit = self._random_reachable()
            return _Pending(x_unit, self._to_user(x_unit), "epsilon", iteration)

        y_best_c = float(self._dataset.y.min()) - self._y_offset
        if self._hedge is not None:
            nominees = []
            for child in self._crit.children:
                x_k, _ = maximize(
                    self._masked_crit(child, y_best_c, iter_rng),
                    self._unit_box,
                    self._budget,
                )
                nominees.append(self._dedupe(x_k))
            k = hedge_select(self._hedge)
            x_unit = nominees[k]
            label = self._crit.children[k].node
            return _Pending(
                x_unit, self._to_user(x_unit), label, iteration, nominees=nominees
            )

        x_unit, _ = maximize(
            self._masked_crit(self._crit, y_best_c, iter_rng),
            self._unit_box,
            self._budget,
        )
        x_unit = self._dedupe(x_unit)
        return _Pending(x_unit, self._to_user(x_unit), self._crit.node, iteration)

    def _masked_crit(self, leaf, y_best_c: float, iter_rng) -> Callable:
        reachable = self.problem.reachable

        def objective(u: np.ndarray) -> float:
            if reachable is not None and not reachable(self._to_user(u)):
                return -math.inf
            return crit_eval(
                leaf, self._states, u, y_best_c, self.params, iter_rng
            )

        return objective

    def _absorb(self, pending: _Pending, y: float) -> HistoryRecord:
        # do all fallible work on locals, then commit, so a numerical
        # failure cannot leave dataset and posterior out of sync
        if not self.initialized:
            dataset = (
                Dataset(pending.x_unit.reshape(1, -1), [y])
                if self._dataset is None
                else self._dataset.append(pending.x_unit, y)
            )
            if dataset.n == self.params.n_init_samples:
                self._learn_and_fit(dataset)
            self._dataset = dataset
        else:
            dataset = self._dataset.append(pending.x_unit, y)
            y_c = y - self._y_offset
            states = [update(s, pending.x_unit, y_c) for s in self._states]
            self._dataset = dataset
            self._states = states
            if self._hedge is not None and pending.nominees is not None:
                rewards = [
                    -self._mean_prediction(x_k) for x_k in pending.nominees
                ]
                hedge_update(self._hedge, rewards)
            self._iteration = pending.iteration

        x_user_t = tuple(float(v) for v in pending.x_user)
        if self._best is None or y < self._best[1]:
            self._best = (x_user_t, y)
        record = HistoryRecord(
            iteration=pending.iteration,
            eval_index=self._dataset.n,
            x=x_user_t,
            y=y,
            y_best=self._best[1],
            criterion=pending.label,
            theta=tuple(tuple(map(float, p)) for p in self._theta.particles),
            elapsed_s=self._clock() - self._t0,
        )
        self._history.append(record)
        return record

    def _mean_prediction(self, x_unit: np.ndarray) -> float:
        total = 0.0
        for state in self._states:
            total += predict(state, x_unit).mean
        return total / len(self._states)

    # -- learning and design ------------------------------------------------

    def _learn_and_fit(self, dataset: Dataset | None = None) -> None:
        params = self.params
        dataset = self._dataset if dataset is None else dataset
        offset = float(dataset.y.mean()) if self._mean.node == "mZero" else 0.0
        data_c = Dataset(dataset.X, dataset.y - offset)
        theta = self._theta
        if data_c.n >= 2:
            if params.l_type == "MCMC":
                theta = learn_mcmc(self._surr, data_c, params, self._rng)
            else:
                bounds = theta_search_box(params, len(params.kernel_hp_mean))
                theta = learn_point(self._surr, data_c, params, bounds)
        states = [fit(self._surr, data_c, hp, params) for hp in theta.particles]
        self._y_offset = offset
        self._theta = theta
        self._states = states

    def _initial_design(self) -> list[np.ndarray]:
        n, d = self.params.n_init_samples, self.problem.dim
        method = self.params.init_method
        if method == "LHS":
            points = lhs(n, d, self._rng)
        elif method == "SOBOL":
            points = sobol(n, d)
        else:
            points = self._rng.random((n, d))
        reachable = self.problem.reachable
        if reachable is None:
            return [points[i] for i in range(n)]
        out = []
        attempts = 0
        for i in range(n):
            x = points[i]
            while not reachable(self._to_user(x)):
                attempts += 1
                if attempts > 100 * n:
                    raise InitDesignInfeasibleError(
                        f"could not find {n} reachable initial points "
                        f"in {100 * n} attempts"
                    )
                x = self._rng.random(d)
            out.append(x)
        return out

    def _random_reachable(self) -> np.ndarray:
        reachable = self.problem.reachable
        for _ in range(1000):
            x = self._rng.random(self.problem.dim)
            if reachable is None or reachable(self._to_user(x)):
                return x
        raise InitDesignInfeasibleError(
            "could not sample a reachable point in 1000 attempts"
        )

    def _dedupe(self, x_unit: np.ndarray) -> np.ndarray:
        """Nudge proposals that coincide with an existing point."""
        if self._dataset is None or self._dataset.n == 0:
            return x_unit
        reachable = self.problem.reachable

        def is_dup(u):
            return float(
                np.min(np.max(np.abs(self._dataset.X - u), axis=1))
            ) < _DUPLICATE_TOL

        if not is_dup(x_unit):
            return x_unit
        for _ in range(100):
            cand = np.clip(
                x_unit
                + self._rng.uniform(
                    -_PERTURB_HALF_WIDTH, _PERTURB_HALF_WIDTH, self.problem.dim
                ),
                0.0,
                1.0,
            )
            if is_dup(cand):
                continue
            if reachable is None or reachable(self._to_user(cand)):
                return cand
        return x_unit

    def _to_user(self, x_unit: np.ndarray) -> np.ndarray:
        return self.problem.box.from_unit(x_unit)
