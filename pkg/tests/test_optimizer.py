"""Optimizer loop: initialization, stepping, ask/tell, safety contracts."""

import math
from dataclasses import replace

import numpy as np
import pytest

from bayesbench import linalg
from bayesbench.config import default_params
from bayesbench.errors import (
    InitDesignInfeasibleError,
    OutOfOrderError,
    UnknownIdentifierError,
)
from bayesbench.inneropt import Box
from bayesbench.learning import relearn_due
from bayesbench.optimizer import Optimizer, Problem
from bayesbench.surrogate import Dataset, fit, predict


def quadratic_problem(dim=1):
    target = 0.3712
    return Problem(
        dim=dim,
        box=Box([-1.0] * dim, [2.0] * dim),
        evaluate=lambda x: float(np.sum((x - target) ** 2)),
    )


def fast_params(**overrides):
    base = dict(
        n_init_samples=4,
        n_iterations=8,
        n_inner_global_evals=120,
        n_inner_local_evals=40,
        random_seed=11,
        noise=1e-6,
    )
    base.update(overrides)
    return replace(default_params(), **base)


FIXED_CLOCK = lambda: 0.0


class TestCreate:
    def test_lazy_start(self):
        opt = Optimizer(quadratic_problem(2), fast_params())
        assert opt.n_evals == 0
        assert not opt.initialized

    def test_bad_criterion_fails_fast(self):
        with pytest.raises(UnknownIdentifierError):
            Optimizer(quadratic_problem(), replace(fast_params(), crit_name="cBogus"))

    def test_equal_seeds_equal_first_proposals(self):
        a = Optimizer(quadratic_problem(2), fast_params())
        b = Optimizer(quadratic_problem(2), fast_params())
        assert np.array_equal(a.propose(), b.propose())


class TestInitialize:
    def test_dataset_size(self):
        opt = Optimizer(quadratic_problem(2), fast_params(n_init_samples=5))
        opt.initialize()
        assert opt.n_evals == 5
        assert opt.initialized

    def test_always_false_reachable(self):
        problem = quadratic_problem(2)
        problem.reachable = lambda x: False
        opt = Optimizer(problem, fast_params())
        with pytest.raises(InitDesignInfeasibleError):
            opt.initialize()

    def test_history_bookkeeping(self):
        opt = Optimizer(quadratic_problem(2), fast_params(n_init_samples=5))
        opt.initialize()
        history = opt.history
        assert len(history) == 5
        assert all(rec.criterion == "init" for rec in history)
        assert all(rec.iteration == 0 for rec in history)
        assert [rec.eval_index for rec in history] == [1, 2, 3, 4, 5]

    def test_double_initialize_rejected(self):
        opt = Optimizer(quadratic_problem(), fast_params())
        opt.initialize()
        with pytest.raises(OutOfOrderError):
            opt.initialize()

    def test_sobol_init(self):
        opt = Optimizer(quadratic_problem(2), fast_params(init_method="SOBOL"))
        opt.initialize()
        # first Sobol point is the box midpoint
        assert np.allclose(opt.history[0].x, [0.5, 0.5])


class TestStep:
    def test_increments_dataset(self):
        opt = Optimizer(quadratic_problem(), fast_params())
        opt.initialize()
        before = opt.n_evals
        opt.step()
        assert opt.n_evals == before + 1

    def test_posterior_matches_full_refit(self):
        opt = Optimizer(quadratic_problem(2), fast_params(learn_frequency=1000))
        opt.initialize()
        for _ in range(3):
            opt.step()
        state = opt._states[0]
        data = Dataset(opt._dataset.X, opt._dataset.y - opt._y_offset)
        refit = fit(opt._surr, data, state.hp, opt.params)
        rng = np.random.default_rng(0)
        for _ in range(20):
            xq = rng.random(2)
            a, b = predict(state, xq), predict(refit, xq)
            assert a.mean == pytest.approx(b.mean, abs=1e-8)
            assert a.scale == pytest.approx(b.scale, abs=1e-8)

    def test_quadratic_converges(self):
        params = fast_params(
            n_init_samples=5,
            n_iterations=30,
            n_inner_global_evals=300,
            n_inner_local_evals=100,
        )
        result = Optimizer(quadratic_problem(), params).run()
        assert result.y_best <= 1e-3

    def test_step_past_budget_rejected(self):
        opt = Optimizer(quadratic_problem(), fast_params(n_iterations=1))
        opt.run()
        with pytest.raises(OutOfOrderError):
            opt.step()


class TestRun:
    def test_zero_iterations(self):
        params = fast_params(n_iterations=0, n_init_samples=6)
        result = Optimizer(quadratic_problem(2), params).run()
        assert result.n_evals == 6
        assert all(rec.criterion == "init" for rec in result.history)

    def test_eval_count_identity(self):
        params = fast_params(n_init_samples=3, n_iterations=7)
        result = Optimizer(quadratic_problem(), params).run()
        assert result.n_evals == 10
        assert len(result.history) == 10

    def test_bit_identical_reruns(self):
        params = fast_params()
        a = Optimizer(quadratic_problem(2), params, clock=FIXED_CLOCK).run()
        b = Optimizer(quadratic_problem(2), params, clock=FIXED_CLOCK).run()
        assert a == b

    def test_y_best_nonincreasing(self):
        result = Optimizer(quadratic_problem(2), fast_params()).run()
        bests = [rec.y_best for rec in result.history]
        assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))
        assert result.y_best == bests[-1]

    def test_best_appears_in_history(self):
        result = Optimizer(quadratic_problem(2), fast_params()).run()
        assert any(
            rec.x == result.x_best and rec.y == result.y_best
            for rec in result.history
        )


class TestInstrumentation:
    def test_full_refit_only_on_relearn_iterations(self):
        params = fast_params(n_iterations=12, learn_frequency=5)
        opt = Optimizer(quadratic_problem(2), params)
        opt.initialize()
        for iteration in range(1, 13):
            linalg.reset_counters()
            opt.step()
            full = linalg.counters()["cholesky"]
            if relearn_due(iteration, params):
                assert full > 0
            else:
                assert full == 0
        assert opt.full_refits == 2  # iterations 5 and 10

    def test_predict_allocates_no_factorizations(self):
        opt = Optimizer(quadratic_problem(2), fast_params())
        opt.initialize()
        state = opt._states[0]
        linalg.reset_counters()
        rng = np.random.default_rng(1)
        for _ in range(50):
            predict(state, rng.random(2))
        counts = linalg.counters()
        assert counts["cholesky"] == 0
        assert counts["chol_append"] == 0


class TestConstraints:
    def test_proposals_respect_box_and_reachability(self):
        problem = quadratic_problem(2)
        problem.reachable = lambda x: x[0] <= 1.2
        params = fast_params(n_iterations=6)
        result = Optimizer(problem, params).run()
        for rec in result.history:
            assert all(-1.0 <= v <= 2.0 for v in rec.x)
            assert rec.x[0] <= 1.2

    def test_epsilon_one_always_random(self):
        params = fast_params(epsilon=1.0, n_iterations=6)
        result = Optimizer(quadratic_problem(2), params).run()
        labels = [rec.criterion for rec in result.history[4:]]
        assert labels == ["epsilon"] * 6

    def test_duplicate_proposals_perturbed(self):
        # constant objective drives the criterion maximizer to the same spot;
        # the dedupe guard must keep points distinct
        problem = Problem(
            dim=1, box=Box([0.0], [1.0]), evaluate=lambda x: 1.0
        )
        params = fast_params(n_iterations=6, noise=1e-9)
        result = Optimizer(problem, params).run()
        xs = np.array([rec.x for rec in result.history])
        dists = np.abs(xs[:, None, 0] - xs[None, :, 0])
        np.fill_diagonal(dists, 1.0)
        assert dists.min() > 0.0


class TestExceptionSafety:
    def test_throwing_target_leaves_optimizer_steppable(self):
        problem = quadratic_problem(2)
        params = fast_params(n_iterations=5)
        opt = Optimizer(problem, params)
        opt.initialize()
        opt.step()
        n_before = opt.n_evals

        healthy = problem.evaluate

        def bomb(x):
            raise RuntimeError("sensor failure")

        problem.evaluate = bomb
        with pytest.raises(RuntimeError, match="sensor failure"):
            opt.step()
        assert opt.n_evals == n_before  # failed point not recorded

        problem.evaluate = healthy
        opt.step()
        assert opt.n_evals == n_before + 1


class TestAskTell:
    def test_matches_run_bitwise(self):
        problem = quadratic_problem(2)
        params = fast_params()
        direct = Optimizer(problem, params, clock=FIXED_CLOCK).run()

        session = Optimizer(problem, params, clock=FIXED_CLOCK)
        while session.n_evals < session.n_evals_total:
            x = session.propose()
            session.tell(x, problem.evaluate(x))
        assert session.result() == direct

    def test_tell_without_propose(self):
        opt = Optimizer(quadratic_problem(), fast_params())
        with pytest.raises(OutOfOrderError):
            opt.tell([0.5], 1.0)

    def test_double_tell(self):
        opt = Optimizer(quadratic_problem(), fast_params())
        x = opt.propose()
        opt.tell(x, 1.0)
        with pytest.raises(OutOfOrderError):
            opt.tell(x, 1.0)

    def test_double_propose(self):
        opt = Optimizer(quadratic_problem(), fast_params())
        opt.propose()
        with pytest.raises(OutOfOrderError):
            opt.propose()

    def test_tell_coordinate_mismatch(self):
        opt = Optimizer(quadratic_problem(), fast_params())
        x = opt.propose()
        with pytest.raises(OutOfOrderError):
            opt.tell(x + 0.5, 1.0)

    def test_tell_rejects_nonfinite(self):
        opt = Optimizer(quadratic_problem(), fast_params())
        x = opt.propose()
        with pytest.raises(ValueError):
            opt.tell(x, math.nan)

    def test_proposals_inside_bounds(self):
        opt = Optimizer(quadratic_problem(3), fast_params(n_iterations=4))
        while opt.n_evals < opt.n_evals_total:
            x = opt.propose()
            assert np.all(x >= -1.0) and np.all(x <= 2.0)
            opt.tell(x, float(np.sum(x**2)))


class TestConcurrency:
    def test_concurrent_instances_match_serial(self):
        import threading

        params = fast_params(n_iterations=5)
        serial = Optimizer(quadratic_problem(2), params, clock=FIXED_CLOCK).run()

        results = [None, None]

        def worker(slot):
            results[slot] = Optimizer(
                quadratic_problem(2), params, clock=FIXED_CLOCK
            ).run()

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results[0] == serial
        assert results[1] == serial


class TestHedge:
    def test_portfolio_labels_and_gains(self):
        params = fast_params(
            crit_name="cHedge(cEI,cLCB,cThompsonSampling)",
            n_iterations=6,
            n_inner_global_evals=60,
            n_inner_local_evals=20,
        )
        opt = Optimizer(quadratic_problem(2), params)
        result = opt.run()
        arm_labels = {"cEI", "cLCB", "cThompsonSampling"}
        for rec in result.history[4:]:
            assert rec.criterion in arm_labels
        assert opt._hedge.gains.max() == 0.0
        assert len(opt._hedge.gains) == 3

    def test_mcmc_particles_drive_steps(self):
        params = fast_params(
            l_type="MCMC",
            mcmc_particles=3,
            mcmc_burnin=5,
            learn_frequency=1,
            n_iterations=3,
            surr_name="sStudentTProcessNIG",
        )
        opt = Optimizer(quadratic_problem(), params)
        result = opt.run()
        assert len(opt._states) == 3
        assert len(result.history[-1].theta) == 3
