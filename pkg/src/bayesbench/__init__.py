"""Bayesian optimization for expensive black-box minimization.

Composable surrogates, kernels and acquisition criteria; incremental
posterior updates; MAP/MCMC hyperparameter learning; and a benchmark
harness with a CLI (``bayesbench``).
"""

from .benchmarks import BENCHMARKS, Benchmark, branin, camelback, gap, get_benchmark, hartmann6
from .config import (
    Params,
    SpecTree,
    default_params,
    params_from_mapping,
    parse_expression,
    parse_params,
    render_expression,
)
from .criteria import crit_eval, epsilon_override, hedge_select, hedge_update
from .experiment import GapRow, run_experiment
from .inneropt import Box, InnerBudget, direct_maximize, maximize, simplex_refine
from .learning import ThetaPosterior, learn_mcmc, learn_point, relearn_due
from .optimizer import HistoryRecord, Optimizer, OptResult, Problem
from .surrogate import (
    Dataset,
    PosteriorState,
    Predictive,
    fit,
    predict,
    sample_predictive,
    score,
    update,
)

__version__ = "0.1.0"

__all__ = [
    "BENCHMARKS",
    "Benchmark",
    "Box",
    "Dataset",
    "GapRow",
    "HistoryRecord",
    "InnerBudget",
    "OptResult",
    "Optimizer",
    "Params",
    "PosteriorState",
    "Predictive",
    "Problem",
    "SpecTree",
    "ThetaPosterior",
    "branin",
    "camelback",
    "crit_eval",
    "default_params",
    "direct_maximize",
    "epsilon_override",
    "fit",
    "gap",
    "get_benchmark",
    "hartmann6",
    "hedge_select",
    "hedge_update",
    "learn_mcmc",
    "learn_point",
    "maximize",
    "params_from_mapping",
    "parse_expression",
    "parse_params",
    "predict",
    "relearn_due",
    "render_expression",
    "run_experiment",
    "sample_predictive",
    "score",
    "simplex_refine",
    "update",
]
