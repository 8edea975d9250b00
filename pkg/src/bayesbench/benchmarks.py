"""Benchmark targets and the optimization-gap metric.

All three functions are the standard literature forms; ``f_star`` values
are pinned to high precision and verified by grid+refinement oracles in the
test suite.  Inputs may be single points or arrays of points (last axis is
the coordinate axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .inneropt import Box

__all__ = [
    "Benchmark",
    "branin",
    "camelback",
    "hartmann6",
    "gap",
    "BENCHMARKS",
    "get_benchmark",
]


@dataclass(frozen=True)
class Benchmark:
    name: str
    box: Box
    f_star: float
    evaluate: Callable
    minimizers: tuple[tuple[float, ...], ...]

    @property
    def dim(self) -> int:
        return self.box.dim


def branin(x):
    """Branin on [-5, 10] x [0, 15]; three global minima of value 5/(4 pi)."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    t = 1.0 / (8.0 * math.pi)
    out = (x2 - b * x1**2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0
    return float(out) if out.ndim == 0 else out


def camelback(x):
    """Six-hump camel on [-3, 3] x [-2, 2]; two global minima."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    out = (
        (4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2
        + x1 * x2
        + (-4.0 + 4.0 * x2**2) * x2**2
    )
    return float(out) if out.ndim == 0 else out


_H6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_H6_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
        [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
        [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
        [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
    ]
)


def hartmann6(x):
    """Hartmann-6 on the unit cube; single global minimum near -3.32237."""
    x = np.asarray(x, dtype=float)
    inner = np.sum(_H6_A * (x[..., None, :] - _H6_P) ** 2, axis=-1)
    out = -np.sum(_H6_ALPHA * np.exp(-inner), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def gap(y_best: float, bench: Benchmark) -> float:
    """Optimization gap: best observed value above the global minimum."""
    return max(float(y_best) - bench.f_star, 0.0)


BENCHMARKS: dict[str, Benchmark] = {
    "branin": Benchmark(
        name="branin",
        box=Box(np.array([-5.0, 0.0]), np.array([10.0, 15.0])),
        f_star=0.39788735772973816,  # 5 / (4 pi)
        evaluate=branin,
        minimizers=(
            (math.pi, 2.275),
            (-math.pi, 12.275),
            (9.42478, 2.475),
        ),
    ),
    "camelback": Benchmark(
        name="camelback",
        box=Box(np.array([-3.0, -2.0]), np.array([3.0, 2.0])),
        f_star=-1.0316284534898774,
        evaluate=camelback,
        minimizers=(
            (0.08984201, -0.7126564),
            (-0.08984201, 0.7126564),
        ),
    ),
    "hartmann6": Benchmark(
        name="hartmann6",
        box=Box(np.zeros(6), np.ones(6)),
        f_star=-3.3223680114155156,
        evaluate=hartmann6,
        minimizers=(
            (0.20168951, 0.15001069, 0.47687397, 0.27533243, 0.31165162, 0.65730053),
        ),
    ),
}


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}"
        ) from None
