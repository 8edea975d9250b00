"""Standard normal / Student-t densities used by criteria and surrogates.

Built on scipy.special ufuncs rather than scipy.stats distribution objects:
these sit in the acquisition hot path where frozen-distribution overhead
dominates.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, ndtr, stdtr

__all__ = ["norm_pdf", "norm_cdf", "t_pdf", "t_cdf", "draw_standard_t"]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z - _LOG_SQRT_2PI)


def norm_cdf(z):
    return ndtr(z)


def t_pdf(z, dof: float):
    """Density of the standard Student-t; normal when dof is infinite."""
    if math.isinf(dof):
        return norm_pdf(z)
    z = np.asarray(z, dtype=float)
    log_norm = (
        gammaln((dof + 1.0) / 2.0)
        - gammaln(dof / 2.0)
        - 0.5 * math.log(dof * math.pi)
    )
    return np.exp(log_norm - 0.5 * (dof + 1.0) * np.log1p(z * z / dof))


def t_cdf(z, dof: float):
    if math.isinf(dof):
        return ndtr(z)
    return stdtr(dof, z)


def draw_standard_t(rng: np.random.Generator, dof: float) -> float:
    if math.isinf(dof):
        return float(rng.standard_normal())
    return float(rng.standard_t(dof))
