"""Density helpers against scipy.stats reference implementations."""

import math

import numpy as np
import pytest
from scipy import stats

from bayesbench.dists import draw_standard_t, norm_cdf, norm_pdf, t_cdf, t_pdf


@pytest.mark.parametrize("z", [-8.0, -2.5, -0.3, 0.0, 0.7, 3.1, 9.0])
def test_normal_matches_scipy(z):
    assert float(norm_pdf(z)) == pytest.approx(stats.norm.pdf(z), rel=1e-12)
    assert float(norm_cdf(z)) == pytest.approx(stats.norm.cdf(z), rel=1e-12)


@pytest.mark.parametrize("dof", [1.5, 3.0, 7.0, 30.0, 250.0])
@pytest.mark.parametrize("z", [-5.0, -1.2, 0.0, 0.4, 2.8])
def test_student_t_matches_scipy(dof, z):
    assert float(t_pdf(z, dof)) == pytest.approx(stats.t.pdf(z, dof), rel=1e-10)
    assert float(t_cdf(z, dof)) == pytest.approx(stats.t.cdf(z, dof), rel=1e-10)


def test_infinite_dof_reduces_to_normal():
    for z in (-2.0, 0.0, 1.3):
        assert float(t_pdf(z, math.inf)) == pytest.approx(stats.norm.pdf(z), rel=1e-12)
        assert float(t_cdf(z, math.inf)) == pytest.approx(stats.norm.cdf(z), rel=1e-12)


def test_draws_follow_t_distribution():
    rng = np.random.default_rng(0)
    dof = 5.0
    draws = np.array([draw_standard_t(rng, dof) for _ in range(20000)])
    ks = stats.kstest(draws, lambda q: stats.t.cdf(q, dof)).statistic
    assert ks <= 0.02
