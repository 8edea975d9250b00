"""Initial designs: stratification, Sobol reference values, discrepancy."""

import numpy as np
import pytest

from bayesbench.errors import UnsupportedDimensionError
from bayesbench.initdesign import lhs, scale, sobol
from bayesbench.inneropt import Box

# First 8 Sobol points (origin skipped), frozen from a reference
# direction-number implementation of the Joe-Kuo table.
SOBOL_D1 = [0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125, 0.1875]
SOBOL_D2 = [
    [0.5, 0.5],
    [0.75, 0.25],
    [0.25, 0.75],
    [0.375, 0.375],
    [0.875, 0.875],
    [0.625, 0.125],
    [0.125, 0.625],
    [0.1875, 0.3125],
]
SOBOL_D6_ROW8 = [0.1875, 0.3125, 0.9375, 0.4375, 0.5625, 0.3125]


def star_discrepancy_2d(points: np.ndarray) -> float:
    """Exact star discrepancy for small 2-D point sets.

    The maximum over anchored boxes [0, a) x [0, b) is attained with a and b
    at point coordinates (or 1), so scanning that grid is exact.
    """
    n = len(points)
    xs = np.unique(np.append(points[:, 0], 1.0))
    ys = np.unique(np.append(points[:, 1], 1.0))
    worst = 0.0
    for a in xs:
        for b in ys:
            volume = a * b
            strictly_inside = np.sum((points[:, 0] < a) & (points[:, 1] < b)) / n
            closed_inside = np.sum((points[:, 0] <= a) & (points[:, 1] <= b)) / n
            worst = max(worst, volume - strictly_inside, closed_inside - volume)
    return worst


class TestLhs:
    def test_single_point(self):
        point = lhs(1, 3, np.random.default_rng(0))
        assert point.shape == (1, 3)
        assert np.all((point >= 0.0) & (point < 1.0))

    def test_stratification(self):
        rng = np.random.default_rng(1)
        for n, d in ((10, 2), (7, 4), (25, 1)):
            points = lhs(n, d, rng)
            for j in range(d):
                strata = np.sort(np.floor(points[:, j] * n).astype(int))
                assert np.array_equal(strata, np.arange(n))

    def test_reproducible(self):
        a = lhs(12, 3, np.random.default_rng(42))
        b = lhs(12, 3, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_in_unit_cube(self):
        points = lhs(50, 5, np.random.default_rng(2))
        assert np.all((points >= 0.0) & (points <= 1.0))


class TestSobol:
    def test_first_three_points_1d(self):
        assert sobol(3, 1)[:, 0].tolist() == [0.5, 0.75, 0.25]

    def test_first_point_2d(self):
        assert sobol(1, 2)[0].tolist() == [0.5, 0.5]

    def test_reference_sequences(self):
        assert sobol(8, 1)[:, 0].tolist() == SOBOL_D1
        assert sobol(8, 2).tolist() == SOBOL_D2
        assert sobol(8, 6)[7].tolist() == SOBOL_D6_ROW8

    def test_direct_formula_oracle(self):
        # independent path: accumulate direction integers over gray-code bits
        # instead of the incremental recurrence
        from bayesbench.initdesign import _NBITS, _directions

        for d in (1, 2, 5, 13, 21):
            V = _directions(d)
            expected = np.empty((16, d))
            for i in range(1, 17):
                gray = i ^ (i >> 1)
                acc = np.zeros(d, dtype=np.uint64)
                for bit in range(gray.bit_length()):
                    if (gray >> bit) & 1:
                        acc ^= V[:, bit]
                expected[i - 1] = acc / float(1 << _NBITS)
            assert np.array_equal(sobol(16, d), expected)

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimensionError):
            sobol(4, 22)

    def test_deterministic(self):
        assert np.array_equal(sobol(64, 9), sobol(64, 9))

    def test_in_unit_cube(self):
        points = sobol(128, 7)
        assert np.all((points > 0.0) & (points < 1.0))

    def test_beats_uniform_star_discrepancy(self):
        sobol_disc = star_discrepancy_2d(sobol(64, 2))
        uniform_discs = [
            star_discrepancy_2d(np.random.default_rng(seed).random((64, 2)))
            for seed in range(20)
        ]
        assert sobol_disc < np.median(uniform_discs)


class TestScale:
    def test_unit_box_identity(self):
        points = np.array([[0.2, 0.8], [0.5, 0.1]])
        assert np.array_equal(scale(points, Box([0.0, 0.0], [1.0, 1.0])), points)

    def test_midpoint(self):
        scaled = scale(np.array([[0.5]]), Box([-5.0], [10.0]))
        assert scaled[0, 0] == pytest.approx(2.5)

    def test_corners_map_to_corners(self):
        box = Box([-2.0, 3.0], [4.0, 9.0])
        corners = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        scaled = scale(corners, box)
        assert np.allclose(scaled[0], [-2.0, 3.0])
        assert np.allclose(scaled[1], [4.0, 9.0])
        assert np.allclose(scaled[2], [-2.0, 9.0])
        assert np.allclose(scaled[3], [4.0, 3.0])
