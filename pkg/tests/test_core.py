import numpy as np
import pytest

from sfaforce.core import (
    RankDeficientError,
    SingularTransformError,
    check_stiffness,
    invert_transform,
    solve_least_squares,
)
from sfaforce.kinematics import build_wrench_transform, default_see_geometry


class TestSolveLeastSquares:
    def test_identity_system(self):
        x = solve_least_squares(np.eye(3), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(x, [1.0, 2.0, 3.0], rtol=0, atol=1e-14)

    def test_consistent_system_reproduces_generator(self):
        # b constructed exactly from a known solution: the solve must invert
        # the construction to 1e-9 relative error.
        rng = np.random.default_rng(7)
        k_true = np.array([4.0, -2.5, 0.75])
        a = rng.uniform(0.0, 3.5, size=(10, 3))
        x = solve_least_squares(a, a @ k_true)
        np.testing.assert_allclose(x, k_true, rtol=1e-9)

    def test_noisy_overdetermined_monte_carlo(self):
        # With A ~ N(0,1) of size 100x3, (A^T A)^-1 ~ I/100, so each component
        # error is ~N(0, sigma^2/100); a 3-sigma bound should cover ~99.7% of
        # components across seeds.
        sigma = 0.01
        k_true = np.array([1.0, -0.5, 2.0])
        bound = 3.0 * sigma / np.sqrt(100.0)
        inside = 0
        total = 0
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            a = rng.standard_normal((100, 3))
            b = a @ k_true + sigma * rng.standard_normal(100)
            x = solve_least_squares(a, b)
            inside += int(np.count_nonzero(np.abs(x - k_true) <= bound))
            total += 3
        assert inside / total >= 0.99

    def test_rank_deficient_raises_with_rank(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with pytest.raises(RankDeficientError) as excinfo:
            solve_least_squares(a, [1.0, 2.0, 3.0])
        assert excinfo.value.numerical_rank == 1

    def test_underdetermined_rejected(self):
        with pytest.raises(ValueError):
            solve_least_squares(np.ones((2, 3)), [1.0, 2.0])

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((12, 3))
        b = rng.standard_normal(12)
        perm = rng.permutation(12)
        np.testing.assert_allclose(
            solve_least_squares(a, b), solve_least_squares(a[perm], b[perm]), rtol=1e-9
        )


class TestInvertTransform:
    def test_identity(self):
        np.testing.assert_allclose(invert_transform(np.eye(3)), np.eye(3), atol=1e-15)

    def test_scalar_matrix(self):
        np.testing.assert_allclose(invert_transform(2.0 * np.eye(3)), 0.5 * np.eye(3), atol=1e-15)

    def test_default_see_multiplies_back_to_identity(self):
        h = build_wrench_transform(default_see_geometry())
        np.testing.assert_allclose(h @ invert_transform(h), np.eye(3), atol=1e-12)

    def test_wide_transform_right_inverse(self):
        rng = np.random.default_rng(5)
        h = rng.standard_normal((3, 5))
        np.testing.assert_allclose(h @ invert_transform(h), np.eye(3), atol=1e-10)

    def test_singular_raises(self):
        h = np.ones((3, 3))
        with pytest.raises(SingularTransformError):
            invert_transform(h)

    def test_round_trip_force(self):
        rng = np.random.default_rng(11)
        h = np.eye(3) + 0.2 * rng.standard_normal((3, 3))
        f = rng.standard_normal(3)
        np.testing.assert_allclose(invert_transform(h) @ (h @ f), f, rtol=0, atol=1e-9)


class TestCheckStiffness:
    def test_nonpositive_diagonal_rejected(self):
        with pytest.raises(ValueError):
            check_stiffness([[0.0]])

    def test_non_dominant_warns(self):
        with pytest.warns(UserWarning):
            check_stiffness([[1.0, 2.0], [0.1, 1.0]])

    def test_dominant_passes_silently(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            check_stiffness([[43.31, 1.94], [0.94, 48.64]])
