"""Scalarization and weight-distribution tests.

Checks the closed-form values and Lipschitz constants of the linear and
Chebyshev scalarizations, their monotonicity (the property that makes
scalarized maximizers Pareto-optimal), and the simplex constraints of
both weight distributions.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtbandit.scalarize import (
    ChebyshevScalarization,
    InverseWeightedWeights,
    LinearScalarization,
    UniformSimplexWeights,
)

_vec = lambda n: st.lists(st.floats(-5, 5), min_size=n, max_size=n).map(np.array)


class TestLinearScalarization:
    def test_value(self):
        s = LinearScalarization()
        lam, y = np.array([0.25, 0.75]), np.array([2.0, -1.0])
        assert s.value(lam, y) == pytest.approx(0.25 * 2.0 - 0.75, abs=1e-15)

    def test_value_batch_matches_value(self):
        rng = np.random.default_rng(0)
        s = LinearScalarization()
        lam = np.array([0.3, 0.2, 0.5])
        Y = rng.normal(size=(10, 3))
        batch = s.value_batch(lam, Y)
        for i in range(10):
            assert batch[i] == pytest.approx(s.value(lam, Y[i]), abs=1e-14)

    def test_lipschitz_is_weight_norm(self):
        lam = np.array([0.6, 0.8]) / 1.4
        assert LinearScalarization().lipschitz(lam) == pytest.approx(
            np.linalg.norm(lam), abs=1e-15
        )


class TestChebyshevScalarization:
    def test_value_zero_reference(self):
        s = ChebyshevScalarization()
        lam, y = np.array([0.5, 0.5]), np.array([1.0, 3.0])
        assert s.value(lam, y) == pytest.approx(0.5, abs=1e-15)

    def test_reference_shift(self):
        s = ChebyshevScalarization(reference=[1.0, 1.0])
        lam, y = np.array([0.5, 0.5]), np.array([1.0, 3.0])
        assert s.value(lam, y) == pytest.approx(0.0, abs=1e-15)

    def test_lipschitz_is_max_weight(self):
        lam = np.array([0.2, 0.7, 0.1])
        assert ChebyshevScalarization().lipschitz(lam) == pytest.approx(0.7, abs=1e-15)

    def test_bad_reference_length(self):
        s = ChebyshevScalarization(reference=[0.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            s.value(np.array([0.5, 0.5]), np.array([1.0, 2.0]))


class TestScalarizationProperties:
    @settings(max_examples=60, deadline=None)
    @given(_vec(3), _vec(3), st.integers(0, 10_000))
    def test_monotone(self, y, shift, seed):
        """y <= y' coordinatewise implies s(y) <= s(y')."""
        lam = UniformSimplexWeights(3).sample(np.random.default_rng(seed))
        upper = y + np.abs(shift)
        for s in (LinearScalarization(), ChebyshevScalarization()):
            assert s.value(lam, y) <= s.value(lam, upper) + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(_vec(3), _vec(3), st.integers(0, 10_000))
    def test_lipschitz_in_euclidean_norm(self, u, v, seed):
        """|s(u) - s(v)| <= L(lam) * ||u - v||_2."""
        lam = UniformSimplexWeights(3).sample(np.random.default_rng(seed))
        for s in (LinearScalarization(), ChebyshevScalarization()):
            gap = abs(s.value(lam, u) - s.value(lam, v))
            assert gap <= s.lipschitz(lam) * np.linalg.norm(u - v) + 1e-12

    def test_lipschitz_at_most_one_on_simplex(self):
        """Simplex weights keep both constants <= 1, the harness default L."""
        rng = np.random.default_rng(4)
        for dist in (UniformSimplexWeights(5), InverseWeightedWeights(5)):
            for _ in range(50):
                lam = dist.sample(rng)
                assert LinearScalarization().lipschitz(lam) <= 1.0 + 1e-12
                assert ChebyshevScalarization().lipschitz(lam) <= 1.0 + 1e-12


class _FixedUniform:
    """Generator stub returning a preset uniform vector once."""

    def __init__(self, u):
        self.u = np.asarray(u, dtype=float)

    def random(self, n):
        assert n == self.u.shape[0]
        return self.u.copy()


class TestWeightDistributions:
    def test_inverse_weighted_frozen_example(self):
        """u = (0.2, 0.8) maps to lambda = (0.8, 0.2): small coordinates upweighted."""
        lam = InverseWeightedWeights(2).sample(_FixedUniform([0.2, 0.8]))
        np.testing.assert_allclose(lam, [0.8, 0.2], atol=1e-15)

    def test_uniform_simplex_from_uniform(self):
        lam = UniformSimplexWeights(3).sample(_FixedUniform([0.2, 0.3, 0.5]))
        np.testing.assert_allclose(lam, [0.2, 0.3, 0.5], atol=1e-15)

    @pytest.mark.parametrize("dist_cls", [UniformSimplexWeights, InverseWeightedWeights])
    def test_samples_live_on_simplex(self, dist_cls):
        dist = dist_cls(4)
        rng = np.random.default_rng(7)
        for _ in range(200):
            lam = dist.sample(rng)
            assert lam.shape == (4,)
            assert lam.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(lam >= 1e-13)

    @pytest.mark.parametrize("dist_cls", [UniformSimplexWeights, InverseWeightedWeights])
    def test_sampling_is_stream_deterministic(self, dist_cls):
        dist = dist_cls(3)
        a = [dist.sample(np.random.default_rng(9)) for _ in range(1)][0]
        b = [dist.sample(np.random.default_rng(9)) for _ in range(1)][0]
        np.testing.assert_array_equal(a, b)

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            UniformSimplexWeights(0)
