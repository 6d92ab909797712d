"""Scalarizations of vector objectives and weight-vector samplers.

A scalarization s_lambda maps an n-vector objective value to a scalar,
parameterized by a weight lambda on the open probability simplex
Lambda = {lambda > 0 : ||lambda||_1 = 1}.  Both kinds here are monotone
(coordinatewise domination strictly increases the value), so maximizing
s_lambda(f(x)) over a candidate set returns a Pareto-optimal point, and
Lipschitz in the l2 norm with a per-lambda constant used by the
acquisition rule.
"""

import abc

import numpy as np

__all__ = [
    "Scalarization",
    "LinearScalarization",
    "ChebyshevScalarization",
    "WeightDistribution",
    "UniformSimplexWeights",
    "InverseWeightedWeights",
]

# Simplex samples must be strictly positive; coordinates below this are
# rejected and redrawn (guards the inverse weighting against division blowup).
_MIN_COORD = 1e-12
_MAX_RESAMPLE = 100


def _check_weight(lam: np.ndarray, n: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape[0] != n:
        raise ValueError(f"weight has {lam.shape[0]} coordinates, expected {n}")
    return lam


# Scalarizations ==============================================================
class Scalarization(abc.ABC):
    """Monotone Lipschitz map from R^n to R, parameterized by a weight."""

    @abc.abstractmethod
    def value_batch(self, lam, Y) -> np.ndarray:
        """s_lambda applied to each row of Y (N, n); returns (N,)."""

    @abc.abstractmethod
    def lipschitz(self, lam) -> float:
        """Constant L_lambda with |s(u) - s(v)| <= L_lambda ||u - v||_2."""

    def value(self, lam, y) -> float:
        return float(self.value_batch(lam, np.asarray(y, dtype=float)[None, :])[0])


class LinearScalarization(Scalarization):
    """s_lambda(y) = lambda^T y with L_lambda = ||lambda||_2."""

    def value_batch(self, lam, Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        lam = _check_weight(lam, Y.shape[1])
        return Y @ lam

    def lipschitz(self, lam):
        return float(np.linalg.norm(np.asarray(lam, dtype=float)))

    def __repr__(self):
        return "LinearScalarization()"


class ChebyshevScalarization(Scalarization):
    """s_lambda(y) = min_i lambda_i (y_i - z_i) with L_lambda = max_i lambda_i.

    Parameters
    ----------
    reference : array_like or None
        Reference point z; None means the zero vector.
    """

    def __init__(self, reference=None):
        self.reference = (
            None if reference is None else np.asarray(reference, dtype=float).reshape(-1)
        )

    def value_batch(self, lam, Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        lam = _check_weight(lam, Y.shape[1])
        if self.reference is not None:
            if self.reference.shape[0] != Y.shape[1]:
                raise ValueError(
                    f"reference has {self.reference.shape[0]} coordinates, "
                    f"objectives have {Y.shape[1]}"
                )
            Y = Y - self.reference
        return (Y * lam).min(axis=1)

    def lipschitz(self, lam):
        return float(np.max(np.asarray(lam, dtype=float)))

    def __repr__(self):
        return f"ChebyshevScalarization(reference={self.reference!r})"


# Weight distributions ========================================================
class WeightDistribution(abc.ABC):
    """Sampler over the open probability simplex."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"weight dimension must be >= 1, got {n}")
        self.n = n

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One weight lambda with lambda > 0 and ||lambda||_1 = 1."""

    def _positive_uniform(self, rng) -> np.ndarray:
        """Uniform draw from [0, 1]^n with every coordinate >= _MIN_COORD.

        Falls back to the uniform weight after _MAX_RESAMPLE rejections
        (probability ~0; keeps the sampler total).
        """
        for _ in range(_MAX_RESAMPLE):
            u = rng.random(self.n)
            if np.all(u >= _MIN_COORD):
                return u
        return np.full(self.n, 1.0 / self.n)


class UniformSimplexWeights(WeightDistribution):
    """lambda = u / ||u||_1 with u drawn uniformly from [0, 1]^n."""

    def sample(self, rng):
        u = self._positive_uniform(rng)
        return u / np.sum(u)

    def __repr__(self):
        return f"UniformSimplexWeights(n={self.n})"


class InverseWeightedWeights(WeightDistribution):
    """lambda = alpha / ||alpha||_1 with alpha_i = ||u||_1 / u_i, u ~ U[0,1]^n.

    Small u coordinates receive large weight, biasing rounds toward
    objectives that a uniform draw would deprioritize.
    """

    def sample(self, rng):
        u = self._positive_uniform(rng)
        alpha = np.sum(u) / u
        return alpha / np.sum(alpha)

    def __repr__(self):
        return f"InverseWeightedWeights(n={self.n})"
