"""Scalar kernels, multi-task kernel constructors, and coupling spectra.

A multi-task kernel maps a pair of inputs to an n x n positive
semi-definite matrix coupling the n objectives.  Three variants are
provided:

* ``ICMKernel``        -- separable, Gamma(x, x') = k(x, x') * B.
* ``SumSeparableKernel`` -- Gamma(x, x') = sum_j k_j(x, x') * B_j.
* ``DiagonalKernel``   -- Gamma(x, x') = Dg(k_1(x, x'), ..., k_n(x, x')),
  which treats every task independently.

Block matrices over a point history use point-major layout: rows
``i*n .. (i+1)*n - 1`` belong to the i-th point, matching the
concatenation order of the stacked output vector.
"""

import abc

import numpy as np
import scipy.linalg as la
from scipy.spatial.distance import cdist

__all__ = [
    "ScalarKernel",
    "SquaredExponential",
    "Matern52",
    "CouplingSpectrum",
    "coupling_spectrum",
    "validate_coupling",
    "omega_coupling",
    "gram_coupling",
    "MultiTaskKernel",
    "ICMKernel",
    "SumSeparableKernel",
    "DiagonalKernel",
    "block_kernel_matrix",
    "cross_block",
    "operator_norm",
]


def _as_points(X) -> np.ndarray:
    """Coerce one point or a stack of points to a 2-D float array (N, d)."""
    A = np.asarray(X, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        # A single point given as a d-vector.
        A = A.reshape(1, -1)
    if not np.all(np.isfinite(A)):
        raise ValueError("kernel input contains non-finite entries")
    return A


def operator_norm(M: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric PSD matrix (its induced 2-norm)."""
    M = np.asarray(M, dtype=float)
    sym = 0.5 * (M + M.T)
    return float(la.eigvalsh(sym)[-1])


# Scalar kernels ==============================================================
class ScalarKernel(abc.ABC):
    """Stationary scalar kernel with unit variance, k(x, x) = 1.

    Parameters
    ----------
    lengthscale : float
        Positive lengthscale in input-space units.
    """

    def __init__(self, lengthscale: float):
        lengthscale = float(lengthscale)
        if not np.isfinite(lengthscale) or lengthscale <= 0:
            raise ValueError(f"lengthscale must be positive, got {lengthscale}")
        self.lengthscale = lengthscale

    @abc.abstractmethod
    def _from_distance(self, r: np.ndarray) -> np.ndarray:
        """Kernel value as a function of Euclidean distance r >= 0."""

    def pairwise(self, X, Z) -> np.ndarray:
        """Kernel matrix [k(x_i, z_j)] for point stacks X (N, d), Z (M, d)."""
        X, Z = _as_points(X), _as_points(Z)
        return self._from_distance(cdist(X, Z))

    def diag(self, X) -> np.ndarray:
        """Vector of k(x_i, x_i); identically 1 for unit-variance kernels."""
        return np.ones(_as_points(X).shape[0])

    def __call__(self, x, z) -> float:
        return float(self.pairwise(x, z)[0, 0])

    def __repr__(self):
        return f"{type(self).__name__}(lengthscale={self.lengthscale!r})"


class SquaredExponential(ScalarKernel):
    """k(x, x') = exp(-||x - x'||^2 / (2 l^2))."""

    def _from_distance(self, r):
        return np.exp(-0.5 * (r / self.lengthscale) ** 2)


class Matern52(ScalarKernel):
    """Matern kernel with smoothness 5/2.

    k(x, x') = (1 + sqrt(5) r / l + 5 r^2 / (3 l^2)) exp(-sqrt(5) r / l)
    with r = ||x - x'||.
    """

    def _from_distance(self, r):
        s = np.sqrt(5.0) * r / self.lengthscale
        return (1.0 + s + s**2 / 3.0) * np.exp(-s)


# Coupling matrices ===========================================================
class CouplingSpectrum:
    """Eigen-decomposition of a PSD coupling matrix.

    Attributes
    ----------
    eigenvalues : (n,) ndarray
        Nonnegative, in descending order.
    eigenvectors : (n, n) ndarray
        Orthonormal columns, aligned with ``eigenvalues``.
    """

    def __init__(self, eigenvalues: np.ndarray, eigenvectors: np.ndarray):
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self.eigenvectors = np.asarray(eigenvectors, dtype=float)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Sum_i xi_i u_i u_i^T, the matrix the spectrum was taken from."""
        U, xi = self.eigenvectors, self.eigenvalues
        return (U * xi) @ U.T

    def __repr__(self):
        return f"CouplingSpectrum(eigenvalues={self.eigenvalues!r})"


def validate_coupling(B) -> np.ndarray:
    """Check that B is a symmetric PSD matrix; return it as a float array.

    Raises
    ------
    ValueError
        If B is not square, not symmetric within 1e-12, or has an
        eigenvalue below -1e-9 times the largest one.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"coupling matrix must be square, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValueError("coupling matrix contains non-finite entries")
    asym = np.max(np.abs(B - B.T)) if B.size else 0.0
    if asym > 1e-12:
        raise ValueError(f"coupling matrix is asymmetric (max |B - B^T| = {asym:.3e})")
    evals = la.eigvalsh(B)
    lam_max = max(evals[-1], 0.0)
    if evals[0] < -1e-9 * max(lam_max, 1e-300):
        raise ValueError(
            f"coupling matrix is not PSD: eigenvalue {evals[0]:.6e} "
            f"below tolerance -1e-9 * {lam_max:.6e}"
        )
    return B


def coupling_spectrum(B) -> CouplingSpectrum:
    """Eigen-decompose a symmetric PSD coupling matrix.

    Eigenvalues are returned in descending order with their orthonormal
    eigenvectors.  Values within 1e-12 of zero relative to the largest
    eigenvalue are floored to exactly 0.0 (round-off on rank-deficient
    couplings such as omega = 0 leaves ~1e-17 residue that would
    otherwise masquerade as an informative direction).
    """
    B = validate_coupling(B)
    evals, evecs = la.eigh(B)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    if evals.size:
        evals[evals <= 1e-12 * evals[0]] = 0.0
    return CouplingSpectrum(evals, evecs[:, order])


def omega_coupling(omega: float, n: int) -> np.ndarray:
    """Coupling B = omega * I_n + (1 - omega) * 1_n / n.

    ``1_n`` is the all-ones n x n matrix.  B has one eigenvalue equal to 1
    (the normalized all-ones direction) and n - 1 eigenvalues equal to
    omega: omega = 0 makes all tasks identical, omega = 1 makes them
    unrelated.
    """
    omega = float(omega)
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    if n < 1:
        raise ValueError(f"task count must be >= 1, got {n}")
    return omega * np.eye(n) + (1.0 - omega) * np.ones((n, n)) / n


def gram_coupling(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random PSD coupling B = A^T A with A entries Uniform[0, 1]."""
    if n < 1:
        raise ValueError(f"task count must be >= 1, got {n}")
    A = rng.random((n, n))
    B = A.T @ A
    return 0.5 * (B + B.T)


# Multi-task kernels ==========================================================
class MultiTaskKernel(abc.ABC):
    """Matrix-valued kernel Gamma(x, x') in R^{n x n}.

    Attributes
    ----------
    n : int
        Task count.
    kappa : float
        Uniform operator-norm bound sup_x ||Gamma(x, x)||.
    """

    n: int
    kappa: float

    @abc.abstractmethod
    def __call__(self, x, z) -> np.ndarray:
        """Gamma(x, z) as an (n, n) array."""

    @abc.abstractmethod
    def _block_matrix(self, X: np.ndarray) -> np.ndarray:
        """Point-major block matrix [Gamma(x_i, x_j)]_{i,j} of shape (nt, nt)."""

    @abc.abstractmethod
    def _cross(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """Stacked cross blocks of shape (n * len(X), n * len(Z)).

        Block (i, j) equals Gamma(x_i, z_j).
        """

    def diag_block(self, x) -> np.ndarray:
        """Gamma(x, x), always symmetric PSD for a valid kernel."""
        return self(x, x)


class ICMKernel(MultiTaskKernel):
    """Separable kernel Gamma(x, x') = k(x, x') * B.

    Parameters
    ----------
    scalar : ScalarKernel
        Unit-variance scalar kernel k.
    coupling : array_like
        Symmetric PSD task-coupling matrix B of shape (n, n).
    """

    def __init__(self, scalar: ScalarKernel, coupling):
        self.scalar = scalar
        self.coupling = validate_coupling(coupling)
        self.spectrum = coupling_spectrum(self.coupling)
        self.n = self.coupling.shape[0]
        # k(x, x) = 1, so the operator norm of Gamma(x, x) is that of B.
        self.kappa = float(self.spectrum.eigenvalues[0])

    def __call__(self, x, z):
        return self.scalar(x, z) * self.coupling

    def _block_matrix(self, X):
        return np.kron(self.scalar.pairwise(X, X), self.coupling)

    def _cross(self, X, Z):
        return np.kron(self.scalar.pairwise(X, Z), self.coupling)

    def __repr__(self):
        return f"ICMKernel(scalar={self.scalar!r}, n={self.n})"


class SumSeparableKernel(MultiTaskKernel):
    """Sum of separable terms, Gamma(x, x') = sum_j k_j(x, x') * B_j."""

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise ValueError("SumSeparableKernel needs at least one (kernel, coupling) term")
        self.terms = [(k, validate_coupling(B)) for k, B in terms]
        n = self.terms[0][1].shape[0]
        for _, B in self.terms:
            if B.shape[0] != n:
                raise ValueError("all coupling matrices must share the task count")
        self.n = n
        # k_j(x, x) = 1 for every stationary unit-variance term, so
        # Gamma(x, x) = sum_j B_j at every x.
        self.kappa = operator_norm(sum(B for _, B in self.terms))

    def __call__(self, x, z):
        return sum(k(x, z) * B for k, B in self.terms)

    def _block_matrix(self, X):
        return sum(np.kron(k.pairwise(X, X), B) for k, B in self.terms)

    def _cross(self, X, Z):
        return sum(np.kron(k.pairwise(X, Z), B) for k, B in self.terms)

    def __repr__(self):
        return f"SumSeparableKernel(n={self.n}, terms={len(self.terms)})"


class DiagonalKernel(MultiTaskKernel):
    """Independent tasks: Gamma(x, x') = Dg(k_1(x, x'), ..., k_n(x, x')).

    Equivalent to a SumSeparableKernel with couplings e_j e_j^T.
    """

    def __init__(self, scalars):
        self.scalars = list(scalars)
        if not self.scalars:
            raise ValueError("DiagonalKernel needs at least one scalar kernel")
        self.n = len(self.scalars)
        self.kappa = 1.0  # max_j k_j(x, x) with unit-variance scalars

    def __call__(self, x, z):
        return np.diag([k(x, z) for k in self.scalars])

    def _block_matrix(self, X):
        return self._cross(X, X)

    def _cross(self, X, Z):
        X, Z = _as_points(X), _as_points(Z)
        n, t, m = self.n, X.shape[0], Z.shape[0]
        out = np.zeros((n * t, n * m))
        for j, k in enumerate(self.scalars):
            out[j::n, j::n] = k.pairwise(X, Z)
        return out

    def __repr__(self):
        return f"DiagonalKernel(n={self.n})"


# Block assembly ==============================================================
def block_kernel_matrix(kernel: MultiTaskKernel, X) -> np.ndarray:
    """Assemble the (nt, nt) block matrix [Gamma(x_i, x_j)] over t points.

    Point-major layout: rows i*n .. (i+1)*n - 1 belong to x_i.
    """
    X = _as_points(X)
    if X.shape[0] < 1:
        raise ValueError("block_kernel_matrix needs at least one point")
    G = kernel._block_matrix(X)
    return 0.5 * (G + G.T)


def cross_block(kernel: MultiTaskKernel, X, z) -> np.ndarray:
    """Stacked cross-kernel [Gamma(x_1, z); ...; Gamma(x_t, z)] of shape (nt, n).

    An empty history yields an empty (0, n) matrix.
    """
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.zeros((0, kernel.n))
    return kernel._cross(X, _as_points(z))
