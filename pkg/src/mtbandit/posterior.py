"""Exact vector-valued kernel ridge regression posteriors.

After observing (x_1, y_1), ..., (x_t, y_t) the posterior over a function
in the RKHS of a multi-task kernel Gamma is

    mu_t(x)       = G_t(x)^T (G_t + eta I_nt)^{-1} Y_t
    Gamma_t(x, x) = Gamma(x, x) - G_t(x)^T (G_t + eta I_nt)^{-1} G_t(x)

with G_t the point-major block kernel matrix, G_t(x) the stacked cross
blocks, and Y_t the concatenated outputs.  The state also accumulates

    logdet_sum = sum_{s<=t} log det(I_n + eta^{-1} Gamma_{s-1}(x_s, x_s))

incrementally; by the Schur telescoping identity this equals
log det(I_nt + eta^{-1} G_t) and feeds the confidence radii.

For separable (ICM) kernels Gamma = k * B the eigen-decomposition
B = sum_i xi_i u_i u_i^T turns the nt x nt solve into independent t x t
solves per eigendirection; for diagonal kernels the solve splits per
task.  Both fast paths are selected automatically and agree with the
general block path to high accuracy.
"""

import numpy as np
import scipy.linalg as la

from .kernels import (
    DiagonalKernel,
    ICMKernel,
    MultiTaskKernel,
    _as_points,
    block_kernel_matrix,
)

__all__ = [
    "PosteriorState",
    "icm_posterior_mean",
    "icm_posterior_cov_norm",
    "append_cholesky",
    "REBUILD_EVERY",
]

# Full factorization rebuild cadence; block appends in between.
REBUILD_EVERY = 64


def append_cholesky(L: np.ndarray, C: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Grow a lower Cholesky factor by one block via the Schur complement.

    Given L with L L^T = M, returns the factor of [[M, C], [C^T, D]].
    """
    if L.shape[0] == 0:
        return la.cholesky(D, lower=True)
    W = la.solve_triangular(L, C, lower=True)
    S = D - W.T @ W
    Ls = la.cholesky(0.5 * (S + S.T), lower=True)
    p, k = L.shape[0], D.shape[0]
    out = np.zeros((p + k, p + k))
    out[:p, :p] = L
    out[p:, :p] = W.T
    out[p:, p:] = Ls
    return out


def _logdet_ratio(M: np.ndarray, eta: float, cap: float) -> float:
    """log det(I + M / eta) for a symmetric matrix M with eigenvalues in [0, cap]."""
    evals = np.clip(la.eigvalsh(0.5 * (M + M.T)), 0.0, cap)
    return float(np.sum(np.log1p(evals / eta)))


def _group_eigenvalues(xis: np.ndarray):
    """Group descending eigenvalues into (value, column-index) clusters.

    Numerically repeated eigenvalues (relative gap below 1e-12) share one
    factorization; exact zeros are dropped because their terms vanish
    analytically.
    """
    groups = []
    scale = max(float(xis[0]), 1e-300) if xis.size else 1.0
    for i, xi in enumerate(xis):
        if xi <= 0.0:
            continue
        if groups and abs(groups[-1][0] - xi) <= 1e-12 * scale:
            groups[-1][1].append(i)
        else:
            groups.append((float(xi), [i]))
    return [(xi, np.asarray(cols, dtype=int)) for xi, cols in groups]


# Fast-path state =============================================================
class _ScalarSystems:
    """Cholesky factors of (w_j * K_t + eta I_t) for a family of weights.

    Shared machinery for the ICM fast path (one Gram, one weight per
    eigendirection cluster) and the diagonal fast path (one Gram per task,
    unit weight).  Factors are block-appended and fully rebuilt every
    REBUILD_EVERY updates.
    """

    def __init__(self, scalar_kernel, weights, eta):
        self.kernel = scalar_kernel
        self.weights = list(weights)
        self.eta = float(eta)
        self.K = np.zeros((0, 0))
        self.chols = [np.zeros((0, 0)) for _ in self.weights]
        self._since_rebuild = 0

    @property
    def t(self) -> int:
        return self.K.shape[0]

    def cross(self, X_hist, Xq) -> np.ndarray:
        """Scalar kernel matrix k(x_s, z_j) of shape (t, N)."""
        if self.t == 0:
            return np.zeros((0, _as_points(Xq).shape[0]))
        return self.kernel.pairwise(X_hist, Xq)

    def update(self, X_old, x_new):
        k_vec = (
            self.kernel.pairwise(X_old, x_new)
            if len(X_old)
            else np.zeros((0, 1))
        )
        t = self.t
        K_new = np.zeros((t + 1, t + 1))
        K_new[:t, :t] = self.K
        K_new[:t, t:] = k_vec
        K_new[t:, :t] = k_vec.T
        K_new[t, t] = self.kernel(x_new, x_new)
        self.K = K_new
        self._since_rebuild += 1
        rebuild = self._since_rebuild >= REBUILD_EVERY
        for i, w in enumerate(self.weights):
            if rebuild:
                self.chols[i] = la.cholesky(
                    w * self.K + self.eta * np.eye(t + 1), lower=True
                )
            else:
                self.chols[i] = append_cholesky(
                    self.chols[i],
                    w * k_vec,
                    np.array([[w * K_new[t, t] + self.eta]]),
                )
        if rebuild:
            self._since_rebuild = 0

    def solve(self, i: int, rhs: np.ndarray) -> np.ndarray:
        """(w_i K + eta I)^{-1} rhs."""
        return la.cho_solve((self.chols[i], True), rhs)

    def quad(self, i: int, Kq: np.ndarray) -> np.ndarray:
        """Columnwise k_q^T (w_i K + eta I)^{-1} k_q for Kq of shape (t, N)."""
        if self.t == 0:
            return np.zeros(Kq.shape[1])
        V = la.solve_triangular(self.chols[i], Kq, lower=True)
        return np.einsum("kj,kj->j", V, V)


class _ICMFast:
    """Eigendirection solver for Gamma = k * B.

    Projects outputs onto the eigenvectors of B and runs one scalar ridge
    system per distinct positive eigenvalue.
    """

    def __init__(self, kernel: ICMKernel, eta: float):
        self.kernel = kernel
        self.spectrum = kernel.spectrum
        self.groups = _group_eigenvalues(self.spectrum.eigenvalues)
        self.systems = _ScalarSystems(
            kernel.scalar, [xi for xi, _ in self.groups], eta
        )
        self.Yproj = np.zeros((0, kernel.n))

    def update(self, X_old, x_new, y_new):
        self.systems.update(X_old, x_new)
        row = self.spectrum.eigenvectors.T @ y_new
        self.Yproj = np.vstack([self.Yproj, row[None, :]])

    def mean_batch(self, X_hist, Xq) -> np.ndarray:
        N = _as_points(Xq).shape[0]
        n = self.kernel.n
        out = np.zeros((N, n))
        if self.systems.t == 0:
            return out
        Kq = self.systems.cross(X_hist, Xq)
        U = self.spectrum.eigenvectors
        for g, (xi, cols) in enumerate(self.groups):
            A = self.systems.solve(g, self.Yproj[:, cols])
            out += xi * (Kq.T @ A) @ U[:, cols].T
        return out

    def residuals_batch(self, X_hist, Xq) -> np.ndarray:
        """Per-group residuals r_g(x) = k(x,x) - xi_g k_q^T (xi_g K + eta I)^{-1} k_q.

        Returns shape (n_groups, N).
        """
        Xq = _as_points(Xq)
        N = Xq.shape[0]
        kxx = self.kernel.scalar.diag(Xq)
        if self.systems.t == 0:
            return np.tile(kxx, (len(self.groups), 1))
        Kq = self.systems.cross(X_hist, Xq)
        res = np.empty((len(self.groups), N))
        for g, (xi, _) in enumerate(self.groups):
            res[g] = kxx - xi * self.systems.quad(g, Kq)
        return res

    def cov_norm_batch(self, X_hist, Xq, kappa) -> np.ndarray:
        res = self.residuals_batch(X_hist, Xq)
        vals = np.array([xi for xi, _ in self.groups])[:, None] * res
        return np.clip(vals.max(axis=0), 0.0, kappa)

    def cov(self, X_hist, x, kappa) -> np.ndarray:
        res = self.residuals_batch(X_hist, x)[:, 0]
        n = self.kernel.n
        vals = np.zeros(n)
        for g, (xi, cols) in enumerate(self.groups):
            vals[cols] = xi * res[g]
        vals = np.clip(vals, 0.0, kappa)
        U = self.spectrum.eigenvectors
        return (U * vals) @ U.T


class _DiagonalFast:
    """Per-task scalar ridge systems for Gamma = Dg(k_1, ..., k_n)."""

    def __init__(self, kernel: DiagonalKernel, eta: float):
        self.kernel = kernel
        self.systems = [_ScalarSystems(k, [1.0], eta) for k in kernel.scalars]
        self.Yrows = np.zeros((0, kernel.n))

    def update(self, X_old, x_new, y_new):
        for sys in self.systems:
            sys.update(X_old, x_new)
        self.Yrows = np.vstack([self.Yrows, np.asarray(y_new, dtype=float)[None, :]])

    def mean_batch(self, X_hist, Xq) -> np.ndarray:
        N = _as_points(Xq).shape[0]
        n = self.kernel.n
        out = np.zeros((N, n))
        if self.Yrows.shape[0] == 0:
            return out
        for j, sys in enumerate(self.systems):
            Kq = sys.cross(X_hist, Xq)
            out[:, j] = Kq.T @ sys.solve(0, self.Yrows[:, j])
        return out

    def residuals_batch(self, X_hist, Xq) -> np.ndarray:
        """Per-task residual variances, shape (n, N)."""
        Xq = _as_points(Xq)
        res = np.empty((self.kernel.n, Xq.shape[0]))
        for j, sys in enumerate(self.systems):
            res[j] = sys.kernel.diag(Xq) - sys.quad(0, sys.cross(X_hist, Xq))
        return res

    def cov_norm_batch(self, X_hist, Xq, kappa) -> np.ndarray:
        return np.clip(self.residuals_batch(X_hist, Xq).max(axis=0), 0.0, kappa)

    def cov(self, X_hist, x, kappa) -> np.ndarray:
        return np.diag(np.clip(self.residuals_batch(X_hist, x)[:, 0], 0.0, kappa))


# Public posterior state ======================================================
class PosteriorState:
    """Exact multi-task KRR posterior after t observations.

    Parameters
    ----------
    kernel : MultiTaskKernel
    eta : float
        Positive regularizer.
    fast_path : {"auto", True, False}
        "auto" picks the eigendirection solver for ICM kernels and the
        per-task solver for diagonal kernels; False forces the general
        nt x nt block path.

    Updates mutate the state in place (single-writer); reads are pure.
    """

    def __init__(self, kernel: MultiTaskKernel, eta: float, fast_path="auto"):
        eta = float(eta)
        if not eta > 0:
            raise ValueError(f"eta must be positive, got {eta}")
        self.kernel = kernel
        self.eta = eta
        self.points: list[np.ndarray] = []
        self.Y = np.zeros(0)
        self.logdet_sum = 0.0
        self._fast = None
        if fast_path is True or fast_path == "auto":
            if isinstance(kernel, ICMKernel):
                self._fast = _ICMFast(kernel, eta)
            elif isinstance(kernel, DiagonalKernel):
                self._fast = _DiagonalFast(kernel, eta)
            if fast_path is True and self._fast is None:
                raise TypeError(
                    f"no fast path for kernel variant {type(kernel).__name__}"
                )
        self._chol = np.zeros((0, 0))
        self._alpha = np.zeros(0)
        self._since_rebuild = 0

    @property
    def t(self) -> int:
        return len(self.points)

    def _hist(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 1))
        return np.vstack(self.points)

    # -- updates --------------------------------------------------------
    def update(self, x, y) -> "PosteriorState":
        """Incorporate one observation; returns self.

        The logdet accumulator is incremented with the predictive
        covariance at x *before* the point is added.
        """
        x = _as_points(x)[0]
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != self.kernel.n:
            raise ValueError(
                f"output has {y.shape[0]} coordinates, kernel has {self.kernel.n} tasks"
            )
        if not np.all(np.isfinite(y)):
            raise ValueError("observation contains non-finite entries")

        self.logdet_sum += _logdet_ratio(self.cov(x), self.eta, self.kernel.kappa)

        X_old = self._hist()
        if self._fast is not None:
            self._fast.update(X_old, x, y)
            self.points.append(x)
        else:
            n = self.kernel.n
            C = self.kernel._cross(X_old, _as_points(x)) if self.t else np.zeros((0, n))
            D = self.kernel.diag_block(x) + self.eta * np.eye(n)
            self.points.append(x)
            self._since_rebuild += 1
            if self._since_rebuild >= REBUILD_EVERY:
                G = block_kernel_matrix(self.kernel, self._hist())
                self._chol = la.cholesky(
                    G + self.eta * np.eye(G.shape[0]), lower=True
                )
                self._since_rebuild = 0
            else:
                self._chol = append_cholesky(self._chol, C, 0.5 * (D + D.T))
        self.Y = np.concatenate([self.Y, y])
        if self._fast is None:
            self._alpha = la.cho_solve((self._chol, True), self.Y)
        return self

    # -- reads ----------------------------------------------------------
    def mean(self, x) -> np.ndarray:
        """Posterior mean mu_t(x) as an (n,) vector; zero at t = 0."""
        return self.mean_batch(x)[0]

    def mean_batch(self, Xq) -> np.ndarray:
        """Posterior means over a stack of queries, shape (N, n)."""
        Xq = _as_points(Xq)
        if self._fast is not None:
            return self._fast.mean_batch(self._hist(), Xq)
        N, n = Xq.shape[0], self.kernel.n
        if self.t == 0:
            return np.zeros((N, n))
        Gq = self.kernel._cross(self._hist(), Xq)
        return (Gq.T @ self._alpha).reshape(N, n)

    def cov(self, x) -> np.ndarray:
        """Posterior covariance Gamma_t(x, x), symmetric with eigenvalues
        clamped to [0, kappa]."""
        if self._fast is not None:
            return self._fast.cov(self._hist(), x, self.kernel.kappa)
        prior = self.kernel.diag_block(x)
        if self.t == 0:
            C = prior
        else:
            g = self.kernel._cross(self._hist(), _as_points(x))
            W = la.solve_triangular(self._chol, g, lower=True)
            C = prior - W.T @ W
        evals, evecs = la.eigh(0.5 * (C + C.T))
        evals = np.clip(evals, 0.0, self.kernel.kappa)
        return (evecs * evals) @ evecs.T

    def cov_norm(self, x) -> float:
        """Operator norm ||Gamma_t(x, x)||, clamped to [0, kappa]."""
        return float(self.cov_norm_batch(x)[0])

    def cov_norm_batch(self, Xq) -> np.ndarray:
        """Posterior covariance norms over a stack of queries, shape (N,)."""
        Xq = _as_points(Xq)
        if self._fast is not None:
            return self._fast.cov_norm_batch(self._hist(), Xq, self.kernel.kappa)
        N = Xq.shape[0]
        out = np.empty(N)
        if self.t == 0:
            for j in range(N):
                out[j] = la.eigvalsh(self.kernel.diag_block(Xq[j]))[-1]
            return np.clip(out, 0.0, self.kernel.kappa)
        n = self.kernel.n
        Gq = self.kernel._cross(self._hist(), Xq)
        W = la.solve_triangular(self._chol, Gq, lower=True)
        W3 = W.reshape(W.shape[0], N, n)
        Q = np.einsum("kja,kjb->jab", W3, W3)
        for j in range(N):
            C = self.kernel.diag_block(Xq[j]) - Q[j]
            out[j] = la.eigvalsh(0.5 * (C + C.T))[-1]
        return np.clip(out, 0.0, self.kernel.kappa)


# ICM fast-path entry points ==================================================
def _require_icm(state: PosteriorState):
    if not isinstance(state._fast, _ICMFast):
        raise TypeError(
            "fast-path evaluation needs a PosteriorState over an ICMKernel "
            "with its eigendirection solver enabled"
        )


def icm_posterior_mean(state: PosteriorState, x) -> np.ndarray:
    """mu_t(x) through the eigendirection solver of a separable kernel.

    Equals the general block path; raises TypeError for other variants.
    """
    _require_icm(state)
    return state._fast.mean_batch(state._hist(), x)[0]


def icm_posterior_cov_norm(state: PosteriorState, x) -> float:
    """||Gamma_t(x, x)|| through the eigendirection solver.

    max_i xi_i (k(x,x) - xi_i k_t(x)^T (xi_i K_t + eta I_t)^{-1} k_t(x)).
    """
    _require_icm(state)
    return float(
        state._fast.cov_norm_batch(state._hist(), x, state.kernel.kappa)[0]
    )
