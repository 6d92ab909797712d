"""Shared oracles for the test suite.

The helpers here recompute posterior quantities from the textbook dense
formulas, using only kernel evaluation and scipy solves, so the
incremental implementations can be checked against an independent path.
"""

import numpy as np
import scipy.linalg as la

from mtbandit import kernels


def dense_posterior_mean(kernel, X, Y, eta, Xq):
    """mu_t over queries from the direct (nt x nt) solve."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    n = kernel.n
    G = kernels.block_kernel_matrix(kernel, X)
    alpha = la.solve(G + eta * np.eye(G.shape[0]), np.asarray(Y, dtype=float).reshape(-1),
                     assume_a="pos")
    C = kernels.cross_block(kernel, X, Xq)  # (nt, n*q)
    out = C.T @ alpha
    return out.reshape(Xq.shape[0], n)


def dense_posterior_cov(kernel, X, Y, eta, x):
    """Gamma_t(x, x) from the direct solve."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = kernels.block_kernel_matrix(kernel, X)
    c = kernels.cross_block(kernel, X, x)  # (nt, n)
    prior = kernel(np.asarray(x, dtype=float).reshape(-1), np.asarray(x, dtype=float).reshape(-1))
    sol = la.solve(G + eta * np.eye(G.shape[0]), c, assume_a="pos")
    return prior - c.T @ sol


def dense_logdet(kernel, X, eta):
    """log det(I_nt + eta^-1 G_t) by dense factorization."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = kernels.block_kernel_matrix(kernel, X)
    sign, val = np.linalg.slogdet(np.eye(G.shape[0]) + G / eta)
    assert sign > 0
    return float(val)


def random_icm(rng, n=3, lengthscale=0.3, omega=None):
    """A generic ICM kernel instance for property batteries."""
    if omega is None:
        B = kernels.gram_coupling(n, rng)
    else:
        B = kernels.omega_coupling(omega, n)
    return kernels.ICMKernel(kernels.SquaredExponential(lengthscale), B)
