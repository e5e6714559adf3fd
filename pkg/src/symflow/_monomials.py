"""Dense monomial bases and the linear maps acting on them.

Homogeneous polynomials of degree ``d`` in ``dim`` variables are stored as
coefficient vectors over :func:`monomials` ``(dim, d)``, which lists exponent
tuples in decreasing lexicographic order (``x1**d`` first).
"""
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np


@lru_cache(maxsize=None)
def monomials(dim, degree):
    """Exponent tuples of total ``degree`` in ``dim`` variables."""
    out = []
    for combo in combinations_with_replacement(range(dim), degree):
        alpha = [0] * dim
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    out.sort(reverse=True)
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(dim, degree):
    return {alpha: j for j, alpha in enumerate(monomials(dim, degree))}


@lru_cache(maxsize=None)
def exponent_array(dim, degree):
    arr = np.array(monomials(dim, degree), dtype=np.int64).reshape(-1, dim)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def shift_matrix(dim, degree, var):
    """Matrix of multiplication by ``x_var`` from degree ``degree`` to ``degree+1``."""
    src = monomials(dim, degree)
    dst = monomial_index(dim, degree + 1)
    mat = np.zeros((len(dst), len(src)))
    for j, alpha in enumerate(src):
        beta = list(alpha)
        beta[var] += 1
        mat[dst[tuple(beta)], j] = 1.0
    mat.setflags(write=False)
    return mat


def substitution_matrices(P, max_degree):
    """Matrices ``M[d]`` with ``coeffs(p(P x)) = M[d] @ coeffs(p)`` per degree.

    Built recursively: ``(Px)^(beta + e_i) = (Px)^beta * sum_j P[i, j] x_j``.
    """
    P = np.asarray(P, dtype=float)
    dim = P.shape[0]
    mats = [np.ones((1, 1))]
    for d in range(1, max_degree + 1):
        prev = mats[-1]
        src = monomials(dim, d)
        prev_index = monomial_index(dim, d - 1)
        lifted = [shift_matrix(dim, d - 1, j) @ prev for j in range(dim)]
        exps = exponent_array(dim, d)
        first = np.argmax(exps > 0, axis=1)
        lower = exps.copy()
        lower[np.arange(len(src)), first] -= 1
        cols = np.array([prev_index[tuple(b)] for b in lower])
        cur = sum(lifted[j][:, cols] * P[first, j][None, :] for j in range(dim))
        mats.append(cur)
    return mats


def r2_multiplier(dim, degree):
    """Matrix of multiplication by ``x1**2 + ... + x_dim**2`` on degree ``degree``."""
    out = 0.0
    for j in range(dim):
        out = out + shift_matrix(dim, degree + 1, j) @ shift_matrix(dim, degree, j)
    return out
