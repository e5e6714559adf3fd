"""Moment polynomials, divisibility by |xi|^2, invariant polynomial spaces.

All integrals here are closed-form Gaussian moments; no quadrature.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, inf, isfinite, lgamma, exp, pi, sqrt

import numpy as np

from . import _monomials as mono
from .fields import PolyGaussianField

ZERO_REL = 1e-10
MAX_MOMENT_INDEX = 64


@dataclass(frozen=True, eq=False)
class HomogeneousPolynomial:
    """Sparse homogeneous polynomial in ``xi``: ``terms`` maps multi-index -> coefficient."""

    dim: int
    degree: int
    terms: dict

    def __post_init__(self):
        clean = {}
        for alpha, c in dict(self.terms).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim or sum(alpha) != self.degree or min(alpha) < 0:
                raise ValueError(f"multi-index {alpha} does not have dim {self.dim} and degree {self.degree}")
            clean[alpha] = clean.get(alpha, 0.0) + float(c)
        object.__setattr__(self, "terms", {a: c for a, c in clean.items() if c != 0.0})

    @classmethod
    def zero(cls, dim, degree):
        return cls(dim, degree, {})

    @classmethod
    def from_vector(cls, dim, degree, vec):
        basis = mono.monomials(dim, degree)
        return cls(dim, degree, {basis[j]: vec[j] for j in np.flatnonzero(vec)})

    @classmethod
    def r2_power(cls, dim, k):
        """``(xi_1^2 + ... + xi_dim^2)**k``."""
        vec = np.ones(1)
        for d in range(0, 2 * k, 2):
            vec = mono.r2_multiplier(dim, d) @ vec
        return cls.from_vector(dim, 2 * k, vec)

    def to_vector(self):
        idx = mono.monomial_index(self.dim, self.degree)
        vec = np.zeros(len(idx))
        for alpha, c in self.terms.items():
            vec[idx[alpha]] = c
        return vec

    def norm(self):
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_zero(self, tol=0.0):
        return self.norm() <= tol

    def _check(self, other):
        if (self.dim, self.degree) != (other.dim, other.degree):
            raise ValueError("polynomials differ in dimension or degree")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0.0) + c
        return HomogeneousPolynomial(self.dim, self.degree, out)

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, s):
        return HomogeneousPolynomial(self.dim, self.degree, {a: s * c for a, c in self.terms.items()})

    __rmul__ = __mul__

    def times(self, other):
        """Polynomial product."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = {}
        for a, c in self.terms.items():
            for b, d in other.terms.items():
                key = tuple(i + j for i, j in zip(a, b))
                out[key] = out.get(key, 0.0) + c * d
        return HomogeneousPolynomial(self.dim, self.degree + other.degree, out)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        total = np.zeros(xi.shape[:-1])
        for a, c in self.terms.items():
            total = total + c * np.prod(xi ** np.array(a), axis=-1)
        return total

    def to_dict(self):
        return {
            "dim": self.dim,
            "degree": self.degree,
            "terms": [{"alpha": list(a), "coeff": c} for a, c in sorted(self.terms.items(), reverse=True)],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(int(data["dim"]), int(data["degree"]),
                       {tuple(t["alpha"]): t["coeff"] for t in data["terms"]})
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed polynomial description: {exc}") from exc

    def __repr__(self):
        if not self.terms:
            return f"HomogeneousPolynomial(dim={self.dim}, degree={self.degree}, 0)"
        parts = []
        for a, c in sorted(self.terms.items(), reverse=True):
            mon = "*".join(f"xi{i + 1}^{k}" if k > 1 else f"xi{i + 1}" for i, k in enumerate(a) if k)
            parts.append(f"{c:+.6g}" + (f"*{mon}" if mon else ""))
        return " ".join(parts)


# -- Gaussian moments -----------------------------------------------------------

def _moment_1d(k, lam):
    if k % 2:
        return 0.0
    j = k // 2
    dfact = 1.0
    for i in range(1, 2 * j, 2):
        dfact *= i
    return dfact * (2.0 * lam) ** (-j) * sqrt(pi / lam)


def _moment_table(kmax, lam):
    return np.array([_moment_1d(k, lam) for k in range(kmax + 1)])


def gaussian_moment(alpha, lam):
    """``int x**alpha exp(-lam |x|^2) dx`` over R^d."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if max(alpha) > MAX_MOMENT_INDEX:
        raise OverflowError(f"moment index {max(alpha)} exceeds {MAX_MOMENT_INDEX}")
    out = 1.0
    for a in alpha:
        out *= _moment_1d(int(a), lam)
    return out


def _product_terms(f_comp, g_comp, dim):
    if not f_comp or not g_comp:
        return np.zeros((0, dim), dtype=np.int64), np.zeros(0)
    fa = np.array(list(f_comp.keys()), dtype=np.int64)
    fc = np.array(list(f_comp.values()))
    ga = np.array(list(g_comp.keys()), dtype=np.int64)
    gc = np.array(list(g_comp.values()))
    exps = (fa[:, None, :] + ga[None, :, :]).reshape(-1, dim)
    coeffs = (fc[:, None] * gc[None, :]).ravel()
    return exps, coeffs


def _component(f, i):
    if i >= f.n_components:
        raise IndexError(f"component {i} out of range for a field with {f.n_components} components")
    return f.components[i]


def product_moment(f, g, h, k, alpha):
    """``int x**alpha f_h(x) g_k(x) dx`` (components indexed from 0)."""
    if f.dim != g.dim:
        raise ValueError("fields live in different dimensions")
    exps, coeffs = _product_terms(_component(f, h), _component(g, k), f.dim)
    if not len(coeffs):
        return 0.0
    lam = f.envelope + g.envelope
    exps = exps + np.asarray(alpha, dtype=np.int64)
    if exps.max() > MAX_MOMENT_INDEX:
        raise OverflowError("moment index too large")
    table = _moment_table(int(exps.max()), lam)
    return float(np.sum(coeffs * np.prod(table[exps], axis=1)))


def _rational_1d(k, lam):
    # int x^k exp(-lam x^2) dx / sqrt(pi/lam)
    if k % 2:
        return Fraction(0)
    j = k // 2
    dfact = 1
    for i in range(1, 2 * j, 2):
        dfact *= i
    return Fraction(dfact) / (2 * lam) ** j


def product_moment_exact(f, g, h, k, alpha):
    """Exact version of :func:`product_moment`.

    Returns a :class:`~fractions.Fraction` ``q`` with
    ``moment = q * (pi / lam)**(dim/2)``, ``lam = f.envelope + g.envelope``.
    Coefficients and envelopes are converted to fractions without rounding.
    """
    lam = Fraction(f.envelope) + Fraction(g.envelope)
    total = Fraction(0)
    for a, c in _component(f, h).items():
        for b, d in _component(g, k).items():
            term = Fraction(c) * Fraction(d)
            for ai, bi, gi in zip(a, b, alpha):
                term *= _rational_1d(ai + bi + gi, lam)
                if not term:
                    break
            total += term
    return total


def moment(f, i, alpha):
    """``int x**alpha f_i(x) dx`` for a single field component."""
    comp = _component(f, i)
    if not comp:
        return 0.0
    exps = np.array(list(comp.keys()), dtype=np.int64) + np.asarray(alpha, dtype=np.int64)
    coeffs = np.array(list(comp.values()))
    table = _moment_table(int(exps.max()), f.envelope)
    return float(np.sum(coeffs * np.prod(table[exps], axis=1)))


def _abs_moment_1d(k, lam):
    # int |x|^k exp(-lam x^2) dx
    return exp(lgamma((k + 1) / 2)) * lam ** (-(k + 1) / 2)


def moment_scale(f, i, alpha):
    """Upper bound ``int |x**alpha| |f_i(x)| dx`` used to normalise zero tests."""
    total = 0.0
    for beta, c in _component(f, i).items():
        term = abs(c)
        for a, b in zip(alpha, beta):
            term *= _abs_moment_1d(a + b, f.envelope)
        total += term
    return total


# -- moment polynomials ---------------------------------------------------------

def _alpha_factorial(alpha):
    out = 1
    for a in alpha:
        out *= factorial(a)
    return out


def gram_matrix(a):
    """``G[h, k] = int a_h a_k dx``."""
    d = a.n_components
    return np.array([[product_moment(a, a, h, k, (0,) * a.dim) for k in range(d)] for h in range(d)])


def compute_Pm(a, m):
    """Degree ``m+2`` polynomial ``sum_{h,k} sum_{|alpha|=m} (1/alpha!) int x^alpha a_h a_k  xi^alpha xi_h xi_k``."""
    if a.is_scalar:
        raise ValueError("P_m is defined for vector fields")
    if not 0 <= m <= 12:
        raise ValueError("m must lie in 0..12")
    d = a.dim
    terms = {}
    for alpha in mono.monomials(d, m):
        w = 1.0 / _alpha_factorial(alpha)
        for h in range(d):
            for k in range(d):
                c = w * product_moment(a, a, h, k, alpha)
                if c == 0.0:
                    continue
                key = list(alpha)
                key[h] += 1
                key[k] += 1
                key = tuple(key)
                terms[key] = terms.get(key, 0.0) + c
    return HomogeneousPolynomial(d, m + 2, terms)


def divide_by_r2(P):
    """Division by ``xi_1^2 + ... + xi_d^2`` with leading monomial ``xi_1^2``.

    Returns ``(Q, R)`` with ``P = |xi|^2 Q + R`` and every monomial of ``R``
    of degree at most one in ``xi_1``.
    """
    d = P.dim
    if P.degree < 2:
        return HomogeneousPolynomial.zero(d, 0), P
    work = dict(P.terms)
    quot = {}
    # each reduction lowers the xi_1 exponent by two, so sweep from the top down
    for e1 in range(P.degree, 1, -1):
        for alpha in [a for a in work if a[0] == e1]:
            c = work.pop(alpha)
            if c == 0.0:
                continue
            q = (alpha[0] - 2,) + alpha[1:]
            quot[q] = quot.get(q, 0.0) + c
            for j in range(1, d):
                t = list(q)
                t[j] += 2
                t = tuple(t)
                work[t] = work.get(t, 0.0) - c
    return HomogeneousPolynomial(d, P.degree - 2, quot), HomogeneousPolynomial(d, P.degree, work)


def is_divisible(P, rel_tol=ZERO_REL):
    _, R = divide_by_r2(P)
    scale = P.norm()
    return R.norm() <= rel_tol * scale if scale > 0 else True


def transform_poly(P, Q):
    """Coefficients of ``xi -> P(Q xi)``."""
    M = getattr(Q, "matrix", Q)
    if M.shape != (P.dim, P.dim):
        raise ValueError("dimension mismatch")
    mats = mono.substitution_matrices(M, P.degree)
    return HomogeneousPolynomial.from_vector(P.dim, P.degree, mats[P.degree] @ P.to_vector())


class NullspaceAmbiguity(ArithmeticError):
    """A singular value sits too close to the rank threshold to decide."""


def _nullspace(A, scale=None, rel=ZERO_REL, gap=100.0):
    """Right nullspace of ``A``; singular values below ``rel * scale`` count as zero.

    ``scale`` defaults to the largest singular value.
    """
    if A.size == 0:
        return np.eye(A.shape[1])
    _, s, vt = np.linalg.svd(A)
    s = np.concatenate([s, np.zeros(A.shape[1] - len(s))])
    if scale is None:
        scale = s.max()
    if scale == 0.0:
        return np.eye(A.shape[1])
    thr = rel * scale
    if np.any((s > thr / gap) & (s < thr * gap)):
        raise NullspaceAmbiguity("singular value too close to the nullspace threshold")
    rank = int(np.sum(s > thr))
    return vt[rank:].T


def invariant_space(G, degree):
    """Orthonormal coefficient basis of degree-``degree`` polynomials with ``P(Q xi) = P(xi)`` for all ``Q`` in ``G``."""
    if not 0 <= degree <= 12:
        raise ValueError("degree must lie in 0..12")
    n = len(mono.monomials(G.dim, degree))
    eye = np.eye(n)
    rows = [mono.substitution_matrices(g.matrix, degree)[degree] - eye for g in G.elements]
    basis = _nullspace(np.vstack(rows))
    return [HomogeneousPolynomial.from_vector(G.dim, degree, _clean(basis[:, j])) for j in range(basis.shape[1])]


def _clean(v, rel=1e-13):
    v = v.copy()
    v[np.abs(v) < rel * np.abs(v).max()] = 0.0
    return v


def divisible_subspace(basis):
    """Basis of the polynomials in ``span(basis)`` that are divisible by ``|xi|^2``."""
    if not basis:
        return []
    remainders = np.column_stack([divide_by_r2(p)[1].to_vector() for p in basis])
    # basis vectors have unit coefficient norm
    coords = _nullspace(remainders, scale=1.0)
    mat = np.column_stack([p.to_vector() for p in basis])
    P0 = basis[0]
    return [HomogeneousPolynomial.from_vector(P0.dim, P0.degree, _clean(mat @ coords[:, j]))
            for j in range(coords.shape[1])]


def in_span(P, basis, rel_tol=ZERO_REL):
    """True when ``P`` lies in the span of ``basis`` (orthonormal coefficient vectors)."""
    v = P.to_vector()
    if not basis:
        return not np.any(v)
    B = np.column_stack([b.to_vector() for b in basis])
    resid = v - B @ (B.T @ v)
    return np.abs(resid).max() <= rel_tol * max(np.abs(v).max(), 1e-300)


# -- checks ---------------------------------------------------------------------

def check_orthogonality(a, rel_tol=ZERO_REL):
    """``int a_h a_k dx = c delta_hk``; equivalent to divisibility of ``P_0(a)``."""
    G = gram_matrix(a)
    scale = np.abs(G).max()
    if scale == 0.0:
        return True
    c = np.trace(G) / a.dim
    return bool(np.abs(G - c * np.eye(a.dim)).max() <= rel_tol * scale)


def time_decay_sides(u, m, j):
    """Both sides (degree ``m+3``) of the j-th time-decay identity for ``u``."""
    d = u.dim
    lhs, rhs = {}, {}
    r2 = HomogeneousPolynomial.r2_power(d, 1)
    rhs_poly = HomogeneousPolynomial.zero(d, m + 1)
    for alpha in mono.monomials(d, m):
        w = 1.0 / _alpha_factorial(alpha)
        for h in range(d):
            for k in range(d):
                c = w * product_moment(u, u, h, k, alpha)
                if c:
                    key = list(alpha)
                    key[j] += 1
                    key[h] += 1
                    key[k] += 1
                    lhs[tuple(key)] = lhs.get(tuple(key), 0.0) + c
            c = w * product_moment(u, u, h, j, alpha)
            if c:
                key = list(alpha)
                key[h] += 1
                rhs_poly = rhs_poly + HomogeneousPolynomial(d, m + 1, {tuple(key): c})
    return HomogeneousPolynomial(d, m + 3, lhs), rhs_poly.times(r2)


def check_time_decay_identities(u, m, rel_tol=ZERO_REL):
    if u.is_scalar:
        raise ValueError("needs a vector field")
    if not 0 <= m <= 8:
        raise ValueError("m must lie in 0..8")
    for j in range(u.dim):
        lhs, rhs = time_decay_sides(u, m, j)
        scale = max(lhs.norm(), rhs.norm())
        if scale and (lhs - rhs).norm() > rel_tol * scale:
            return False
    return True


def moment_orders(W, max_order):
    """Per order ``k``: max over components and ``|alpha| = k`` of ``|moment| / scale``."""
    out = []
    for k in range(max_order + 1):
        worst = 0.0
        for alpha in mono.monomials(W.dim, k):
            for i in range(W.n_components):
                s = moment_scale(W, i, alpha)
                if s:
                    worst = max(worst, abs(moment(W, i, alpha)) / s)
        out.append(worst)
    return out


def vorticity_vanish_order(W, max_order, rel_tol=ZERO_REL):
    """Largest ``k <= max_order`` with all moments of total order ``<= k`` negligible; -1 if the integral is not."""
    k = -1
    for ratio in moment_orders(W, max_order):
        if ratio > rel_tol:
            break
        k += 1
    return k


# -- decay catalog --------------------------------------------------------------

_PRISMATIC = ("C_n", "D_n", "S_2n", "C_nh", "C_nv", "D_nh", "D_nd")


@dataclass(frozen=True)
class DecayPrediction:
    """Predicted decay of a flow invariant under a catalog group.

    ``space_exponent`` is gamma in ``|u(x,t)| = O(|x|**-gamma)``;
    ``vorticity_moment_order`` is the largest order of vanishing vorticity
    moments (``None`` when no time-decay statement is available).
    """

    group: str
    dim: int
    space_exponent: int
    vorticity_moment_order: object = None

    @property
    def n(self):
        return None if self.vorticity_moment_order is None else self.vorticity_moment_order + 1

    def time_exponent(self, p=inf):
        """Exponent ``e`` in ``||u(t)||_p <= C (1+t)**e``; ``None`` if no claim."""
        if self.n is None:
            return None
        inv_p = 0.0 if not isfinite(p) else 1.0 / p
        if self.dim == 2:
            return -(self.n + 1) / 2 + inv_p
        return -(self.n + 2) / 2 + 1.5 * inv_p

    def vorticity_time_exponent(self, p=inf):
        if self.n is None:
            return None
        inv_p = 0.0 if not isfinite(p) else 1.0 / p
        return -(self.dim + self.n) / 2 + self.dim * inv_p / 2


def predicted_rates(name, dim=3, n=None):
    """Decay catalog entry for a group family."""
    if dim == 2:
        if name not in ("C_n", "D_n"):
            raise ValueError(f"unknown 2-d group {name!r}")
        if n is None or n < 1:
            raise ValueError("planar groups need n >= 1")
        # below n = 3 the symmetry gives nothing beyond the generic |x|^-3
        gamma = max(n + 1, 3)
        if name == "C_n":
            return DecayPrediction(f"C_{n}(2d)", 2, gamma, None)
        return DecayPrediction(f"D_{n}(2d)", 2, gamma, n - 1)
    if dim != 3:
        raise ValueError("dim must be 2 or 3")
    if name in _PRISMATIC:
        return DecayPrediction(name, 3, 4, None)
    table = {
        "T": (5, 2), "T_d": (5, 2),
        "O": (6, 3), "T_h": (6, 3), "O_h": (6, 3),
        "Y": (8, 5), "Y_h": (8, 5),
    }
    if name not in table:
        raise ValueError(f"unknown group {name!r}")
    gamma, order = table[name]
    return DecayPrediction(name, 3, gamma, order)
