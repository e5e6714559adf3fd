"""Polynomial-Gaussian fields: exact calculus, orthogonal actions and group averaging.

A :class:`PolyGaussianField` has components ``sum_alpha c_alpha x**alpha *
exp(-lam |x|**2)``.  Differentiation, composition with orthogonal maps and
group averaging all stay inside this class, so every operation is exact up to
floating-point rounding of the coefficients.
"""
import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from . import _monomials as mono
from .groups import standard_group

MAX_DEGREE = 16
PRUNE_REL = 1e-14


class SymmetrizationError(ValueError):
    """Group averaging cancelled (almost) the whole field."""


def _prune(comps):
    scale = max((abs(c) for comp in comps for c in comp.values()), default=0.0)
    cut = PRUNE_REL * scale
    return tuple({a: float(c) for a, c in comp.items() if abs(c) > cut and c != 0.0} for comp in comps)


@dataclass(frozen=True, eq=False)
class PolyGaussianField:
    dim: int
    components: tuple
    envelope: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if not self.envelope > 0:
            raise ValueError("envelope must be positive")
        comps = []
        for comp in self.components:
            clean = {}
            for alpha, c in dict(comp).items():
                alpha = tuple(int(a) for a in alpha)
                if len(alpha) != self.dim or min(alpha) < 0:
                    raise ValueError(f"bad multi-index {alpha} for dim {self.dim}")
                if sum(alpha) > MAX_DEGREE:
                    raise ValueError(f"monomial degree {sum(alpha)} exceeds the cap {MAX_DEGREE}")
                clean[alpha] = clean.get(alpha, 0.0) + float(c)
            comps.append(clean)
        if len(comps) not in (1, self.dim):
            raise ValueError("a field has 1 (scalar) or dim (vector) components")
        object.__setattr__(self, "components", _prune(comps))
        object.__setattr__(self, "envelope", float(self.envelope))

    # -- construction -------------------------------------------------
    @classmethod
    def zero(cls, dim, n_components=None, envelope=1.0):
        n = dim if n_components is None else n_components
        return cls(dim, tuple({} for _ in range(n)), envelope)

    @classmethod
    def from_polynomials(cls, dim, polys, envelope=1.0):
        """Build from ``[{alpha: coeff}, ...]`` (one dict per component)."""
        return cls(dim, tuple(polys), envelope)

    # -- basic properties ----------------------------------------------
    @property
    def n_components(self):
        return len(self.components)

    @property
    def is_scalar(self):
        return self.n_components == 1

    @property
    def degree(self):
        return max((sum(a) for comp in self.components for a in comp), default=0)

    def is_zero(self):
        return not any(self.components)

    def coeff_norm(self):
        """Max-abs coefficient (the size measure used by all tolerance checks)."""
        return max((abs(c) for comp in self.components for c in comp.values()), default=0.0)

    def _combine(self, other, sign):
        if (self.dim, self.n_components) != (other.dim, other.n_components):
            raise ValueError("fields have different shapes")
        if abs(self.envelope - other.envelope) > 1e-15 * self.envelope:
            raise ValueError("fields have different Gaussian envelopes")
        comps = []
        for a, b in zip(self.components, other.components):
            c = dict(a)
            for alpha, v in b.items():
                c[alpha] = c.get(alpha, 0.0) + sign * v
            comps.append(c)
        return PolyGaussianField(self.dim, tuple(comps), self.envelope)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, s):
        return PolyGaussianField(
            self.dim, tuple({a: s * c for a, c in comp.items()} for comp in self.components), self.envelope
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def component(self, i):
        return PolyGaussianField(self.dim, (self.components[i],), self.envelope)

    def distance(self, other):
        """Max-abs coefficient difference."""
        return (self - other).coeff_norm()

    def __repr__(self):
        kind = "scalar" if self.is_scalar else "vector"
        nterms = sum(len(c) for c in self.components)
        return f"<PolyGaussianField {kind} dim={self.dim} terms={nterms} degree={self.degree} envelope={self.envelope}>"

    # -- serialization --------------------------------------------------
    def to_dict(self):
        return {
            "dim": self.dim,
            "envelope": self.envelope,
            "components": [
                [{"alpha": list(a), "coeff": c} for a, c in sorted(comp.items(), reverse=True)]
                for comp in self.components
            ],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            comps = tuple(
                {tuple(term["alpha"]): term["coeff"] for term in comp} for comp in data["components"]
            )
            return cls(int(data["dim"]), comps, float(data.get("envelope", 1.0)))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed field description: {exc}") from exc

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def scalar_field(dim, poly, envelope=1.0):
    return PolyGaussianField(dim, (poly,), envelope)


def vector_field(dim, polys, envelope=1.0):
    return PolyGaussianField(dim, tuple(polys), envelope)


# -- evaluation ---------------------------------------------------------------

def evaluate(f, x):
    """Evaluate ``f`` at points ``x`` of shape ``(..., dim)``.

    Returns shape ``(..., n_components)``; a single point gives a 1-d array.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != f.dim:
        raise ValueError(f"points must have trailing dimension {f.dim}")
    env = np.exp(-f.envelope * np.sum(x * x, axis=-1))
    out = np.zeros(x.shape[:-1] + (f.n_components,))
    for i, comp in enumerate(f.components):
        acc = np.zeros(x.shape[:-1])
        for alpha, c in comp.items():
            term = np.full(x.shape[:-1], c)
            for j, a in enumerate(alpha):
                if a:
                    term = term * x[..., j] ** a
            acc = acc + term
        out[..., i] = acc * env
    return out


# -- calculus -----------------------------------------------------------------

def partial(f, i):
    """Exact partial derivative along x_i of every component."""
    lam = f.envelope
    comps = []
    for comp in f.components:
        out = {}
        for alpha, c in comp.items():
            if alpha[i]:
                lower = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
                out[lower] = out.get(lower, 0.0) + alpha[i] * c
            upper = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1:]
            out[upper] = out.get(upper, 0.0) - 2.0 * lam * c
        comps.append(out)
    return PolyGaussianField(f.dim, tuple(comps), lam)


def gradient(f):
    if not f.is_scalar:
        raise ValueError("gradient needs a scalar field")
    return PolyGaussianField(f.dim, tuple(partial(f, i).components[0] for i in range(f.dim)), f.envelope)


def curl(b):
    if b.dim != 3 or b.is_scalar:
        raise ValueError("curl is defined for 3-d vector fields")
    d = [[partial(b.component(j), i) for j in range(3)] for i in range(3)]  # d[i][j] = d_i b_j
    comps = (d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0])
    return PolyGaussianField(3, tuple(c.components[0] for c in comps), b.envelope)


def curl_2d(a):
    """Scalar vorticity d1 a2 - d2 a1 of a planar vector field."""
    if a.dim != 2 or a.is_scalar:
        raise ValueError("curl_2d needs a 2-d vector field")
    return partial(a.component(1), 0) - partial(a.component(0), 1)


def perp_gradient(psi):
    """Planar velocity ``(-d2 psi, d1 psi)`` of a scalar stream function."""
    if psi.dim != 2 or not psi.is_scalar:
        raise ValueError("perp_gradient needs a 2-d scalar field")
    return PolyGaussianField(2, ((-partial(psi, 1)).components[0], partial(psi, 0).components[0]), psi.envelope)


def divergence(f):
    if f.is_scalar:
        raise ValueError("divergence needs a vector field")
    out = PolyGaussianField.zero(f.dim, 1, f.envelope)
    for i in range(f.dim):
        out = out + partial(f.component(i), i)
    return out


# -- orthogonal actions ---------------------------------------------------------

@lru_cache(maxsize=4096)
def _substitution_cached(key, dim, max_degree):
    P = np.frombuffer(key, dtype=float).reshape(dim, dim)
    return mono.substitution_matrices(P, max_degree)


def _substitution(P, max_degree):
    m = np.ascontiguousarray(P, dtype=float)
    return _substitution_cached(m.tobytes(), m.shape[0], max_degree)


def _to_graded(comp, dim, max_degree):
    vecs = [np.zeros(len(mono.monomials(dim, d))) for d in range(max_degree + 1)]
    for alpha, c in comp.items():
        d = sum(alpha)
        vecs[d][mono.monomial_index(dim, d)[alpha]] += c
    return vecs


def _from_graded(vecs, dim):
    out = {}
    for d, v in enumerate(vecs):
        for j in np.flatnonzero(v):
            out[mono.monomials(dim, d)[j]] = float(v[j])
    return out


def _compose(f, P):
    """Coefficient vectors (per component, per degree) of ``x -> f(Px)``."""
    deg = f.degree
    mats = _substitution(P, deg)
    return [[mats[d] @ v for d, v in enumerate(_to_graded(comp, f.dim, deg))] for comp in f.components]


def transform(f, P, mode="velocity"):
    """Pull ``f`` back along ``P``.

    velocity: ``x -> P^T f(Px)``; pseudo: ``x -> det(P) P^T f(Px)``.  Scalars
    skip the ``P^T`` factor.  Invariance of ``f`` under ``P`` means
    ``transform(f, P, mode) == f``.
    """
    if mode not in ("velocity", "pseudo"):
        raise ValueError(f"mode must be 'velocity' or 'pseudo', got {mode!r}")
    M = getattr(P, "matrix", P)
    if M.shape != (f.dim, f.dim):
        raise ValueError("transform dimension does not match the field")
    sign = float(np.sign(np.linalg.det(M))) if mode == "pseudo" else 1.0
    composed = _compose(f, M)
    if f.is_scalar:
        new = [[sign * v for v in composed[0]]]
    else:
        # component i of P^T g is sum_j P[j, i] g_j
        new = [
            [sign * sum(M[j, i] * composed[j][d] for j in range(f.dim)) for d in range(len(composed[0]))]
            for i in range(f.dim)
        ]
    return PolyGaussianField(f.dim, tuple(_from_graded(v, f.dim) for v in new), f.envelope)


def _group_average_vectors(f, G, mode):
    deg = f.degree
    base = [_to_graded(comp, f.dim, deg) for comp in f.components]
    acc = [[np.zeros_like(v) for v in comp] for comp in base]
    for g in G.elements:
        M = g.matrix
        mats = _substitution(M, deg)
        sign = g.det_sign if mode == "pseudo" else 1
        composed = [[mats[d] @ v for d, v in enumerate(comp)] for comp in base]
        for i in range(f.n_components):
            for d in range(deg + 1):
                if f.is_scalar:
                    acc[i][d] += sign * composed[0][d]
                else:
                    acc[i][d] += sign * sum(M[j, i] * composed[j][d] for j in range(f.dim))
    return [[v / G.order for v in comp] for comp in acc]


def symmetrize(f, G, mode="velocity"):
    """Average of ``transform(f, P, mode)`` over ``P`` in ``G``: a projection onto invariant fields."""
    if G.dim != f.dim:
        raise ValueError("group and field dimensions differ")
    if mode not in ("velocity", "pseudo"):
        raise ValueError(f"mode must be 'velocity' or 'pseudo', got {mode!r}")
    avg = _group_average_vectors(f, G, mode)
    out = PolyGaussianField(f.dim, tuple(_from_graded(v, f.dim) for v in avg), f.envelope)
    mass_in = f.coeff_norm()
    if mass_in > 0 and out.coeff_norm() < 1e-12 * mass_in:
        raise SymmetrizationError("symmetrization annihilated the field; choose another seed")
    return out


def invariance_defect(f, G, mode="velocity"):
    """Max over ``G`` of the coefficient distance between ``f`` and its transform."""
    return max((transform(f, g, mode).distance(f) for g in G.elements), default=0.0)


def is_invariant(f, G, mode="velocity", tol=1e-10):
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = f.coeff_norm()
    if scale == 0.0:
        return True
    return invariance_defect(f, G, mode) <= tol * scale


# -- grids ----------------------------------------------------------------------

def grid_axis(L, N):
    """Cell-aligned periodic coordinates ``-L + 2L j / N``."""
    return -L + 2.0 * L * np.arange(N) / N


def _check_grid(L, N):
    if not L > 0:
        raise ValueError("L must be positive")
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of two, got {N}")


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples on the periodic grid ``[-L, L)**dim``; ``values`` has shape ``(N,)*dim + (n_components,)``."""

    dim: int
    L: float
    N: int
    values: np.ndarray

    def __post_init__(self):
        _check_grid(self.L, self.N)
        if self.values.shape[: self.dim] != (self.N,) * self.dim or self.values.ndim != self.dim + 1:
            raise ValueError(f"values shape {self.values.shape} does not match the grid")

    @property
    def n_components(self):
        return self.values.shape[-1]

    @property
    def spacing(self):
        return 2.0 * self.L / self.N

    def axis(self):
        return grid_axis(self.L, self.N)

    def radius(self):
        x = self.axis()
        mesh = np.meshgrid(*([x] * self.dim), indexing="ij")
        return np.sqrt(sum(m * m for m in mesh))

    def magnitude(self):
        return np.sqrt(np.sum(self.values**2, axis=-1))


def sample_to_grid(f, L, N):
    """Evaluate ``f`` on the grid by separable tensor contraction."""
    _check_grid(L, N)
    x = grid_axis(L, N)
    deg = f.degree
    # V[a, j] = x_j**a * exp(-lam x_j**2)
    V = x[None, :] ** np.arange(deg + 1)[:, None] * np.exp(-f.envelope * x * x)[None, :]
    out = np.zeros((N,) * f.dim + (f.n_components,))
    for i, comp in enumerate(f.components):
        C = np.zeros((deg + 1,) * f.dim)
        for alpha, c in comp.items():
            C[alpha] += c
        if f.dim == 2:
            out[..., i] = V.T @ C @ V
        else:
            t = np.tensordot(C, V, axes=([2], [0]))  # (a, b, k)
            t = np.tensordot(t, V, axes=([1], [0]))  # (a, k, j)
            t = np.tensordot(V, t, axes=([0], [0]))  # (i, k, j)
            out[..., i] = t.transpose(0, 2, 1)
    return GridField(f.dim, float(L), int(N), out)


# -- built-in fields ------------------------------------------------------------

def _cyclic(poly):
    """Components (p(x1,x2,x3), p(x2,x3,x1), p(x3,x1,x2)) as exponent dicts."""
    out = []
    for shift in range(3):
        comp = {}
        for alpha, c in poly.items():
            # p(x2,x3,x1): variable slot k receives x_{k+shift}
            beta = [0, 0, 0]
            for k, a in enumerate(alpha):
                beta[(k + shift) % 3] += a
            comp[tuple(beta)] = c
        out.append(comp)
    return out


def _bar_b():
    return vector_field(3, _cyclic({(1, 2, 0): 1.0, (1, 0, 2): -1.0}))


def _tilde_b():
    return vector_field(3, _cyclic({(0, 3, 1): 1.0, (0, 1, 3): -1.0}))


def _bar_a():
    # first component -2 x2 x3 (2 + 2 x1^2 - x2^2 - x3^2)
    first = {(0, 1, 1): -4.0, (2, 1, 1): -4.0, (0, 3, 1): 2.0, (0, 1, 3): 2.0}
    return vector_field(3, _cyclic(first))


def _tilde_a():
    # x1 (2x1^2 - 3x2^2 - 2x1^2x2^2 + 2x2^4 - 3x3^2 + 2x3^4 - 2x1^2x3^2)
    first = {
        (3, 0, 0): 2.0, (1, 2, 0): -3.0, (3, 2, 0): -2.0, (1, 4, 0): 2.0,
        (1, 0, 2): -3.0, (1, 0, 4): 2.0, (3, 0, 2): -2.0,
    }
    return vector_field(3, _cyclic(first))


def prism_mu(n):
    """Scalar ``Im((x1 + i x2)**(2n)) exp(-|x|^2)``: odd in x2, even in x3, invariant under rotation by pi/n."""
    if int(n) != n or n < 1:
        raise ValueError("prism fields need a positive integer n")
    m = 2 * int(n)
    if m > MAX_DEGREE:
        raise ValueError(f"n={n} exceeds the degree cap")
    poly = {}
    # Im (x1 + i x2)^m = sum_{k odd} C(m,k) x1^(m-k) x2^k i^(k-1)
    for k in range(1, m + 1, 2):
        poly[(m - k, k, 0)] = comb(m, k) * (-1) ** ((k - 1) // 2)
    return scalar_field(3, poly)


def prism_a(n):
    """Velocity ``(-d2 mu, d1 mu, 0)`` built from :func:`prism_mu`; invariant under D_(2n)h."""
    mu = prism_mu(n)
    return vector_field(3, [(-partial(mu, 1)).components[0], partial(mu, 0).components[0], {}])


# Even-degree vector seed; its Y_h pseudo-average is a nonzero potential with
# nonzero curl (checked in the test suite).
ICOSAHEDRAL_SEED = {
    0: {(2, 1, 1): 1.0, (0, 3, 1): -1.0, (4, 1, 1): 0.5, (2, 3, 1): -0.5, (0, 5, 1): 0.25},
    1: {},
    2: {},
}


def icosahedral_potential():
    seed = vector_field(3, [ICOSAHEDRAL_SEED[i] for i in range(3)])
    return symmetrize(seed, standard_group("Y_h"), mode="pseudo")


def icosahedral_a():
    return curl(icosahedral_potential())


def _complex_power(m):
    """Real and imaginary parts of ``(x1 + i x2)**m`` as exponent dicts."""
    re, im = {}, {}
    for k in range(m + 1):
        c = comb(m, k) * (-1) ** (k // 2)
        (re if k % 2 == 0 else im)[(m - k, k)] = float(c)
    return re, im


def planar_vorticity(kind, n=None):
    """Scalar 2-d vorticities.

    ``radial``: ``exp(-|x|^2)``.  ``dihedral``: ``Im(z**n) exp(-|x|^2)`` with
    ``z = x1 + i x2``, pseudo-invariant under D_n.  ``cyclic``:
    ``(Im(z**n) + Re(z**(2n)) / 4) exp(-|x|^2)``, invariant under C_n but not
    under any reflection.
    """
    if kind == "radial":
        return scalar_field(2, {(0, 0): 1.0})
    if n is None or int(n) != n or n < 1:
        raise ValueError(f"{kind} vorticity needs a positive integer n")
    n = int(n)
    if kind == "dihedral":
        if n > MAX_DEGREE:
            raise ValueError(f"n={n} exceeds the degree cap")
        return scalar_field(2, _complex_power(n)[1])
    if kind == "cyclic":
        if 2 * n > MAX_DEGREE:
            raise ValueError(f"n={n} exceeds the degree cap")
        poly = dict(_complex_power(n)[1])
        for alpha, c in _complex_power(2 * n)[0].items():
            poly[alpha] = poly.get(alpha, 0.0) + 0.25 * c
        return scalar_field(2, poly)
    raise ValueError(f"unknown planar vorticity {kind!r}")


def builtin_field(name, n=None):
    """Named example fields: ``bar_b, tilde_b, bar_a, tilde_a, bar_plus_tilde_a,
    prism_mu, prism_a, icosahedral_b, icosahedral_a`` and the planar
    ``omega_radial, omega_dihedral, omega_cyclic`` (see :func:`planar_vorticity`)."""
    simple = {
        "bar_b": _bar_b,
        "tilde_b": _tilde_b,
        "bar_a": _bar_a,
        "tilde_a": _tilde_a,
        "bar_plus_tilde_a": lambda: _bar_a() + _tilde_a(),
        "icosahedral_b": icosahedral_potential,
        "icosahedral_a": icosahedral_a,
    }
    if name in simple:
        return simple[name]()
    if name.startswith("omega_"):
        return planar_vorticity(name[len("omega_"):], n)
    if name in ("prism_mu", "prism_a"):
        if n is None:
            raise ValueError(f"{name} needs n")
        return prism_mu(n) if name == "prism_mu" else prism_a(n)
    raise ValueError(f"unknown builtin field {name!r}")


BUILTIN_NAMES = (
    "bar_b", "tilde_b", "bar_a", "tilde_a", "bar_plus_tilde_a",
    "prism_mu", "prism_a", "icosahedral_b", "icosahedral_a",
    "omega_radial", "omega_dihedral", "omega_cyclic",
)
