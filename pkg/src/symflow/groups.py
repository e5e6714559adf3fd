"""Finite subgroups of O(2) and O(3) built from explicit generator matrices."""
from dataclasses import dataclass, field
from math import cos, pi, sin, sqrt

import numpy as np

ORTHO_TOL = 1e-12
MATCH_TOL = 1e-9
MAX_ORDER = 1000
MAX_N = 64


@dataclass(frozen=True, eq=False)
class OrthogonalTransform:
    """An orthogonal matrix together with its determinant sign."""

    matrix: np.ndarray
    label: str = ""
    det_sign: int = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
            raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {m.shape}")
        err = np.abs(m @ m.T - np.eye(m.shape[0])).max()
        if err > ORTHO_TOL:
            raise ValueError(f"matrix is not orthogonal (|PP^T - I| = {err:.2e})")
        det = np.linalg.det(m)
        sign = 1 if det > 0 else -1
        if abs(det - sign) > ORTHO_TOL:
            raise ValueError(f"determinant {det!r} is not +-1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "det_sign", sign)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __matmul__(self, other):
        return OrthogonalTransform(self.matrix @ other.matrix)

    def inverse(self):
        return OrthogonalTransform(self.matrix.T)

    def close_to(self, other, tol=MATCH_TOL):
        return self.dim == other.dim and np.abs(self.matrix - other.matrix).max() <= tol

    def __repr__(self):
        name = f" {self.label}" if self.label else ""
        return f"<OrthogonalTransform{name} det={self.det_sign:+d}\n{self.matrix}>"


def _rotation_z(theta, z_sign=1.0):
    c, s = cos(theta), sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, z_sign]])


_S5 = sqrt(5.0)

_FIXED = {
    "U": np.diag([1.0, -1.0, -1.0]),
    "S": np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    "V": np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]]),
    "J": np.array([
        [0.5, -(_S5 + 1) / 4, (_S5 - 1) / 4],
        [(_S5 + 1) / 4, (_S5 - 1) / 4, -0.5],
        [(_S5 - 1) / 4, 0.5, (_S5 + 1) / 4],
    ]),
    "I": -np.eye(3),
    "W2": np.diag([1.0, -1.0, 1.0]),
    "W3": np.diag([1.0, 1.0, -1.0]),
    "Z": np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    "tau2d": np.diag([1.0, -1.0]),
}
_ALIASES = {"R̃": "RI", "Rtilde": "RI", "τ2d": "tau2d", "R2d(n)": "R2d"}
PARAMETRIC = ("Rn", "RI", "R2d")
GENERATOR_KINDS = tuple(_FIXED) + PARAMETRIC


def _check_n(n, kind):
    if n is None:
        raise ValueError(f"generator {kind!r} needs a parameter n")
    if int(n) != n or not 1 <= n <= MAX_N:
        raise ValueError(f"n must be an integer in [1, {MAX_N}], got {n!r}")
    return int(n)


def make_generator(kind, n=None):
    """Return one of the named generator matrices.

    ``Rn`` is the rotation by 2*pi/n about the x3-axis, ``RI`` the
    rotation-inversion by pi/n (rotation by pi/n composed with x3 -> -x3),
    ``R2d`` the planar rotation by 2*pi/n and ``tau2d`` the planar reflection
    x2 -> -x2.  The remaining kinds are fixed 3x3 matrices.
    """
    kind = _ALIASES.get(kind, kind)
    if kind in _FIXED:
        return OrthogonalTransform(_FIXED[kind], label=kind)
    if kind == "Rn":
        n = _check_n(n, kind)
        return OrthogonalTransform(_rotation_z(2 * pi / n), label=f"R{n}")
    if kind == "RI":
        n = _check_n(n, kind)
        return OrthogonalTransform(_rotation_z(pi / n, -1.0), label=f"RI{n}")
    if kind == "R2d":
        n = _check_n(n, kind)
        c, s = cos(2 * pi / n), sin(2 * pi / n)
        return OrthogonalTransform(np.array([[c, -s], [s, c]]), label=f"R2d{n}")
    raise ValueError(f"unknown generator kind {kind!r}")


def identity(dim):
    return OrthogonalTransform(np.eye(dim), label="1")


@dataclass(frozen=True, eq=False)
class SymmetryGroup:
    name: str
    dim: int
    generators: tuple
    elements: tuple

    @property
    def order(self):
        return len(self.elements)

    def matrices(self):
        """Stacked element matrices, shape ``(order, dim, dim)``."""
        return np.stack([g.matrix for g in self.elements])

    def contains(self, P, tol=MATCH_TOL):
        if P.dim != self.dim:
            return False
        diff = np.abs(self.matrices() - P.matrix).reshape(self.order, -1).max(axis=1)
        return bool(diff.min() <= tol)

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return self.order

    def __repr__(self):
        return f"<SymmetryGroup {self.name} dim={self.dim} order={self.order}>"


def _sort_key(m):
    return tuple(np.round(m, 9).ravel() + 0.0)


def close_group(generators, name=""):
    """Breadth-first closure of the generators under matrix products."""
    generators = list(generators)
    if not generators:
        raise ValueError("need at least one generator")
    dim = generators[0].dim
    if any(g.dim != dim for g in generators):
        raise ValueError("generators have mixed dimensions")
    gens = [g.matrix for g in generators]
    found = [np.eye(dim)]
    stack = np.eye(dim)[None]
    frontier = [np.eye(dim)]
    while frontier:
        new = []
        for m in frontier:
            for g in gens:
                prod = g @ m
                diffs = np.abs(stack - prod).reshape(len(stack), -1).max(axis=1)
                if diffs.min() > MATCH_TOL:
                    found.append(prod)
                    new.append(prod)
                    stack = np.concatenate([stack, prod[None]])
                    if len(found) > MAX_ORDER:
                        raise ValueError("not a finite group at this tolerance")
        frontier = new
    found.sort(key=_sort_key)
    elements = tuple(OrthogonalTransform(m) for m in found)
    return SymmetryGroup(name=name, dim=dim, generators=tuple(generators), elements=elements)


_CATALOG = {
    # name: (generator kinds, order formula, needs n)
    "C_n": (lambda n: [("Rn", n)], lambda n: n, True),
    "D_n": (lambda n: [("Rn", n), ("U", None)], lambda n: 2 * n, True),
    "S_2n": (lambda n: [("RI", n)], lambda n: 2 * n, True),
    "C_nh": (lambda n: [("Rn", n), ("RIn2", n)], lambda n: 2 * n, True),
    "C_nv": (lambda n: [("Rn", n), ("W2", None)], lambda n: 2 * n, True),
    "D_nh": (lambda n: [("Rn", n), ("W2", None), ("W3", None)], lambda n: 4 * n, True),
    "D_nd": (lambda n: [("RI", n), ("W2", None)], lambda n: 4 * n, True),
    "T": (lambda n: [("S", None), ("U", None)], lambda n: 12, False),
    "T_h": (lambda n: [("S", None), ("U", None), ("I", None)], lambda n: 24, False),
    "T_d": (lambda n: [("S", None), ("U", None), ("Z", None)], lambda n: 24, False),
    "O": (lambda n: [("S", None), ("U", None), ("V", None)], lambda n: 24, False),
    "O_h": (lambda n: [("S", None), ("V", None), ("I", None)], lambda n: 48, False),
    "Y": (lambda n: [("S", None), ("J", None)], lambda n: 60, False),
    "Y_h": (lambda n: [("S", None), ("J", None), ("I", None)], lambda n: 120, False),
}
_CATALOG_2D = {
    "C_n": (lambda n: [("R2d", n)], lambda n: n, True),
    "D_n": (lambda n: [("R2d", n), ("tau2d", None)], lambda n: 2 * n, True),
}
GROUP_NAMES = tuple(_CATALOG)


def _generator(kind, n):
    if kind == "RIn2":
        # rotation-inversion by 2*pi/n
        return OrthogonalTransform(_rotation_z(2 * pi / n, -1.0), label=f"RI~{n}")
    return make_generator(kind, n)


def _lookup(name, n, dim):
    table = {2: _CATALOG_2D, 3: _CATALOG}.get(dim)
    if table is None:
        raise ValueError(f"dim must be 2 or 3, got {dim!r}")
    if name not in table:
        raise ValueError(f"unknown group {name!r} in dimension {dim}")
    gens, order, needs_n = table[name]
    if needs_n:
        n = _check_n(n, name)
    return gens, order, needs_n, n


def catalog_order(name, n=None, dim=3):
    _, order, _, n = _lookup(name, n, dim)
    return order(n)


def group_label(name, n=None, dim=3):
    _, _, needs_n, n = _lookup(name, n, dim)
    if needs_n:
        name = name.replace("_2n", f"_{2 * n}").replace("_n", f"_{n}")
    return name + ("(2d)" if dim == 2 else "")


def standard_group(name, n=None, dim=3):
    """Build a catalog group, e.g. ``standard_group("Y_h")`` or ``standard_group("D_n", 4, dim=2)``."""
    gens, order, _, n = _lookup(name, n, dim)
    group = close_group([_generator(k, m) for k, m in gens(n)], name=group_label(name, n, dim))
    if group.order != order(n):
        raise RuntimeError(f"{group.name}: closure gave order {group.order}, expected {order(n)}")
    return group


def trivial_group(dim=3):
    return close_group([identity(dim)], name="1")


def is_subgroup(g, h, tol=MATCH_TOL):
    """True when every element of ``g`` matches an element of ``h``."""
    if g.dim != h.dim:
        raise ValueError("groups live in different dimensions")
    hm = h.matrices()
    for P in g.matrices():
        if np.abs(hm - P).reshape(len(hm), -1).max(axis=1).min() > tol:
            return False
    return True
