"""Far-field response of the 3-d flow at early times, evaluated in free space.

For data ``a`` the solution satisfies ``u(t) - exp(t Laplacian) a = t grad q + O(t**2)``
away from the data, with ``q = Laplacian^-1 d_h d_k (a_h a_k)``.  The pressure
gradient is evaluated here by Gauss-Hermite quadrature of the kernel
``grad d_h d_k Gamma``, ``Gamma = -1/(4 pi |x|)``, at arbitrary far points, so
no periodic box or grid cutoff enters the tail measurement.
"""
from collections import namedtuple
from functools import lru_cache

import numpy as np

from .diagnostics import fit_profile
from .fields import evaluate

FarTail = namedtuple("FarTail", "exponent valid radii profile")


@lru_cache(maxsize=8)
def _hermite_1d(n, lam):
    x, w = np.polynomial.hermite.hermgauss(n)
    s = 1.0 / np.sqrt(lam)
    return x * s, w * s


def product_nodes(a, nodes=32, prune=1e-17):
    """Quadrature nodes and the tensor ``a_h a_k`` (times weights) for ``int f(y) a_h a_k(y) dy``."""
    lam = 2.0 * a.envelope
    x, w = _hermite_1d(nodes, lam)
    Y = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
    W = np.einsum("i,j,k->ijk", w, w, w).ravel()
    # polynomial part of a: undo the envelope that evaluate() applies
    poly = evaluate(a, Y) * np.exp(a.envelope * (Y * Y).sum(axis=1))[:, None]
    S = np.einsum("nh,nk->nhk", poly, poly) * W[:, None, None]
    size = np.abs(S).reshape(len(W), -1).max(axis=1)
    keep = size > prune * size.max()
    return Y[keep], S[keep]


def pressure_gradient(a, points, nodes=32, budget=2_000_000):
    """``grad q`` at ``points`` (shape ``(..., 3)``), valid away from the data core."""
    Y, S = product_nodes(a, nodes)
    trS = np.einsum("nhh->n", S)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    out = np.zeros_like(pts)
    chunk = max(1, budget // len(Y))
    for start in range(0, len(pts), chunk):
        x = pts[start:start + chunk]
        z = x[:, None, :] - Y[None, :, :]  # (P, M, 3)
        r2 = (z * z).sum(axis=-1)
        r = np.sqrt(r2)
        Sz = np.einsum("nhk,pnk->pnh", S, z)
        zSz = (z * Sz).sum(axis=-1)
        term = -15.0 * z * (zSz / (r2 * r2 * r2 * r))[..., None] \
            + 3.0 * (trS[None, :, None] * z + 2.0 * Sz) / (r2 * r2 * r)[..., None]
        out[start:start + chunk] = -term.sum(axis=1) / (4.0 * np.pi)
    return out.reshape(np.shape(points))


def sphere_directions(count=256):
    """Fibonacci-lattice unit vectors (deterministic, near-uniform)."""
    j = np.arange(count) + 0.5
    z = 1.0 - 2.0 * j / count
    phi = np.pi * (1.0 + np.sqrt(5.0)) * j
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


def early_time_tail(a, r_min=8.0, r_max=32.0, shells=12, directions=256, nodes=32, floor=1e-14):
    """Spatial decay exponent of the early-time far field ``|grad q|``.

    Shell averages over ``directions`` points per sphere at ``shells``
    geometrically spaced radii; ``valid`` is false if a shell average is
    below ``floor`` times the largest one or the data are not negligible at
    ``r_min``.
    """
    radii = np.geomspace(r_min, r_max, shells)
    dirs = sphere_directions(directions)
    pts = radii[:, None, None] * dirs[None, :, :]
    g = pressure_gradient(a, pts, nodes)
    prof = np.sqrt((g * g).sum(axis=-1)).mean(axis=1)
    slope, valid = fit_profile(radii, prof, floor * prof.max())
    core = np.abs(evaluate(a, r_min * dirs)).max() * 1e12
    return FarTail(slope, valid and core < prof[0] and prof.max() > 0, radii, prof)
