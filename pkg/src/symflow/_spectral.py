"""Helpers shared by the 2-d and 3-d periodic solvers."""
import os
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from . import _monomials as mono


class CFLError(RuntimeError):
    pass


class BlowUpError(FloatingPointError):
    pass


def workers():
    """Thread cap for FFTs, from ``SYMFLOW_THREADS`` (default: all cores)."""
    val = os.environ.get("SYMFLOW_THREADS")
    if not val:
        return -1
    n = int(val)
    if n < 1:
        raise ValueError("SYMFLOW_THREADS must be a positive integer")
    return n


def rfftn(a, dim):
    return sfft.rfftn(a, axes=tuple(range(-dim, 0)), workers=workers())


def irfftn(a, dim, N):
    return sfft.irfftn(a, s=(N,) * dim, axes=tuple(range(-dim, 0)), workers=workers())


@lru_cache(maxsize=16)
def wavenumbers(dim, N, L):
    """Broadcastable angular wavenumbers for an rfft layout on ``[-L, L)**dim``."""
    full = 2.0 * np.pi * np.fft.fftfreq(N, d=2.0 * L / N)
    half = 2.0 * np.pi * np.fft.rfftfreq(N, d=2.0 * L / N)
    ks = []
    for i in range(dim):
        k = half if i == dim - 1 else full
        shape = [1] * dim
        shape[i] = len(k)
        ks.append(k.reshape(shape))
    k2 = sum(k * k for k in ks)
    return tuple(ks), k2


def dealias_mask(dim, N, L, kind="radial"):
    """Modes kept by the 2/3 rule.

    ``radial`` keeps ``|k| <= N/3`` grid units (rotation-equivariant);
    ``cube`` keeps every mode with ``|k_i| <= N/3``.
    """
    ks, k2 = wavenumbers(dim, N, L)
    unit = np.pi / L
    cut = N / 3.0 * unit
    if kind == "radial":
        return k2 <= cut * cut * (1 + 1e-12)
    if kind == "cube":
        mask = np.ones(k2.shape, dtype=bool)
        for k in ks:
            mask = mask & (np.abs(k) <= cut * (1 + 1e-12))
        return mask
    raise ValueError(f"unknown dealiasing kind {kind!r}")


def grid_points(dim, N, L):
    x = -L + 2.0 * L * np.arange(N) / N
    return np.meshgrid(*([x] * dim), indexing="ij")


def full_spectrum(values, dim):
    """Full complex FFT of real samples (last ``dim`` axes)."""
    return np.fft.fftn(values, axes=tuple(range(-dim, 0)))


def interpolate(values, L, points):
    """Trigonometric interpolant of periodic samples ``values`` (shape ``(N,)*dim``) at ``points``."""
    values = np.asarray(values)
    dim = values.ndim
    N = values.shape[0]
    F = full_spectrum(values, dim) / N**dim
    m = np.fft.fftfreq(N, d=1.0 / N)
    # Nyquist column is split symmetrically so that the interpolant is real
    if N % 2 == 0:
        m = m.astype(float)
    k = np.pi / L * m
    pts = np.asarray(points, dtype=float).reshape(-1, dim)
    phase = [np.exp(1j * np.outer(pts[:, i] + L, k)) for i in range(dim)]  # (M, N)
    if dim == 2:
        out = np.einsum("ab,ma,mb->m", F, phase[0], phase[1], optimize=True)
    else:
        t = np.tensordot(F, phase[2], axes=([2], [1]))  # (a, b, M)
        t = np.einsum("abm,mb->am", t, phase[1])
        out = np.einsum("am,ma->m", t, phase[0])
    return out.real.reshape(np.shape(points)[:-1])


def sample_points(dim, radius, count=96, seed=20030315):
    """Fixed pseudo-random points in the ball of given radius (deterministic)."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(count, dim))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    r = radius * rng.random(count) ** (1.0 / dim)
    return pts * r[:, None]


def smooth_window(r, r0, r1):
    """C-infinity radial cutoff: 1 for ``r <= r0``, 0 for ``r >= r1``."""
    s = np.clip((np.asarray(r, dtype=float) - r0) / (r1 - r0), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
        b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return a / (a + b)


def windowed_moments(values, L, max_order, window, taper_from=None):
    """Grid quadrature of ``x**alpha * f`` over ``|x| <= window`` for every ``|alpha| <= max_order``.

    With ``taper_from`` the window is the smooth radial cutoff falling from 1
    at ``taper_from`` to 0 at ``window``; the trapezoid rule is then spectrally
    accurate and a radial weight keeps every point-group symmetry.
    ``values`` has shape ``(N,)*dim + (ncomp,)``.  Returns ``{alpha: array(ncomp)}``
    and a matching ``{alpha: scale}`` built from ``|x**alpha| |f|``.
    """
    dim = values.ndim - 1
    N = values.shape[0]
    h = 2.0 * L / N
    mesh = grid_points(dim, N, L)
    r2 = sum(m * m for m in mesh)
    inside = r2 < window * window
    f = values[inside]  # (P, ncomp)
    if taper_from is not None:
        f = f * smooth_window(np.sqrt(r2[inside]), taper_from, window)[:, None]
    xs = [m[inside] for m in mesh]
    absf = np.abs(f).sum(axis=1)
    moments, scales = {}, {}
    for order in range(max_order + 1):
        for alpha in mono.monomials(dim, order):
            w = np.ones(len(f))
            for x, a in zip(xs, alpha):
                if a:
                    w = w * x**a
            moments[alpha] = (w[:, None] * f).sum(axis=0) * h**dim
            scales[alpha] = float(np.abs(w) @ absf) * h**dim
    return moments, scales


def moment_ratios(values, L, max_order, window, taper_from=None):
    """Per order: max over ``|alpha| = order`` of ``|moment| / scale``."""
    moments, scales = windowed_moments(values, L, max_order, window, taper_from)
    out = []
    for order in range(max_order + 1):
        worst = 0.0
        for alpha in mono.monomials(values.ndim - 1, order):
            if scales[alpha] > 0:
                worst = max(worst, float(np.abs(moments[alpha]).max()) / scales[alpha])
        out.append(worst)
    return out
