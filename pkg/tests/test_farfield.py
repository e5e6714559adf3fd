import numpy as np
import pytest

from symflow import _spectral as sp
from symflow.farfield import early_time_tail, pressure_gradient, sphere_directions
from symflow.fields import builtin_field, sample_to_grid


def spectral_pressure_gradient(a, L, N, points):
    """Independent oracle: periodic Poisson solve of Laplacian q = d_h d_k (a_h a_k)."""
    v = sample_to_grid(a, L, N).values
    ks, k2 = sp.wavenumbers(3, N, L)
    inv = np.zeros_like(k2)
    inv[k2 > 0] = 1.0 / k2[k2 > 0]
    q = 0.0
    for h in range(3):
        for k in range(3):
            q = q + ks[h] * ks[k] * sp.rfftn(v[..., h] * v[..., k], 3)
    q = q * inv
    grad = [sp.irfftn(1j * k * q, 3, N) for k in ks]
    return np.stack([sp.interpolate(g, L, points) for g in grad], axis=-1)


def test_quadrature_matches_periodic_poisson():
    a = builtin_field("bar_plus_tilde_a")
    pts = 6.0 * sphere_directions(24)
    quad = pressure_gradient(a, pts)
    ref = spectral_pressure_gradient(a, 12.0, 128, pts)
    # the periodic images contribute at the 1e-3 level in this box
    assert np.abs(quad - ref).max() <= 5e-3 * np.abs(ref).max()


def test_chunking_does_not_change_result():
    a = builtin_field("tilde_a")
    pts = 9.0 * sphere_directions(40)
    assert np.array_equal(pressure_gradient(a, pts, budget=10_000_000), pressure_gradient(a, pts, budget=100_000))


def test_sphere_directions():
    d = sphere_directions(256)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.abs(d.mean(axis=0)).max() < 1e-2


@pytest.mark.parametrize("name,n,expected", [("prism_a", 2, -4.0), ("bar_plus_tilde_a", None, -5.0),
                                             ("tilde_a", None, -6.0)])
def test_far_field_exponents(name, n, expected):
    fit = early_time_tail(builtin_field(name, n), shells=6, directions=96, nodes=24)
    assert fit.valid
    assert fit.exponent == pytest.approx(expected, abs=0.05)


def test_tail_invalid_when_core_reaches_shells():
    fit = early_time_tail(builtin_field("tilde_a"), r_min=1.0, r_max=4.0, shells=4, directions=32, nodes=16)
    assert not fit.valid
