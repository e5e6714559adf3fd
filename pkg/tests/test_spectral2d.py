import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symflow import _spectral as sp
from symflow.fields import builtin_field
from symflow.groups import standard_group
from symflow.spectral2d import (
    Sim2DConfig, VorticityState2D, advance, biot_savart_2d, curl_hat_2d, heat_solution_radial,
    simulate_2d, step, symmetry_drift_2d,
)


def random_state(seed, N=32, L=6.0):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(N, N))
    return VorticityState2D.from_grid(w - w.mean(), L)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_biot_savart_round_trip(seed):
    s = random_state(seed)
    u_hat = biot_savart_2d(s.w_hat, s.L)
    back = curl_hat_2d(u_hat, s.L)
    assert np.abs(back - s.w_hat).max() <= 1e-12 * np.abs(s.w_hat).max()
    (k1, k2), _ = sp.wavenumbers(2, s.N, s.L)
    assert np.abs(k1 * u_hat[0] + k2 * u_hat[1]).max() <= 1e-12 * np.abs(s.w_hat).max()


def test_biot_savart_sign():
    # a positive vortex at the origin turns counter-clockwise
    s = VorticityState2D.from_field(builtin_field("omega_radial"), 8.0, 64)
    u = s.velocity()
    x = sp.grid_points(2, 64, 8.0)
    i, j = 40, 32  # on the positive x1 axis
    assert x[0][i, j] > 0 and abs(x[1][i, j]) < 1e-12
    assert u[i, j, 1] > 0


def test_zero_stays_zero():
    s = VorticityState2D.from_grid(np.zeros((32, 32)), 4.0)
    s = advance(s, 0.01, 5)
    assert not np.any(s.w_hat)


def test_radial_oracle_small():
    s = VorticityState2D.from_field(builtin_field("omega_radial"), 12.0, 128)
    s = advance(s, 0.02, 10)
    assert np.abs(s.vorticity() - heat_solution_radial(12.0, 128, s.t)).max() < 1e-6


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_circulation_and_enstrophy(seed):
    rng = np.random.default_rng(seed)
    s0 = VorticityState2D.from_grid(rng.normal(size=(32, 32)), 6.0)
    s1 = advance(s0, 0.005, 4)
    assert s1.w_hat[0, 0] == pytest.approx(s0.w_hat[0, 0], rel=1e-12, abs=1e-12)
    assert np.sum(s1.vorticity() ** 2) <= np.sum(s0.vorticity() ** 2)


def test_rotation_equivariance():
    rng = np.random.default_rng(1)
    w = rng.normal(size=(32, 32))
    w = np.fft.ifft2(np.fft.fft2(w) * np.exp(-np.add.outer(np.fft.fftfreq(32) ** 2, np.fft.fftfreq(32) ** 2) * 200)).real
    a = advance(VorticityState2D.from_grid(w, 6.0), 0.01, 5).vorticity()
    # rotation by 90 degrees about the grid centre maps index (i, j) to (-j, i) mod N
    rot = lambda v: np.roll(np.rot90(v), 1, axis=0)  # noqa: E731
    b = advance(VorticityState2D.from_grid(rot(w), 6.0), 0.01, 5).vorticity()
    assert np.abs(rot(a) - b).max() < 1e-12 * np.abs(a).max()


def _drift(n, L, N):
    s = VorticityState2D.from_field(builtin_field("omega_dihedral", n), L, N)
    return symmetry_drift_2d(advance(s, 0.02, 10), standard_group("D_n", n, dim=2))


@pytest.mark.parametrize("n", [2, 4])
def test_lattice_compatible_symmetry_kept(n):
    assert _drift(n, 16.0, 128) < 1e-10


def test_threefold_drift_is_a_box_effect():
    # the square lattice of periodic images is not 3-fold symmetric; the defect
    # comes from the images' far field and shrinks as the box grows
    small, big = _drift(3, 16.0, 128), _drift(3, 32.0, 256)
    assert big < small / 8


def test_cfl_guard():
    s = VorticityState2D.from_field(builtin_field("omega_radial"), 4.0, 64, amplitude=1e4)
    with pytest.raises(sp.CFLError):
        step(s, 0.1)
    with pytest.raises(ValueError):
        step(s, 0.0)


def test_simulate_channels_and_validation():
    cfg = Sim2DConfig("D_n", 4, builtin_field("omega_dihedral", 4), N=64, L=8.0, dt=0.02, t_end=0.1,
                      cadence=2)
    series, state = simulate_2d(cfg)
    assert series.times == [0.0, 0.04, 0.08, 0.1]
    for name in ("t", "linf_u", "l2_u", "linf_w", "l2_w", "moment_00", "moment_31",
                 "tail_exponent", "validity", "symmetry_drift", "circulation"):
        assert name == "t" or name in series.channels
    assert state.t == pytest.approx(0.1)
    with pytest.raises(ValueError):
        simulate_2d(Sim2DConfig("D_n", 4, cfg.field, N=64, L=8.0, dt=0.03, t_end=0.1))
    with pytest.raises(ValueError):
        simulate_2d(Sim2DConfig("D_n", 4, cfg.field, N=64, L=8.0, oracle="nope"))


def test_simulate_is_deterministic():
    cfg = Sim2DConfig("C_n", 3, builtin_field("omega_cyclic", 3), N=64, L=8.0, dt=0.02, t_end=0.06, cadence=1)
    assert simulate_2d(cfg)[0].to_csv() == simulate_2d(cfg)[0].to_csv()
