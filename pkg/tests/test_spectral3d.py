import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symflow import _spectral as sp
from symflow.fields import builtin_field
from symflow.groups import standard_group
from symflow.spectral3d import (
    Sim3DConfig, VelocityState3D, advance_3d, biot_savart_3d, curl_hat, divergence_ratio, energy,
    heat_evolve, leray_project, simulate_3d, symmetry_drift_3d,
)

N, L = 16, 4.0


def random_hat(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(3, N, N, N))
    return np.stack([sp.rfftn(c, 3) for c in v])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_leray_idempotent_and_solenoidal(seed):
    v = random_hat(seed)
    p = leray_project(v, L)
    assert np.abs(leray_project(p, L) - p).max() <= 1e-12 * np.abs(p).max()
    assert divergence_ratio(p, L) < 1e-14


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_gradients_are_removed(seed):
    rng = np.random.default_rng(seed)
    phi = sp.rfftn(rng.normal(size=(N, N, N)), 3)
    ks, _ = sp.wavenumbers(3, N, L)
    grad = np.stack([1j * k * phi for k in ks])
    assert np.abs(leray_project(grad, L)).max() <= 1e-12 * np.abs(grad).max()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_curl_biot_savart_round_trip(seed):
    u = leray_project(random_hat(seed), L)
    u[:, 0, 0, 0] = 0.0
    back = biot_savart_3d(curl_hat(u, L), L).u_hat
    assert np.abs(back - u).max() <= 1e-12 * np.abs(u).max()


def test_biot_savart_rejects_divergent_input():
    with pytest.raises(ValueError):
        biot_savart_3d(random_hat(0), L)


def test_time_convergence_fourth_order():
    s0 = VelocityState3D.from_field(builtin_field("bar_a"), 5.0, 16, amplitude=2.0)
    ref = advance_3d(s0, 0.0025, 32).u_hat
    e1 = np.abs(advance_3d(s0, 0.02, 4).u_hat - ref).max()
    e2 = np.abs(advance_3d(s0, 0.01, 8).u_hat - ref).max()
    # halving dt divides the error by 2**4, within 20 %
    assert e1 / e2 == pytest.approx(16.0, rel=0.2)


def test_small_data_follow_heat_flow():
    s0 = VelocityState3D.from_field(builtin_field("tilde_a"), 5.0, 16, amplitude=1e-8)
    s = advance_3d(s0, 0.01, 5)
    h = heat_evolve(s0, 0.05)
    assert np.abs(s.u_hat - h.u_hat).max() <= 1e-7 * np.abs(h.u_hat).max()


def test_energy_decays_and_divergence_stays_zero():
    s = VelocityState3D.from_field(builtin_field("bar_plus_tilde_a"), 5.0, 16, amplitude=1.0)
    e0 = energy(s)
    s = advance_3d(s, 0.01, 5)
    assert energy(s) < e0
    assert divergence_ratio(s.u_hat, s.L) < 1e-14


@pytest.mark.parametrize("name,group", [("bar_a", "T_d"), ("tilde_a", "O_h")])
def test_cubic_symmetry_kept(name, group):
    G = standard_group(group)
    s = VelocityState3D.from_field(builtin_field(name), 5.0, 32, amplitude=0.5)
    s = advance_3d(s, 0.005, 4)
    assert symmetry_drift_3d(s, G.generators) < 1e-10


def test_bar_a_not_octahedral_on_grid():
    s = VelocityState3D.from_field(builtin_field("bar_a"), 5.0, 32, amplitude=0.5)
    assert symmetry_drift_3d(s, standard_group("O_h").generators) > 1e-3


def test_simulate_channels_and_cap():
    cfg = Sim3DConfig("T_d", builtin_field("bar_a"), N=16, L=5.0, dt=0.001, t_end=0.002, cadence=1,
                      moment_order=2)
    series, _ = simulate_3d(cfg)
    assert len(series) == 3
    for name in ("moment_000_1", "moment_011_3", "divergence", "energy", "symmetry_drift", "tail_exponent"):
        assert name in series.channels
    with pytest.raises(ValueError):
        simulate_3d(Sim3DConfig("T_d", builtin_field("bar_a"), N=256))
    with pytest.raises(ValueError):
        VelocityState3D.from_field(builtin_field("omega_radial"), 5.0, 16)


def test_thread_count_does_not_change_results(monkeypatch):
    s0 = VelocityState3D.from_field(builtin_field("tilde_a"), 5.0, 32, amplitude=0.5)
    monkeypatch.setenv("SYMFLOW_THREADS", "1")
    one = advance_3d(s0, 0.005, 2).u_hat
    monkeypatch.setenv("SYMFLOW_THREADS", "4")
    four = advance_3d(s0, 0.005, 2).u_hat
    assert np.array_equal(one, four)
    monkeypatch.setenv("SYMFLOW_THREADS", "0")
    with pytest.raises(ValueError):
        sp.workers()
