"""Periodic pseudo-spectral Navier-Stokes solver in velocity form (unit viscosity).

The state holds Leray-projected velocity coefficients in rfft layout.  The
nonlinear term ``P div(u (x) u)`` is evaluated on the grid and dealiased by
the 2/3 rule; diffusion is exact through the integrating factor.
"""
from dataclasses import dataclass, replace

import numpy as np

from . import _spectral as sp
from .diagnostics import DiagnosticSeries
from .fields import GridField, PolyGaussianField, sample_to_grid
from .groups import standard_group
from .spectral2d import MOMENT_WINDOW, alpha_tag, core_clear, lp_norms, safe_tail

DIM = 3
DIVERGENCE_REJECT = 1e-8


@dataclass(frozen=True, eq=False)
class VelocityState3D:
    """Velocity coefficients, shape ``(3, N, N, N//2 + 1)``."""

    N: int
    L: float
    t: float
    u_hat: np.ndarray
    dealias: str = "radial"

    @classmethod
    def from_grid(cls, values, L, t=0.0, dealias="radial"):
        """Transform, project and dealias samples of shape ``(N, N, N, 3)``."""
        values = np.asarray(values, dtype=float)
        N = values.shape[0]
        u_hat = sp.rfftn(np.moveaxis(values, -1, 0), DIM)
        u_hat = leray_project(u_hat, L) * sp.dealias_mask(DIM, N, float(L), dealias)
        return cls(N, float(L), float(t), u_hat, dealias)

    @classmethod
    def from_field(cls, f, L, N, amplitude=None, dealias="radial"):
        """Sample a 3-d velocity; ``amplitude`` rescales it to that sup-norm on the grid."""
        if f.dim != 3 or f.n_components != 3:
            raise ValueError("3-d solver needs a 3-component 3-d field")
        vals = sample_to_grid(f, L, N).values
        if amplitude is not None:
            peak = float(np.sqrt((vals**2).sum(axis=-1)).max())
            if peak == 0:
                raise ValueError("cannot rescale a zero field")
            vals = vals * (amplitude / peak)
        return cls.from_grid(vals, L, dealias=dealias)

    def velocity(self):
        return np.stack([sp.irfftn(c, DIM, self.N) for c in self.u_hat], axis=-1)

    def velocity_field(self):
        return GridField(DIM, self.L, self.N, self.velocity())


def leray_project(v_hat, L):
    """Apply ``I - xi xi^T / |xi|^2`` mode by mode; the zero mode is left alone."""
    N = v_hat.shape[1]
    ks, k2 = sp.wavenumbers(DIM, N, float(L))
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    dot = sum(k * v for k, v in zip(ks, v_hat)) * inv
    return np.stack([v - k * dot for k, v in zip(ks, v_hat)])


def _cross_ik(ks, v):
    """``i xi x v`` for a stacked coefficient array."""
    k1, k2, k3 = ks
    return 1j * np.stack([k2 * v[2] - k3 * v[1], k3 * v[0] - k1 * v[2], k1 * v[1] - k2 * v[0]])


def curl_hat(u_hat, L):
    ks, _ = sp.wavenumbers(DIM, u_hat.shape[1], float(L))
    return _cross_ik(ks, u_hat)


def curl_3d(state):
    """Vorticity ``i xi x u_hat`` sampled on the grid."""
    w_hat = curl_hat(state.u_hat, state.L)
    vals = np.stack([sp.irfftn(c, DIM, state.N) for c in w_hat], axis=-1)
    return GridField(DIM, state.L, state.N, vals)


def divergence_ratio(v_hat, L):
    """``max|xi . v_hat|`` relative to ``max |xi| |v_hat|``."""
    N = v_hat.shape[1]
    ks, k2 = sp.wavenumbers(DIM, N, float(L))
    div = np.abs(sum(k * v for k, v in zip(ks, v_hat))).max()
    ref = (np.sqrt(k2) * np.sqrt(sum(np.abs(v) ** 2 for v in v_hat))).max()
    return float(div / ref) if ref > 0 else 0.0


def biot_savart_3d(omega_hat, L, t=0.0, dealias="radial"):
    """Velocity state with ``u_hat = i xi x omega_hat / |xi|^2`` and zero mean."""
    omega_hat = np.asarray(omega_hat)
    if divergence_ratio(omega_hat, L) > DIVERGENCE_REJECT:
        raise ValueError("vorticity is not divergence-free")
    N = omega_hat.shape[1]
    ks, k2 = sp.wavenumbers(DIM, N, float(L))
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    return VelocityState3D(N, float(L), float(t), _cross_ik(ks, omega_hat) * inv, dealias)


def _nonlinear(u_hat, L, N, mask):
    """``-P FFT(div(u (x) u))`` (dealiased) and ``max|u|``."""
    ks, _ = sp.wavenumbers(DIM, N, L)
    u = [sp.irfftn(c, DIM, N) for c in u_hat]
    out = [0.0, 0.0, 0.0]
    for i in range(3):
        for j in range(i, 3):
            prod = sp.rfftn(u[i] * u[j], DIM)
            out[i] = out[i] + ks[j] * prod
            if j != i:
                out[j] = out[j] + ks[i] * prod
    umax = float(np.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2).max())
    return leray_project(-1j * np.stack(out), L) * mask, umax


def step_3d(state, dt, cfl_max=0.5):
    """One integrating-factor RK4 step; every stage is projected."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    N, L = state.N, state.L
    mask = sp.dealias_mask(DIM, N, L, state.dealias)
    _, k2 = sp.wavenumbers(DIM, N, L)
    E = np.exp(-0.5 * dt * k2)
    E2 = E * E
    u = state.u_hat
    a, umax = _nonlinear(u, L, N, mask)
    cfl = umax * dt * N / (2.0 * L)
    if cfl > cfl_max:
        raise sp.CFLError(f"CFL number {cfl:.3g} exceeds {cfl_max}")
    a = dt * a
    b = dt * _nonlinear(E * (u + 0.5 * a), L, N, mask)[0]
    c = dt * _nonlinear(E * u + 0.5 * b, L, N, mask)[0]
    d = dt * _nonlinear(E2 * u + E * c, L, N, mask)[0]
    new = E2 * u + (E2 * a + 2.0 * E * (b + c) + d) / 6.0
    if not np.all(np.isfinite(new)):
        raise sp.BlowUpError(f"non-finite velocity at t={state.t + dt:.6g}")
    return replace(state, t=state.t + dt, u_hat=new)


def advance_3d(state, dt, steps):
    t0 = state.t
    for j in range(1, int(steps) + 1):
        state = replace(step_3d(state, dt), t=t0 + j * dt)
    return state


def heat_evolve(state, t):
    """``exp(t Laplacian)`` applied to the state's velocity."""
    _, k2 = sp.wavenumbers(DIM, state.N, state.L)
    return replace(state, t=state.t + t, u_hat=state.u_hat * np.exp(-t * k2))


def energy(state):
    """``||u||_2^2`` by Parseval on the grid."""
    h = 2.0 * state.L / state.N
    u = state.velocity()
    return float(np.sum(u * u) * h**DIM)


def symmetry_drift_3d(state, transforms, radius=None, count=96):
    """Largest ``|u(Px) - P u(x)|`` over the transforms and sample points, relative to ``max|u|``."""
    u = state.velocity()
    scale = float(np.sqrt((u**2).sum(axis=-1)).max()) or 1.0
    if radius is None:
        radius = 0.25 * state.L
    pts = sp.sample_points(DIM, radius, count)
    base = np.stack([sp.interpolate(u[..., i], state.L, pts) for i in range(3)], axis=-1)
    worst = 0.0
    for g in transforms:
        P = g.matrix
        moved = np.stack([sp.interpolate(u[..., i], state.L, pts @ P.T) for i in range(3)], axis=-1)
        worst = max(worst, float(np.abs(moved - base @ P.T).max()))
    return worst / scale


@dataclass(frozen=True)
class Sim3DConfig:
    group: str
    field: PolyGaussianField
    n: int = None
    N: int = 64
    L: float = 12.0
    dt: float = 0.001
    t_end: float = 1.0
    cadence: int = 100
    amplitude: float = 0.05
    moment_order: int = 6
    moment_window: tuple = MOMENT_WINDOW
    tail_r_min: float = 4.0
    dealias: str = "radial"


def simulate_3d(config, progress=None):
    """Run the solver, recording diagnostics every ``cadence`` steps."""
    if config.N > 128:
        raise ValueError("N is capped at 128")
    G = standard_group(config.group, config.n, dim=DIM)
    state = VelocityState3D.from_field(config.field, config.L, config.N, config.amplitude, config.dealias)
    steps = int(round(config.t_end / config.dt))
    if steps < 1 or abs(steps * config.dt - config.t_end) > 1e-9 * max(1.0, config.t_end):
        raise ValueError("t_end must be a positive multiple of dt")
    h = 2.0 * config.L / config.N
    valid_t = (0.2 * config.L) ** 2 / 4.0
    taper_from, window = (f * config.L for f in config.moment_window)
    series = DiagnosticSeries(metadata={
        "group": G.name, "N": config.N, "L": repr(float(config.L)), "dt": repr(float(config.dt)),
        "amplitude": repr(float(config.amplitude)), "valid_t_max": repr(valid_t),
    })

    def record(st):
        u = st.velocity()
        w = curl_3d(st).values
        linf_u, l2_u = lp_norms(u, h, DIM)
        linf_w, l2_w = lp_norms(w, h, DIM)
        row = {"linf_u": linf_u, "l2_u": l2_u, "linf_w": linf_w, "l2_w": l2_w}
        moments, scales = sp.windowed_moments(w, config.L, config.moment_order, window, taper_from)
        for alpha in moments:
            s = scales[alpha]
            for i in range(3):
                row[f"moment_{alpha_tag(alpha)}_{i + 1}"] = float(moments[alpha][i]) / s if s > 0 else 0.0
        tail = safe_tail(GridField(DIM, config.L, config.N, u), config.tail_r_min)
        row["tail_exponent"] = tail.exponent
        row["validity"] = 1.0 if (tail.valid and st.t <= valid_t and core_clear(config.tail_r_min, st.t)) else 0.0
        row["divergence"] = divergence_ratio(st.u_hat, st.L)
        row["energy"] = l2_u**2
        row["symmetry_drift"] = symmetry_drift_3d(st, G.generators)
        series.append(st.t, row)

    record(state)
    for j in range(1, steps + 1):
        state = replace(step_3d(state, config.dt), t=j * config.dt)
        if j % config.cadence == 0 or j == steps:
            record(state)
            if progress is not None:
                progress(state)
    return series, state
