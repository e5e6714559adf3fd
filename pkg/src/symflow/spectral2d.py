"""Periodic pseudo-spectral solver for the 2-d vorticity equation (unit viscosity).

The box ``[-L, L)**2`` stands in for the plane; data are Gaussian-localized.
Time stepping is integrating-factor RK4: diffusion is exact, the transport term
``div(u w)`` is evaluated on the grid and dealiased by the 2/3 rule.
"""
from dataclasses import dataclass, replace

import numpy as np

from . import _spectral as sp
from .diagnostics import DiagnosticSeries, TailFit, tail_exponent
from .fields import GridField, PolyGaussianField, curl_2d, sample_to_grid
from .groups import standard_group

DIM = 2
# smooth radial moment cutoff: 1 inside 0.1 L, 0 outside 0.9 L
MOMENT_WINDOW = (0.1, 0.9)


@dataclass(frozen=True, eq=False)
class VorticityState2D:
    """Vorticity coefficients in rfft layout, shape ``(N, N//2 + 1)``."""

    N: int
    L: float
    t: float
    w_hat: np.ndarray
    dealias: str = "radial"

    @classmethod
    def from_grid(cls, values, L, t=0.0, dealias="radial"):
        values = np.asarray(values, dtype=float)
        N = values.shape[0]
        w_hat = sp.rfftn(values, DIM) * sp.dealias_mask(DIM, N, float(L), dealias)
        return cls(N, float(L), float(t), w_hat, dealias)

    @classmethod
    def from_field(cls, f, L, N, amplitude=1.0, dealias="radial"):
        """Sample a scalar vorticity, or a planar velocity (its curl is taken)."""
        if f.dim != 2:
            raise ValueError("2-d solver needs a 2-d field")
        if not f.is_scalar:
            f = curl_2d(f)
        return cls.from_grid(amplitude * sample_to_grid(f, L, N).values[..., 0], L, dealias=dealias)

    def vorticity(self):
        return sp.irfftn(self.w_hat, DIM, self.N)

    def velocity(self):
        u_hat = biot_savart_2d(self.w_hat, self.L)
        return np.stack([sp.irfftn(c, DIM, self.N) for c in u_hat], axis=-1)

    def vorticity_field(self):
        return GridField(DIM, self.L, self.N, self.vorticity()[..., None])

    def velocity_field(self):
        return GridField(DIM, self.L, self.N, self.velocity())


def biot_savart_2d(w_hat, L):
    """Velocity coefficients ``u_hat = i (xi_2, -xi_1) w_hat / |xi|^2`` with zero mean.

    This is the sign for which ``d1 u2 - d2 u1 = w``.
    """
    N = w_hat.shape[0]
    (k1, k2), k2sum = sp.wavenumbers(DIM, N, float(L))
    inv = np.zeros_like(k2sum)
    nz = k2sum > 0
    inv[nz] = 1.0 / k2sum[nz]
    return np.stack([1j * k2 * inv * w_hat, -1j * k1 * inv * w_hat])


def curl_hat_2d(u_hat, L):
    N = u_hat.shape[1]
    (k1, k2), _ = sp.wavenumbers(DIM, N, float(L))
    return 1j * k1 * u_hat[1] - 1j * k2 * u_hat[0]


def _transport(w_hat, L, N, mask):
    """Returns ``-FFT(div(u w))`` (dealiased) and ``max|u|``."""
    (k1, k2), _ = sp.wavenumbers(DIM, N, L)
    u_hat = biot_savart_2d(w_hat, L)
    u1 = sp.irfftn(u_hat[0], DIM, N)
    u2 = sp.irfftn(u_hat[1], DIM, N)
    w = sp.irfftn(w_hat, DIM, N)
    f1 = sp.rfftn(u1 * w, DIM)
    f2 = sp.rfftn(u2 * w, DIM)
    umax = float(np.sqrt(u1 * u1 + u2 * u2).max())
    return -1j * (k1 * f1 + k2 * f2) * mask, umax


def cfl_number(umax, dt, N, L):
    return umax * dt * N / (2.0 * L)


def step(state, dt, cfl_max=0.5):
    """One integrating-factor RK4 step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    N, L = state.N, state.L
    mask = sp.dealias_mask(DIM, N, L, state.dealias)
    _, k2 = sp.wavenumbers(DIM, N, L)
    E = np.exp(-0.5 * dt * k2)
    E2 = E * E
    w = state.w_hat
    a, umax = _transport(w, L, N, mask)
    cfl = cfl_number(umax, dt, N, L)
    if cfl > cfl_max:
        raise sp.CFLError(f"CFL number {cfl:.3g} exceeds {cfl_max}")
    a = dt * a
    b = dt * _transport(E * (w + 0.5 * a), L, N, mask)[0]
    c = dt * _transport(E * w + 0.5 * b, L, N, mask)[0]
    d = dt * _transport(E2 * w + E * c, L, N, mask)[0]
    new = E2 * w + (E2 * a + 2.0 * E * (b + c) + d) / 6.0
    if not np.all(np.isfinite(new)):
        raise sp.BlowUpError(f"non-finite vorticity at t={state.t + dt:.6g}")
    return replace(state, t=state.t + dt, w_hat=new)


def advance(state, dt, steps):
    for _ in range(int(steps)):
        state = step(state, dt)
    return state


def heat_solution_radial(L, N, t):
    """Exact planar solution from ``exp(-|x|^2)``: ``exp(-|x|^2/(1+4t)) / (1+4t)``."""
    x = sp.grid_points(DIM, N, L)
    s = 1.0 + 4.0 * t
    return np.exp(-(x[0] ** 2 + x[1] ** 2) / s) / s


# -- diagnostics --------------------------------------------------------------

def lp_norms(values, h, dim):
    """``(L^inf, L^2)`` norms of pointwise magnitudes sampled with spacing ``h``."""
    mag = np.sqrt(np.sum(values**2, axis=-1))
    return float(mag.max()), float(np.sqrt(np.sum(mag * mag) * h**dim))


def alpha_tag(alpha):
    return "".join(str(a) for a in alpha)


def symmetry_drift_2d(state, group, radius=None, count=96):
    """Largest ``|det(P) w(Px) - w(x)|`` over generators and sample points, relative to ``max|w|``.

    Signed permutation matrices are checked on the grid itself; other
    generators through the trigonometric interpolant.
    """
    w = state.vorticity()
    scale = float(np.abs(w).max()) or 1.0
    if radius is None:
        radius = 0.25 * state.L
    pts = sp.sample_points(DIM, radius, count)
    base = sp.interpolate(w, state.L, pts)
    worst = 0.0
    for g in group.generators:
        moved = sp.interpolate(w, state.L, pts @ g.matrix.T)
        worst = max(worst, float(np.abs(g.det_sign * moved - base).max()))
    return worst / scale


def safe_tail(field, r_min):
    """Tail fit over ``[r_min, 0.4 L]``, or an invalid NaN entry when that range is empty."""
    if r_min >= 0.4 * field.L - 2 * field.spacing:
        return TailFit(float("nan"), False, None, None)
    return tail_exponent(field, r_min)


def core_clear(r_min, t, level=1e-6):
    """True when the unit Gaussian core, spread by heat flow to time t, is below ``level`` at ``r_min``."""
    return bool(np.exp(-r_min * r_min / (1.0 + 4.0 * t)) <= level)


@dataclass(frozen=True)
class Sim2DConfig:
    group: str
    n: int
    field: PolyGaussianField
    N: int = 256
    L: float = 16.0
    dt: float = 0.01
    t_end: float = 1.0
    cadence: int = 10
    amplitude: float = 1.0
    moment_order: int = None
    moment_window: tuple = MOMENT_WINDOW
    tail_r_min: float = 4.0
    dealias: str = "radial"
    oracle: str = None


def simulate_2d(config, progress=None):
    """Run the solver and record diagnostics every ``cadence`` steps."""
    if config.oracle not in (None, "radial_heat"):
        raise ValueError(f"unknown oracle {config.oracle!r}")
    G = standard_group(config.group, config.n, dim=DIM)
    state = VorticityState2D.from_field(config.field, config.L, config.N, config.amplitude, config.dealias)
    order = config.n if config.moment_order is None else config.moment_order
    steps = int(round(config.t_end / config.dt))
    if steps < 1 or abs(steps * config.dt - config.t_end) > 1e-9 * max(1.0, config.t_end):
        raise ValueError("t_end must be a positive multiple of dt")
    h = 2.0 * config.L / config.N
    valid_t = (0.2 * config.L) ** 2 / 4.0
    series = DiagnosticSeries(metadata={
        "group": G.name, "N": config.N, "L": repr(float(config.L)), "dt": repr(float(config.dt)),
        "valid_t_max": repr(valid_t),
    })
    taper_from, window = (f * config.L for f in config.moment_window)

    def record(st):
        w = st.vorticity()[..., None]
        u = st.velocity()
        linf_u, l2_u = lp_norms(u, h, DIM)
        linf_w, l2_w = lp_norms(w, h, DIM)
        row = {"linf_u": linf_u, "l2_u": l2_u, "linf_w": linf_w, "l2_w": l2_w}
        moments, scales = sp.windowed_moments(w, config.L, order, window, taper_from)
        for alpha in moments:
            s = scales[alpha]
            row["moment_" + alpha_tag(alpha)] = float(moments[alpha][0]) / s if s > 0 else 0.0
        tail = safe_tail(GridField(DIM, config.L, config.N, u), config.tail_r_min)
        row["tail_exponent"] = tail.exponent
        row["validity"] = 1.0 if (tail.valid and st.t <= valid_t and core_clear(config.tail_r_min, st.t)) else 0.0
        row["symmetry_drift"] = symmetry_drift_2d(st, G)
        row["circulation"] = float(st.w_hat[0, 0].real) * h**DIM
        if config.oracle == "radial_heat":
            exact = config.amplitude * heat_solution_radial(config.L, config.N, st.t)
            row["heat_error"] = float(np.abs(w[..., 0] - exact).max())
        series.append(st.t, row)

    record(state)
    for j in range(1, steps + 1):
        state = replace(step(state, config.dt), t=j * config.dt)
        if j % config.cadence == 0 or j == steps:
            record(state)
            if progress is not None:
                progress(state)
    return series, state
