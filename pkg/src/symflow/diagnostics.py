"""Decay-exponent fits, tail estimates, prediction checks and plain SVG plots."""
import csv
import io
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .fields import GridField
from .polyalg import DecayPrediction, predicted_rates  # noqa: F401  (re-exported)

TIME_TOL = 0.3
SPACE_TOL = 0.5
MOMENT_TOL = 1e-6
TAIL_FLOOR = 1e-12
MIN_SAMPLES = 8

PowerLawFit = namedtuple("PowerLawFit", "exponent stderr")
TailFit = namedtuple("TailFit", "exponent valid radii profile")


@dataclass
class DiagnosticSeries:
    """Time series of named scalar channels plus string metadata."""

    times: list = field(default_factory=list)
    channels: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = [float(t) for t in self.times]
        self.channels = {k: [float(v) for v in vals] for k, vals in self.channels.items()}
        self._check()

    def _check(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        for name, vals in self.channels.items():
            if len(vals) != len(self.times):
                raise ValueError(f"channel {name!r} has {len(vals)} values for {len(self.times)} times")

    def __len__(self):
        return len(self.times)

    def append(self, t, values):
        if self.times and t <= self.times[-1]:
            raise ValueError("times must be strictly increasing")
        if self.times and set(values) != set(self.channels):
            raise ValueError("channel set changed mid-series")
        if not self.times:
            self.channels = {k: [] for k in values}
        self.times.append(float(t))
        for k, v in values.items():
            self.channels[k].append(float(v))

    def channel(self, name):
        if name not in self.channels:
            raise KeyError(f"series has no channel {name!r}")
        return np.array(self.channels[name])

    # -- CSV: '# key=value' metadata lines, then a header row ---------------------

    def to_csv(self):
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}={self.metadata[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        names = list(self.channels)
        writer.writerow(["t"] + names)
        for j, t in enumerate(self.times):
            writer.writerow([_fmt(t)] + [_fmt(self.channels[n][j]) for n in names])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text):
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line.strip():
                rows.append(line)
        reader = list(csv.reader(rows))
        if not reader or reader[0][0] != "t":
            raise ValueError("series CSV needs a header row starting with 't'")
        names = reader[0][1:]
        data = np.array([[float(v) for v in r] for r in reader[1:]]).reshape(-1, len(names) + 1)
        chans = {n: list(data[:, j + 1]) for j, n in enumerate(names)}
        return cls(list(data[:, 0]), chans, meta)

    @classmethod
    def read_csv(cls, path):
        with open(path) as fh:
            return cls.from_csv(fh.read())


def _fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


# -- fits ---------------------------------------------------------------------

def fit_power_law(times, values, window=(5.0, None)):
    """Least-squares slope of ``log(value)`` against ``log(1 + t)`` for t in ``window``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = window
    sel = np.ones(len(t), dtype=bool)
    if lo is not None:
        sel &= t >= lo
    if hi is not None:
        sel &= t <= hi
    if not sel.any():
        raise ValueError("empty fit window")
    if sel.sum() < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples in the window, got {sel.sum()}")
    if np.any(v[sel] <= 0):
        raise ValueError("power-law fit needs positive values")
    res = stats.linregress(np.log1p(t[sel]), np.log(v[sel]))
    return PowerLawFit(float(res.slope), float(res.stderr))


def shell_profile(field, r_min, r_max):
    """Shell averages of ``|field|`` on shells of one grid spacing between ``r_min`` and ``r_max``."""
    if not isinstance(field, GridField):
        raise TypeError("tail estimates need a GridField")
    if r_max > 0.45 * field.L + 1e-12:
        raise ValueError(f"r_max={r_max} exceeds 0.45 L = {0.45 * field.L}")
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    h = field.spacing
    edges = np.arange(r_min, r_max + 0.5 * h, h)
    if len(edges) < 3:
        raise ValueError("fewer than two shells between r_min and r_max")
    r = field.radius()
    mag = field.magnitude()
    idx = np.digitize(r.ravel(), edges) - 1
    keep = (idx >= 0) & (idx < len(edges) - 1)
    counts = np.bincount(idx[keep], minlength=len(edges) - 1)
    if np.any(counts == 0):
        raise ValueError("degenerate (empty) shell; widen the radius range")
    sums = np.bincount(idx[keep], weights=mag.ravel()[keep], minlength=len(edges) - 1)
    rsum = np.bincount(idx[keep], weights=r.ravel()[keep], minlength=len(edges) - 1)
    return rsum / counts, sums / counts


def fit_profile(radii, profile, floor):
    """Slope of log profile against log radius, with a validity flag against ``floor``."""
    radii = np.asarray(radii, dtype=float)
    profile = np.asarray(profile, dtype=float)
    valid = bool(np.all(profile > floor))
    clipped = np.maximum(profile, max(floor, np.finfo(float).tiny))
    slope = np.polyfit(np.log(radii), np.log(clipped), 1)[0]
    return float(slope), valid


def tail_exponent(field, r_min=4.0, r_max=None, floor=TAIL_FLOOR):
    """Spatial decay exponent of ``|field|`` from shell averages over ``[r_min, r_max]``.

    ``r_max`` defaults to ``0.4 L``.  The fit is flagged invalid when a shell
    average falls below ``floor * max|field|``.
    """
    if r_max is None:
        r_max = 0.4 * field.L
    radii, prof = shell_profile(field, r_min, r_max)
    peak = float(field.magnitude().max())
    slope, valid = fit_profile(radii, prof, floor * peak)
    return TailFit(slope, valid and peak > 0, radii, prof)


# -- prediction check ---------------------------------------------------------

def _time_checks(prediction):
    out = []
    for name, p in (("linf_u", math.inf), ("l2_u", 2.0)):
        out.append((name, prediction.time_exponent(p)))
    for name, p in (("linf_w", math.inf), ("l2_w", 2.0)):
        out.append((name, prediction.vorticity_time_exponent(p)))
    return out


def _moment_channels(series, order):
    out = []
    for name in series.channels:
        if not name.startswith("moment_"):
            continue
        digits = name[len("moment_"):].split("_")[0]
        if digits.isdigit() and sum(int(c) for c in digits) <= order:
            out.append(name)
    return out


def compare(series, prediction, window=(5.0, None), time_tol=TIME_TOL,
            space_tol=SPACE_TOL, moment_tol=MOMENT_TOL):
    """Check a measured series against a catalog prediction.

    Returns a JSON-ready dict with one entry per check.  Time fits use
    ``window`` (clipped to the ``valid_t_max`` metadata when present);
    checks without enough samples are reported as ``skipped``.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    if "tail_exponent" not in series.channels:
        raise KeyError("series has no channel 'tail_exponent'")
    lo, hi = window
    if hi is None and "valid_t_max" in series.metadata:
        hi = float(series.metadata["valid_t_max"])
    checks = []
    t = np.array(series.times)
    for name, expected in _time_checks(prediction):
        if expected is None or name not in series.channels:
            continue
        entry = {"channel": name, "kind": "time_exponent", "predicted": expected, "tolerance": time_tol}
        try:
            fit = fit_power_law(t, series.channel(name), (lo, hi))
        except ValueError as exc:
            entry.update(status="skipped", reason=str(exc))
        else:
            entry.update(measured=fit.exponent, stderr=fit.stderr,
                         status="pass" if abs(fit.exponent - expected) <= time_tol else "fail")
        checks.append(entry)

    tails = series.channel("tail_exponent")
    ok = series.channel("validity") > 0.5 if "validity" in series.channels else np.isfinite(tails)
    entry = {"channel": "tail_exponent", "kind": "space_exponent",
             "predicted": -float(prediction.space_exponent), "tolerance": space_tol}
    if ok.any():
        # tails are a fixed-time statement: use the earliest valid sample
        measured = float(tails[np.argmax(ok)])
        entry.update(measured=measured,
                     status="pass" if abs(measured + prediction.space_exponent) <= space_tol else "fail")
    else:
        entry.update(status="fail", reason="no valid tail samples")
    checks.append(entry)

    if prediction.vorticity_moment_order is not None:
        names = _moment_channels(series, prediction.vorticity_moment_order)
        if not names:
            raise KeyError("series has no moment channels")
        worst = max(float(np.abs(series.channel(n)).max()) for n in names)
        checks.append({"channel": "moments", "kind": "moment_ratio",
                       "order": prediction.vorticity_moment_order, "measured": worst,
                       "tolerance": moment_tol, "status": "pass" if worst <= moment_tol else "fail"})

    status = [c["status"] for c in checks if c["status"] != "skipped"]
    return {
        "group": prediction.group,
        "dim": prediction.dim,
        "space_exponent": prediction.space_exponent,
        "vorticity_moment_order": prediction.vorticity_moment_order,
        "checks": checks,
        "pass": bool(status) and all(s == "pass" for s in status),
    }


# -- SVG ----------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def plot_svg(series, channels=None, width=640, height=420):
    """Static log-log line chart of positive channels against ``1 + t``."""
    if channels is None:
        channels = [c for c in ("linf_u", "l2_u", "linf_w", "l2_w") if c in series.channels]
    x = np.log10(1.0 + np.array(series.times))
    lines = []
    for name in channels:
        y = series.channel(name)
        good = y > 0
        if good.sum() >= 2:
            lines.append((name, x[good], np.log10(y[good])))
    if not lines:
        raise ValueError("nothing positive to plot")
    xs = np.concatenate([l[1] for l in lines])
    ys = np.concatenate([l[2] for l in lines])
    x0, x1 = np.floor(xs.min()), max(np.ceil(xs.max()), np.floor(xs.min()) + 1)
    y0, y1 = np.floor(ys.min()), max(np.ceil(ys.max()), np.floor(ys.min()) + 1)
    m = 60
    sx = lambda v: m + (v - x0) / (x1 - x0) * (width - 2 * m)  # noqa: E731
    sy = lambda v: height - m - (v - y0) / (y1 - y0) * (height - 2 * m)  # noqa: E731
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">']
    for key in sorted(series.metadata):
        out.append(f"<!-- {key}={series.metadata[key]} -->")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" '
               'fill="none" stroke="black"/>')
    for d in range(int(x0), int(x1) + 1):
        out.append(f'<text x="{sx(d):.2f}" y="{height - m + 16}" text-anchor="middle">1e{d}</text>')
    for d in range(int(y0), int(y1) + 1):
        out.append(f'<line x1="{m}" y1="{sy(d):.2f}" x2="{width - m}" y2="{sy(d):.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{m - 6}" y="{sy(d) + 4:.2f}" text-anchor="end">1e{d}</text>')
    out.append(f'<text x="{width / 2:.0f}" y="{height - 16}" text-anchor="middle">1 + t</text>')
    for j, (name, lx, ly) in enumerate(lines):
        color = _COLORS[j % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(lx, ly))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{width - m - 4}" y="{m + 16 + 14 * j}" text-anchor="end" '
                   f'fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
