"""Temporal-mode algebra for binary intensity-modulated pulse pairs.

The two key-bit symbols are complex pulse envelopes u0(t), u1(t) sampled on a
shared uniform time grid.  This module derives the single scalar the channel
model consumes — the shape-distortion parameter D = 1 - |<u0, u1>|^2, i.e. the
fraction of pulse-1 power living outside the pulse-0 temporal mode — and
constructs the normalized complement mode v(t): the component of u1 orthogonal
to u0, which is the mode a temporal demultiplexer would monitor.

All integrals use the trapezoidal rule; the envelopes of interest are smooth,
so spectral accuracy buys nothing over an auditable quadrature.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

# Below this distortion the complement direction is numerically meaningless:
# the construction divides by sqrt(D).
COINCIDENT_MODE_CUTOFF = 1e-12

_GRID_UNIFORMITY_RTOL = 1e-9
_MIN_GRID_POINTS = 8


@dataclass(frozen=True)
class TemporalEnvelope:
    """Complex pulse amplitude on a strictly increasing uniform time grid."""

    t_grid: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        amp = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "amplitudes", amp)
        if t.ndim != 1 or amp.shape != t.shape:
            raise ValueError("t_grid and amplitudes must be 1-D arrays of equal length")
        if t.size < _MIN_GRID_POINTS:
            raise ValueError(f"grid needs at least {_MIN_GRID_POINTS} points, got {t.size}")
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise ValueError("time grid must be strictly increasing")
        dt = steps[0]
        if np.max(np.abs(steps - dt)) > _GRID_UNIFORMITY_RTOL * dt:
            raise ValueError("time grid must be uniform to 1 part in 1e9")

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    def norm_squared(self) -> float:
        """Trapezoidal integral of |amplitude|^2 over the grid."""
        return float(_trapezoid(np.abs(self.amplitudes) ** 2, self.dt).real)


@dataclass(frozen=True)
class ModePair:
    """Two normalized envelopes on a shared grid (the two symbol shapes)."""

    u0: TemporalEnvelope
    u1: TemporalEnvelope

    def __post_init__(self):
        _require_shared_grid(self.u0, self.u1)
        for name, env in (("u0", self.u0), ("u1", self.u1)):
            if abs(env.norm_squared() - 1.0) > 1e-9:
                raise ValueError(f"{name} is not normalized (|{name}|^2 integrates to {env.norm_squared()})")


def _trapezoid(values: np.ndarray, dt: float) -> complex:
    return dt * (values.sum() - 0.5 * (values[0] + values[-1]))


def _require_shared_grid(a: TemporalEnvelope, b: TemporalEnvelope) -> None:
    if a.t_grid.shape != b.t_grid.shape or not np.array_equal(a.t_grid, b.t_grid):
        raise ValueError("envelopes are sampled on different time grids")


def normalize(raw: TemporalEnvelope) -> TemporalEnvelope:
    """Rescale an envelope to unit L2 norm under trapezoidal quadrature."""
    energy = raw.norm_squared()
    if energy <= 0.0:
        raise ValueError("degenerate envelope")
    return TemporalEnvelope(raw.t_grid, raw.amplitudes / np.sqrt(energy))


def overlap(pair: ModePair) -> complex:
    """Inner product integral of u0* u1 over the shared grid."""
    integrand = np.conj(pair.u0.amplitudes) * pair.u1.amplitudes
    value = _trapezoid(integrand, pair.u0.dt)
    if abs(value) > 1.0 + 1e-9:
        raise ValueError(f"overlap magnitude {abs(value)} exceeds 1; inputs not normalized?")
    return complex(value)


def distortion(pair: ModePair) -> float:
    """Shape-distortion parameter: 1 - |<u0, u1>|^2, clamped into [0, 1].

    Zero for identical envelopes, one for orthogonal ones; equals the power
    fraction of u1 that a mode filter matched to u0 rejects.
    """
    d = 1.0 - abs(overlap(pair)) ** 2
    return float(min(max(d, 0.0), 1.0))


def complement_mode(pair: ModePair) -> TemporalEnvelope:
    """Normalized component of u1 orthogonal to u0.

    v = (u1 - u0 <u0, u1>) / sqrt(D) with the positive real root, so v
    inherits the numerator's phase.  Undefined when the modes coincide.
    """
    c = overlap(pair)
    d = distortion(pair)
    if d <= COINCIDENT_MODE_CUTOFF:
        raise ValueError("modes coincide; complement undefined")
    v_amp = (pair.u1.amplitudes - c * pair.u0.amplitudes) / np.sqrt(d)
    return TemporalEnvelope(pair.u0.t_grid, v_amp)


def gaussian_envelope(t_grid: np.ndarray, center: float, sigma: float) -> TemporalEnvelope:
    """Unit-norm Gaussian pulse; sigma is the intensity-profile standard deviation."""
    t = np.asarray(t_grid, dtype=float)
    amp = (2.0 * np.pi * sigma**2) ** -0.25 * np.exp(-((t - center) ** 2) / (4.0 * sigma**2))
    return normalize(TemporalEnvelope(t, amp.astype(complex)))


def gaussian_pair(
    delta_t: float,
    sigma: float = 1.0,
    n_points: int = 2001,
    span_sigmas: float = 12.0,
) -> ModePair:
    """Offset-Gaussian symbol pair: equal widths, centers separated by delta_t.

    Closed forms for checking: overlap = exp(-delta_t^2 / (8 sigma^2)),
    distortion D = 1 - exp(-delta_t^2 / (4 sigma^2)).
    """
    half = span_sigmas * sigma + abs(delta_t)
    t = np.linspace(-half, half, n_points)
    u0 = gaussian_envelope(t, -0.5 * delta_t, sigma)
    u1 = gaussian_envelope(t, +0.5 * delta_t, sigma)
    return ModePair(u0, u1)


WAVEFORM_HEADER = ["t", "re_u0", "im_u0", "re_u1", "im_u1"]


def load_waveform_csv(path) -> tuple[TemporalEnvelope, TemporalEnvelope]:
    """Read a two-envelope waveform file.

    Expected layout: UTF-8 CSV, header ``t,re_u0,im_u0,re_u1,im_u1``, one row
    per grid point, rows sorted by t.  Returns the raw (not yet normalized)
    envelopes.  Malformed rows are reported with their line number.
    """
    ts: list[float] = []
    u0: list[complex] = []
    u1: list[complex] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != WAVEFORM_HEADER:
            raise ValueError(
                f"waveform file must start with header '{','.join(WAVEFORM_HEADER)}'"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ValueError(f"line {lineno}: expected 5 fields, got {len(row)}")
            try:
                t, re0, im0, re1, im1 = (float(x) for x in row)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            if ts and t <= ts[-1]:
                raise ValueError(f"line {lineno}: time samples must be strictly increasing")
            ts.append(t)
            u0.append(complex(re0, im0))
            u1.append(complex(re1, im1))
    t_grid = np.asarray(ts)
    return (
        TemporalEnvelope(t_grid, np.asarray(u0)),
        TemporalEnvelope(t_grid, np.asarray(u1)),
    )


def write_waveform_csv(path, u0: TemporalEnvelope, u1: TemporalEnvelope) -> None:
    _require_shared_grid(u0, u1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(WAVEFORM_HEADER)
        for t, a0, a1 in zip(u0.t_grid, u0.amplitudes, u1.amplitudes):
            writer.writerow(
                [repr(float(x)) for x in (t, a0.real, a0.imag, a1.real, a1.imag)]
            )


def write_envelope_csv(path, env: TemporalEnvelope, label: str = "v") -> None:
    """Write one envelope as ``t,re_<label>,im_<label>`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", f"re_{label}", f"im_{label}"])
        for t, a in zip(env.t_grid, env.amplitudes):
            writer.writerow([repr(float(t)), repr(float(a.real)), repr(float(a.imag))])
