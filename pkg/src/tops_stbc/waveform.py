"""Waveform-level transmission through a flat Rayleigh MIMO channel.

Group ``g`` of a partition rides on pulse ``w_g``; the received waveform
at slot ``j`` is ``sum_g w_g(t) (H X_g)[:, j]`` plus white noise. All
functions accept an optional leading batch axis on symbols, channels and
frames so Monte-Carlo trials run vectorized.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, GridMismatch, GroupCountMismatch, InvalidArgument
from .pulses import PulseFamily

__all__ = ["ChannelRealization", "WaveformFrame", "FilteredObservations",
           "draw_channel", "complex_normal", "transmit", "matched_filter_bank",
           "discrete_shortcut", "dump_frame_csv"]


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples, ``variance/2`` per real part."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return np.sqrt(variance / 2) * (z[..., 0] + 1j * z[..., 1])


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray  # (N_r, N_t) or (B, N_r, N_t)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        if h.ndim not in (2, 3):
            raise DimensionMismatch("channel must be (N_r, N_t) or (B, N_r, N_t)")
        if not np.all(np.isfinite(h)):
            raise InvalidArgument("channel has non-finite entries")
        object.__setattr__(self, "h", h)

    @property
    def n_rx(self) -> int:
        return self.h.shape[-2]

    @property
    def n_tx(self) -> int:
        return self.h.shape[-1]


def draw_channel(n_tx: int, n_rx: int, rng: np.random.Generator,
                 batch: int | None = None) -> ChannelRealization:
    """I.i.d. CN(0, 1) gains, held constant over the codeword."""
    shape = (n_rx, n_tx) if batch is None else (batch, n_rx, n_tx)
    return ChannelRealization(complex_normal(rng, shape))


def _h(h):
    return h.h if isinstance(h, ChannelRealization) else np.asarray(h, dtype=complex)


@dataclass(frozen=True, eq=False)
class WaveformFrame:
    """Received complex waveforms, shape ``(..., N_r, T, n_samples)``."""

    samples: np.ndarray
    dt: float
    n0: float

    @property
    def slot_count(self) -> int:
        return self.samples.shape[-2]


@dataclass(frozen=True, eq=False)
class FilteredObservations:
    """Per-group matched-filter outputs ``Y_g = H X_g + N_g``.

    ``y[g]`` has shape ``(N_r, T)`` or ``(B, N_r, T)``. ``partition`` is
    the partition used at the transmitter, if known.
    """

    y: tuple
    n0: float
    partition: object = None

    @property
    def group_ids(self) -> tuple:
        return tuple(range(len(self.y)))

    @property
    def batched(self) -> bool:
        return self.y[0].ndim == 3


def _group_outputs(x_groups, h):
    h = _h(h)
    return [np.matmul(h, np.asarray(x, dtype=complex)) for x in x_groups]


def transmit(x_groups, pulses: PulseFamily, h, n0: float,
             rng: np.random.Generator | None = None) -> WaveformFrame:
    """Shape each group's codeword with its pulse and add white noise.

    Each real noise component of sample ``k`` has variance
    ``n0 / (2 * q_k)`` with ``q_k`` the trapezoidal weight (``dt`` inside
    the interval, ``dt/2`` at the ends). This discretizes two-sided
    density ``n0/2`` so that correlating with any unit-energy pulse yields
    exactly ``n0/2`` per real dimension, and distinct orthonormal pulses
    yield uncorrelated outputs.
    """
    if len(x_groups) != pulses.p_count:
        raise GroupCountMismatch(
            f"{len(x_groups)} codeword groups but {pulses.p_count} pulses")
    if n0 < 0:
        raise InvalidArgument("n0 must be non-negative")
    hx = _group_outputs(x_groups, h)
    out = sum(v[..., None] * w for v, w in zip(hx, pulses.samples))
    if n0 > 0:
        if rng is None:
            raise InvalidArgument("noisy transmission needs an rng")
        sigma = np.sqrt(n0 / (2 * pulses.weights))
        z = rng.standard_normal(out.shape + (2,))
        out = out + sigma * (z[..., 0] + 1j * z[..., 1])
    return WaveformFrame(out, pulses.dt, n0)


def matched_filter_bank(frame: WaveformFrame, pulses: PulseFamily,
                        partition=None) -> FilteredObservations:
    """Correlate every antenna/slot waveform against every pulse."""
    if frame.samples.shape[-1] != pulses.n_samples or frame.dt != pulses.dt:
        raise GridMismatch("frame and pulse family use different sample grids")
    taps = pulses.samples * pulses.weights  # (P, n)
    y = np.tensordot(frame.samples, taps, axes=([-1], [1]))  # (..., N_r, T, P)
    return FilteredObservations(tuple(np.ascontiguousarray(y[..., g])
                                      for g in range(pulses.p_count)),
                                frame.n0, partition)


def discrete_shortcut(x_groups, h, n0: float, rng: np.random.Generator | None = None,
                      partition=None) -> FilteredObservations:
    """``Y_g = H X_g + N_g`` directly, with ``n0/2`` noise per real dimension."""
    if n0 < 0:
        raise InvalidArgument("n0 must be non-negative")
    hx = _group_outputs(x_groups, h)
    if n0 > 0:
        if rng is None:
            raise InvalidArgument("noisy transmission needs an rng")
        hx = [v + complex_normal(rng, v.shape, n0) for v in hx]
    return FilteredObservations(tuple(hx), n0, partition)


def dump_frame_csv(frame: WaveformFrame, path) -> None:
    """Debug dump of an unbatched frame: one row per sample, re/im per antenna/slot."""
    s = frame.samples
    if s.ndim != 3:
        raise DimensionMismatch("only unbatched frames can be dumped")
    n_rx, n_slots, n = s.shape
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t"] + [f"{part}_r{r + 1}_s{j + 1}" for r in range(n_rx)
                              for j in range(n_slots) for part in ("re", "im")])
        for k in range(n):
            row = [repr(k * frame.dt)]
            for r in range(n_rx):
                for j in range(n_slots):
                    row += [repr(float(s[r, j, k].real)), repr(float(s[r, j, k].imag))]
            out.writerow(row)
