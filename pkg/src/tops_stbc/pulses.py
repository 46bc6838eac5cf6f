"""Orthonormal Hermite-Gaussian pulse families on ``[0, T_s]``.

Waveforms live on the uniform grid ``t_k = k * T_s / n`` for
``k = 0..n`` (``n + 1`` samples). Inner products use trapezoidal weights,
and the same weights define energy, orthonormality and the matched filter.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial import hermite

from .errors import DegenerateFamily, GridMismatch, InvalidArgument, UnstableOrder

__all__ = ["SampledWaveform", "PulseFamily", "sample_grid", "trapezoid_weights",
           "hermite_waveform", "build_pulse_family", "inner_product",
           "fractional_energy_bandwidth", "export_csv"]

MAX_ORDER = 16
DEFAULT_OVERSAMPLING = 64


def sample_grid(t_s: float, oversampling: int) -> np.ndarray:
    if t_s <= 0 or oversampling < 1:
        raise InvalidArgument("duration and oversampling must be positive")
    return np.linspace(0.0, t_s, oversampling + 1)


def trapezoid_weights(n_samples: int, dt: float) -> np.ndarray:
    w = np.full(n_samples, dt)
    w[0] = w[-1] = dt / 2
    return w


@dataclass(frozen=True, eq=False)
class SampledWaveform:
    samples: np.ndarray
    dt: float
    duration: float

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1 or len(x) < 2:
            raise InvalidArgument("a waveform needs at least two samples")
        if abs((len(x) - 1) * self.dt - self.duration) > 1e-9 * self.duration:
            raise InvalidArgument("samples do not span the stated duration")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, len(self.samples))

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(len(self.samples), self.dt)

    @property
    def energy(self) -> float:
        return inner_product(self, self)

    def scaled(self, c: float) -> SampledWaveform:
        return SampledWaveform(c * self.samples, self.dt, self.duration)


def _same_grid(a, b):
    return len(a.samples) == len(b.samples) and a.dt == b.dt


def inner_product(a: SampledWaveform, b: SampledWaveform) -> float:
    """Trapezoidal ``sum_k a_k b_k dt`` with half weights at both ends."""
    if not _same_grid(a, b):
        raise GridMismatch("waveforms are sampled on different grids")
    return float(np.dot(a.weights * a.samples, b.samples))


def hermite_waveform(order: int, t_s: float = 1.0,
                     oversampling: int = DEFAULT_OVERSAMPLING,
                     width: float | None = None) -> SampledWaveform:
    """Unit-energy ``H_n(u) exp(-u^2/2)`` with ``u = (t - T_s/2) / width``.

    ``H_n`` is the physicists' Hermite polynomial; ``width`` defaults to
    ``T_s / 8``.
    """
    if not 0 <= order <= MAX_ORDER:
        raise InvalidArgument(f"order must be in [0, {MAX_ORDER}]")
    width = t_s / 8 if width is None else width
    if width <= 0:
        raise InvalidArgument("width must be positive")
    t = sample_grid(t_s, oversampling)
    dt = t_s / oversampling
    u = (t - t_s / 2) / width
    coef = np.zeros(order + 1)
    coef[order] = 1.0
    # scale by 1/sqrt(2^n n!) first so high orders stay in range
    x = hermite.hermval(u, coef) * np.exp(-u * u / 2) / math.sqrt(2.0 ** order * math.factorial(order))
    energy = float(np.dot(trapezoid_weights(len(x), dt), x * x))
    if not energy > 1e-280 or not math.isfinite(energy):
        raise UnstableOrder(f"order {order} cannot be normalized on this grid")
    return SampledWaveform(x / math.sqrt(energy), dt, t_s)


@dataclass(frozen=True, eq=False)
class PulseFamily:
    """``P`` orthonormal pulses on a shared grid.

    Attributes
    ----------
    samples : np.ndarray
        Shape ``(P, n + 1)``.
    gram : np.ndarray
        Pairwise trapezoidal inner products, ``(P, P)``.
    """

    samples: np.ndarray
    dt: float
    duration: float
    gram: np.ndarray
    width: float

    @property
    def p_count(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.n_samples, self.dt)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.n_samples)

    @property
    def pulses(self) -> list:
        return [SampledWaveform(row, self.dt, self.duration) for row in self.samples]

    def __getitem__(self, i) -> SampledWaveform:
        return SampledWaveform(self.samples[i], self.dt, self.duration)


def build_pulse_family(p_count: int, t_s: float = 1.0,
                       oversampling: int = DEFAULT_OVERSAMPLING,
                       width: float | None = None) -> PulseFamily:
    """Hermite orders ``0..P-1`` re-orthonormalized on the discrete grid.

    Modified Gram-Schmidt under the trapezoidal inner product, applied
    twice per pulse, so the Gram matrix is the identity to rounding
    even where truncation at the interval ends broke the continuous
    orthogonality.
    """
    if p_count < 1:
        raise InvalidArgument("P must be >= 1")
    if oversampling < 8 * p_count:
        raise InvalidArgument(f"oversampling must be >= 8*P = {8 * p_count}")
    width = t_s / 8 if width is None else width
    raw = np.array([hermite_waveform(n, t_s, oversampling, width).samples
                    for n in range(p_count)])
    wts = trapezoid_weights(raw.shape[1], t_s / oversampling)
    sv = np.linalg.svd(raw * np.sqrt(wts), compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise DegenerateFamily(f"raw family has numerical rank < {p_count}")
    basis = []
    for v in raw:
        v = v.copy()
        for _ in range(2):
            for q in basis:
                v -= np.dot(wts * q, v) * q
        v /= math.sqrt(np.dot(wts * v, v))
        basis.append(v)
    samples = np.array(basis)
    samples.setflags(write=False)
    gram = (samples * wts) @ samples.T
    return PulseFamily(samples, t_s / oversampling, t_s, gram, width)


def fractional_energy_bandwidth(w: SampledWaveform, fraction: float = 0.99,
                                pad_factor: int = 32) -> float:
    """Smallest two-sided band ``[-B/2, B/2]`` holding ``fraction`` of the energy.

    The spectrum is a zero-padded FFT of the samples. Cumulative energy
    is interpolated linearly between bins, so ``B`` varies continuously.
    """
    if not 0 < fraction < 1:
        raise InvalidArgument("fraction must lie in (0, 1)")
    x = np.asarray(w.samples, dtype=float)
    n_fft = 1 << int(math.ceil(math.log2(pad_factor * len(x))))
    spec = np.abs(np.fft.rfft(x, n_fft)) ** 2
    spec[1:(n_fft + 1) // 2] *= 2  # fold the negative frequencies
    freqs = np.fft.rfftfreq(n_fft, w.dt)
    cum = np.cumsum(spec)
    target = fraction * cum[-1]
    k = int(np.searchsorted(cum, target))
    if k == 0:
        return 2 * freqs[1] * target / cum[0]
    frac = (target - cum[k - 1]) / (cum[k] - cum[k - 1])
    return float(2 * (freqs[k - 1] + frac * (freqs[k] - freqs[k - 1])))


def export_csv(family: PulseFamily, path) -> None:
    """One column per pulse, first column time in seconds."""
    with open(Path(path), "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t"] + [f"w{i}" for i in range(family.p_count)])
        for t, row in zip(family.t, family.samples.T):
            out.writerow([repr(float(t))] + [repr(float(v)) for v in row])
