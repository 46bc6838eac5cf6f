"""Gray-labelled signal sets with unit average energy.

A code encodes ``K`` real symbols. Consecutive pairs ``(2k, 2k+1)`` are the
in-phase and quadrature coordinates of the ``k``-th complex information
symbol, so a separable constellation (square QAM, PAM) assigns a PAM level
set (a *rail*) to each coordinate independently. Non-separable sets (PSK)
must be enumerated pair-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NotSeparable

__all__ = ["Rail", "Constellation", "qam", "pam", "bpsk", "psk", "by_name",
           "gray_labels"]


def gray_labels(n_levels: int) -> np.ndarray:
    """Binary-reflected Gray labels, MSB first, shape ``(n_levels, bits)``."""
    bits = int(round(math.log2(n_levels))) if n_levels > 1 else 0
    if n_levels > 1 and 2 ** bits != n_levels:
        raise InvalidArgument(f"level count {n_levels} is not a power of two")
    idx = np.arange(n_levels)
    gray = idx ^ (idx >> 1)
    shifts = np.arange(bits - 1, -1, -1)
    return ((gray[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class Rail:
    """Ordered real levels of one coordinate with their Gray labels."""

    levels: np.ndarray
    labels: np.ndarray

    @property
    def bits(self) -> int:
        return self.labels.shape[1]

    @property
    def energy(self) -> float:
        return float(np.mean(self.levels ** 2))

    def hard_limit(self, values):
        """Nearest level to each value; exact midpoints go to the lower level."""
        values = np.asarray(values, dtype=float)
        if len(self.levels) == 1:
            return np.full(values.shape, self.levels[0])
        mid = 0.5 * (self.levels[1:] + self.levels[:-1])
        return self.levels[np.searchsorted(mid, values, side="left")]

    def indices(self, values):
        values = np.asarray(values, dtype=float)
        return np.abs(values[..., None] - self.levels).argmin(axis=-1)


def _pam_rail(n_levels: int, energy: float) -> Rail:
    raw = np.arange(-(n_levels - 1), n_levels, 2, dtype=float)
    if n_levels == 1:
        raw = np.zeros(1)
        return Rail(raw, gray_labels(1))
    raw *= math.sqrt(energy / np.mean(raw ** 2))
    return Rail(raw, gray_labels(n_levels))


@dataclass(frozen=True, eq=False)
class Constellation:
    """A complex signal set of size ``M`` with unit average energy.

    Attributes
    ----------
    name : str
        Stable identifier such as ``"qam16"`` or ``"psk8"``.
    points : np.ndarray
        Complex points, in label order.
    labels : np.ndarray
        Gray labels of the points, shape ``(M, bits_per_symbol)``.
    separable : bool
        True when the set is the Cartesian product of an in-phase and a
        quadrature rail.
    rails : tuple of Rail or None
        ``(in_phase, quadrature)`` rails for separable sets.
    """

    name: str
    points: np.ndarray
    labels: np.ndarray
    separable: bool
    rails: tuple | None = None

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    def rail(self, k: int) -> Rail:
        """Rail carrying real symbol ``k`` (even: in-phase, odd: quadrature)."""
        if not self.separable:
            raise NotSeparable(f"{self.name} has no per-coordinate rails")
        return self.rails[k % 2]

    def real_variance(self, k: int) -> float:
        coord = self.points.real if k % 2 == 0 else self.points.imag
        return float(np.mean(coord ** 2))

    def unit_values(self) -> np.ndarray:
        """Points as ``(M, 2)`` real pairs, in lexicographic order."""
        pairs = np.column_stack([self.points.real, self.points.imag])
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        return pairs[order]

    def bits_per_codeword(self, n_symbols: int) -> int:
        _check_even(n_symbols)
        return (n_symbols // 2) * self.bits_per_symbol

    def random_symbols(self, rng: np.random.Generator, batch: int, n_symbols: int):
        """Draw uniform information bits and map them to real symbol vectors.

        Returns
        -------
        s : np.ndarray
            Shape ``(batch, n_symbols)``.
        bits : np.ndarray
            Shape ``(batch, bits_per_codeword)``, uint8.
        """
        _check_even(n_symbols)
        idx = rng.integers(0, self.size, size=(batch, n_symbols // 2))
        pts = self.points[idx]
        s = np.empty((batch, n_symbols))
        s[:, 0::2] = pts.real
        s[:, 1::2] = pts.imag
        bits = self.labels[idx].reshape(batch, -1)
        return s, bits

    def bits_from_symbols(self, s) -> np.ndarray:
        """Gray bits of (decided) real symbol vectors, shape ``(..., bits)``."""
        s = np.asarray(s, dtype=float)
        _check_even(s.shape[-1])
        z = s[..., 0::2] + 1j * s[..., 1::2]
        idx = np.abs(z[..., None] - self.points).argmin(axis=-1)
        lab = self.labels[idx]
        return lab.reshape(*s.shape[:-1], -1)


def _check_even(n):
    if n % 2:
        raise InvalidArgument("real symbol count must be even (I/Q pairs)")


def _product(name: str, i_rail: Rail, q_rail: Rail) -> Constellation:
    ii, qq = np.meshgrid(np.arange(len(i_rail.levels)), np.arange(len(q_rail.levels)),
                         indexing="ij")
    ii, qq = ii.ravel(), qq.ravel()
    points = i_rail.levels[ii] + 1j * q_rail.levels[qq]
    labels = np.concatenate([i_rail.labels[ii], q_rail.labels[qq]], axis=1)
    return Constellation(name, points, labels, True, (i_rail, q_rail))


def qam(M: int) -> Constellation:
    """Square Gray QAM; ``sqrt(M)`` levels per rail, 1/2 energy per rail."""
    side = math.isqrt(M)
    if side * side != M or side < 2 or side & (side - 1):
        raise InvalidArgument(f"square QAM needs M = 4**n, got {M}")
    rail = _pam_rail(side, 0.5)
    return _product(f"qam{M}", rail, rail)


def pam(M: int) -> Constellation:
    """Real M-PAM on the in-phase rail; the quadrature rail is the single level 0."""
    if M < 2 or M & (M - 1):
        raise InvalidArgument(f"PAM size must be a power of two >= 2, got {M}")
    return _product(f"pam{M}", _pam_rail(M, 1.0), _pam_rail(1, 0.0))


def bpsk() -> Constellation:
    c = pam(2)
    return Constellation("bpsk", c.points, c.labels, True, c.rails)


def psk(M: int) -> Constellation:
    if M < 2 or M & (M - 1):
        raise InvalidArgument(f"PSK size must be a power of two, got {M}")
    ang = 2 * np.pi * np.arange(M) / M
    return Constellation(f"psk{M}", np.exp(1j * ang), gray_labels(M), False)


def by_name(name: str, M: int | None = None) -> Constellation:
    """Resolve ``"qam"``/``"pam"``/``"psk"`` (with ``M``), ``"bpsk"``, or ``"qam16"``."""
    key = name.lower().replace("-", "")
    if key == "bpsk":
        return bpsk()
    for prefix, factory in (("qam", qam), ("pam", pam), ("psk", psk)):
        if key.startswith(prefix):
            tail = key[len(prefix):]
            size = int(tail) if tail else M
            if size is None:
                raise InvalidArgument(f"constellation '{name}' needs a size")
            return factory(size)
        if key.endswith(prefix) and key[:-len(prefix)].isdigit():
            return factory(int(key[:-len(prefix)]))
    raise InvalidArgument(f"unknown constellation '{name}'")
