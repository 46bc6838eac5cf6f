"""Constructors for the catalog codes.

Every builder writes the weight matrices entry by entry from the code's
displayed matrix, over *unrotated* information reals: constellation
rotations are folded into the weights, so a rotated component such as
``s_iI = x_iI cos(t) - x_iQ sin(t)`` contributes to the weights of both
``x_iI`` and ``x_iQ``.

Real symbol ``2j`` is the in-phase and ``2j + 1`` the quadrature part of
complex information symbol ``j``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .core import LinearSTBC
from .errors import InvalidArgument, InvalidParams

__all__ = ["GoldenParams", "SRParams", "Fast4x2Params", "build_vblast",
           "build_alamouti", "build_golden", "build_sr2x2", "build_sr4x2",
           "build_fast4x2", "build_ciod4", "CATALOG", "PULSE_GROUP_COUNTS",
           "get_code", "catalog_names"]


class _Weights:
    """Accumulates ``factor * coeff`` into cell ``(row, col)`` of symbol weights."""

    def __init__(self, n_symbols, n_tx, n_slots):
        self.w = np.zeros((n_symbols, n_tx, n_slots), dtype=complex)

    def put(self, row, col, factor, terms):
        for k, coeff in terms:
            self.w[k, row, col] += factor * coeff


def _scale(terms, c):
    return [(k, c * v) for k, v in terms]


def _iq_labels(names):
    return tuple(f"{n}_{part}" for n in names for part in "IQ")


@dataclass(frozen=True)
class GoldenParams:
    theta: float = (1 + math.sqrt(5)) / 2
    theta_bar: float = (1 - math.sqrt(5)) / 2
    gamma: complex = 1j

    def __post_init__(self):
        if abs(self.theta * self.theta_bar + 1) > 1e-12:
            raise InvalidParams("theta * theta_bar must equal -1")
        if self.gamma == 0:
            raise InvalidParams("gamma must be nonzero")

    @property
    def alpha(self) -> complex:
        return 1 + 1j - 1j * self.theta

    @property
    def alpha_bar(self) -> complex:
        return 1 + 1j * (1 - self.theta_bar)


@dataclass(frozen=True)
class SRParams:
    rotation: float = math.atan(2) / 2
    sqrt_i: complex = cmath.exp(1j * math.pi / 4)


def _zeta15():
    return cmath.exp(2j * math.pi / 15)


@dataclass(frozen=True)
class Fast4x2Params:
    """Constants of the fast-decodable 4x2 code.

    ``sigma_bases`` gives the images of the four bases under the
    coordinate action ``sigma``; by default ``zeta -> zeta**2`` followed by
    complex conjugation.
    """

    zeta: complex = field(default_factory=_zeta15)
    r: complex | None = None
    sigma_bases: tuple | None = None

    def __post_init__(self):
        if abs(abs(self.zeta) - 1) > 1e-12:
            raise InvalidParams("|zeta| must be 1")
        names = ("u1", "u2", "u3", "u4", "sigma(u1)", "sigma(u2)", "sigma(u3)", "sigma(u4)")
        for name, u in zip(names, self.bases + self.sigma_images):
            if min(abs(u.real), abs(u.imag)) > 1e-12:
                raise InvalidParams(
                    f"basis {name}={u:.6g} is neither real nor purely imaginary")

    @staticmethod
    def _bases_at(z):
        return (1 + 0j, z + 1 / z, (z - 1 / z) / 2, (z ** 2 - z ** -2) / 2)

    @property
    def bases(self) -> tuple:
        return self._bases_at(self.zeta)

    @property
    def sigma_images(self) -> tuple:
        if self.sigma_bases is not None:
            return tuple(complex(u) for u in self.sigma_bases)
        return tuple(u.conjugate() for u in self._bases_at(self.zeta ** 2))

    @property
    def r_value(self) -> complex:
        return self.zeta if self.r is None else complex(self.r)


def build_vblast(n_tx: int = 4, n_rx: int | None = None) -> LinearSTBC:
    """Uncoded spatial multiplexing, one channel use (``T = 1``)."""
    if n_tx < 1:
        raise InvalidArgument("n_tx must be >= 1")
    w = np.zeros((2 * n_tx, n_tx, 1), dtype=complex)
    for j in range(n_tx):
        w[2 * j, j, 0] = 1
        w[2 * j + 1, j, 0] = 1j
    return LinearSTBC(f"vblast{n_tx}", n_tx, 1, w,
                      symbol_labels=_iq_labels([f"x{j + 1}" for j in range(n_tx)]),
                      rectangular=True, n_rx=n_rx or n_tx)


def build_alamouti(n_rx: int = 1) -> LinearSTBC:
    """``[[s1, -s2*], [s2, s1*]]``."""
    b = _Weights(4, 2, 2)
    b.put(0, 0, 1, [(0, 1), (1, 1j)])
    b.put(1, 1, 1, [(0, 1), (1, -1j)])
    b.put(1, 0, 1, [(2, 1), (3, 1j)])
    b.put(0, 1, -1, [(2, 1), (3, -1j)])
    return LinearSTBC("alamouti", 2, 2, b.w, symbol_labels=_iq_labels(["s1", "s2"]),
                      n_rx=n_rx)


def build_golden(p: GoldenParams | None = None, n_rx: int = 2) -> LinearSTBC:
    p = p or GoldenParams()
    a = [(0, 1), (1, 1j)]
    b = [(2, 1), (3, 1j)]
    c = [(4, 1), (5, 1j)]
    d = [(6, 1), (7, 1j)]
    s5 = 1 / math.sqrt(5)
    w = _Weights(8, 2, 2)
    w.put(0, 0, p.alpha * s5, a + _scale(b, p.theta))
    w.put(0, 1, p.alpha * s5, c + _scale(d, p.theta))
    w.put(1, 0, p.gamma * p.alpha_bar * s5, c + _scale(d, p.theta_bar))
    w.put(1, 1, p.alpha_bar * s5, a + _scale(b, p.theta_bar))
    return LinearSTBC("golden", 2, 2, w.w, energy_scale=None,
                      symbol_labels=_iq_labels("abcd"), n_rx=n_rx)


class _Rotated:
    """Terms of the rotated components ``s_jI`` and ``s_jQ`` (``j`` 1-based)."""

    def __init__(self, theta):
        self.c, self.s = math.cos(theta), math.sin(theta)

    def I(self, j, mult=1):
        return [(2 * (j - 1), mult * self.c), (2 * (j - 1) + 1, -mult * self.s)]

    def Q(self, j, mult=1):
        return [(2 * (j - 1), mult * self.s), (2 * (j - 1) + 1, mult * self.c)]


def build_sr2x2(p: SRParams | None = None, n_rx: int = 2) -> LinearSTBC:
    p = p or SRParams()
    r = _Rotated(p.rotation)
    w = _Weights(8, 2, 2)
    w.put(0, 0, 1, r.I(1) + r.Q(2, 1j))
    w.put(0, 1, p.sqrt_i, r.I(3) + r.Q(4, 1j))
    w.put(1, 0, p.sqrt_i, r.I(4) + r.Q(3, 1j))
    w.put(1, 1, 1, r.I(2) + r.Q(1, 1j))
    return LinearSTBC("sr2x2", 2, 2, w.w,
                      symbol_labels=_iq_labels([f"x{j}" for j in range(1, 5)]), n_rx=n_rx)


def _sr4_diagonal_blocks(w, r):
    w.put(0, 0, 1, r.I(1) + r.Q(3, 1j))
    w.put(0, 1, 1, r.I(2, -1) + r.Q(4, 1j))
    w.put(1, 0, 1, r.I(2) + r.Q(4, 1j))
    w.put(1, 1, 1, r.I(1) + r.Q(3, -1j))
    w.put(2, 2, 1, r.I(3) + r.Q(1, 1j))
    w.put(2, 3, 1, r.I(4, -1) + r.Q(2, 1j))
    w.put(3, 2, 1, r.I(4) + r.Q(2, 1j))
    w.put(3, 3, 1, r.I(3) + r.Q(1, -1j))


def build_sr4x2(p: SRParams | None = None, n_rx: int = 2) -> LinearSTBC:
    p = p or SRParams()
    r = _Rotated(p.rotation)
    q = p.sqrt_i
    w = _Weights(16, 4, 4)
    _sr4_diagonal_blocks(w, r)
    w.put(0, 2, q, r.I(5) + r.Q(7, 1j))
    w.put(0, 3, q, r.I(6, -1) + r.Q(8, 1j))
    w.put(1, 2, q, r.I(6) + r.Q(8, 1j))
    w.put(1, 3, q, r.I(5) + r.Q(7, -1j))
    w.put(2, 0, q, r.I(7) + r.Q(5, 1j))
    w.put(2, 1, q, r.I(8, -1) + r.Q(6, 1j))
    w.put(3, 0, q, r.I(8) + r.Q(6, 1j))
    w.put(3, 1, q, r.I(7) + r.Q(5, -1j))
    return LinearSTBC("sr4x2", 4, 4, w.w,
                      symbol_labels=_iq_labels([f"x{j}" for j in range(1, 9)]), n_rx=n_rx)


def build_ciod4(p: SRParams | None = None, n_rx: int = 1) -> LinearSTBC:
    """Rate-one CIOD for four antennas: the diagonal-block part of the SR 4x2 code."""
    p = p or SRParams()
    w = _Weights(8, 4, 4)
    _sr4_diagonal_blocks(w, _Rotated(p.rotation))
    return LinearSTBC("ciod4", 4, 4, w.w,
                      symbol_labels=_iq_labels([f"x{j}" for j in range(1, 5)]), n_rx=n_rx)


def build_fast4x2(p: Fast4x2Params | None = None, n_rx: int = 2) -> LinearSTBC:
    """Fast-decodable 4x2 code over 16 real coordinates ``f1..f16``.

    Each 2x2 block is an Alamouti block ``[[a, -b*], [b, a*]]`` whose
    ``a`` and ``b`` are read from the block's first column:

    ==========  =================  =================
    block       a                  b
    ==========  =================  =================
    rows 1-2,   s1                 r^2 s2
    cols 1-2
    rows 3-4,   sigma(s1)          r^2 sigma(s2)
    cols 3-4
    rows 1-2,   -r^3 sigma(s4)     r sigma(s3)
    cols 3-4
    rows 3-4,   r s3               r^3 s4
    cols 1-2
    ==========  =================  =================

    with ``s_i = sum_m f_{4(i-1)+m} u_m``. The constants are injectable
    and only the block structure is asserted.
    """
    p = p or Fast4x2Params()
    r = p.r_value
    u = p.bases
    su = p.sigma_images

    def s(i, mult=1, sigma=False):
        base = su if sigma else u
        return [(4 * (i - 1) + m, mult * base[m]) for m in range(4)]

    w = _Weights(16, 4, 4)

    def alamouti(row, col, a_terms, b_terms):
        w.put(row, col, 1, a_terms)
        w.put(row + 1, col + 1, 1, [(k, np.conj(v)) for k, v in a_terms])
        w.put(row + 1, col, 1, b_terms)
        w.put(row, col + 1, -1, [(k, np.conj(v)) for k, v in b_terms])

    alamouti(0, 0, s(1), s(2, r ** 2))
    alamouti(2, 2, s(1, sigma=True), s(2, r ** 2, sigma=True))
    alamouti(0, 2, s(4, -r ** 3, sigma=True), s(3, r, sigma=True))
    alamouti(2, 0, s(3, r), s(4, r ** 3))
    return LinearSTBC("fast4x2", 4, 4, w.w,
                      symbol_labels=tuple(f"f{k}" for k in range(1, 17)), n_rx=n_rx,
                      notes="structure-verified only")


CATALOG = {
    "vblast4": build_vblast,
    "alamouti": build_alamouti,
    "golden": build_golden,
    "sr2x2": build_sr2x2,
    "sr4x2": build_sr4x2,
    "fast4x2": build_fast4x2,
    "ciod4": build_ciod4,
}

# Reference pulse-group counts for the catalog codes.
PULSE_GROUP_COUNTS = {"vblast4": 4, "golden": 2, "sr2x2": 2, "sr4x2": 2, "fast4x2": 2}


def catalog_names():
    return list(CATALOG)


def get_code(name: str) -> LinearSTBC:
    """Build a catalog code by name; ``vblast<N>`` works for any ``N``."""
    key = name.lower()
    if key in CATALOG:
        return CATALOG[key]()
    if key.startswith("vblast") and key[6:].isdigit():
        return build_vblast(int(key[6:]))
    raise InvalidArgument(f"unknown code '{name}' (known: {', '.join(CATALOG)})")
