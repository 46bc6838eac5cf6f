"""Weight-matrix algebra of linear space-time block codes.

A linear STBC over ``K`` real symbols is ``X = c * sum_k s_k A_k`` with
complex ``N_t x T`` weight matrices ``A_k`` and a global amplitude ``c``
(``energy_scale``). This module partitions the weight matrices by common
support, refines groups into quasi-orthogonal subgroups and evaluates the
rank and determinant criteria by exhaustive enumeration.

Indexing is 0-based throughout (symbols, groups, support cells). Printed
supports use the 1-based ``(row, col)`` convention of the literature.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (CodebookTooLarge, DimensionMismatch, InvalidArgument,
                     InvalidMerge, UnknownGroup)

__all__ = [
    "SUPPORT_RTOL", "QO_RTOL", "CODEBOOK_CAP",
    "SupportSet", "LinearSTBC", "Group", "CSRPartition",
    "IntraGroupStructure", "CodeMetrics",
    "support_set", "csr_partition", "pulse_assignable_partition", "coarsen",
    "shared_pulse_partition", "tops_partition", "single_group_partition",
    "assemble_codeword", "group_codeword", "quasi_orthogonal_pair",
    "intra_group_structure", "codebook", "diversity_rank", "coding_gain",
    "normalized_energy_scale",
]

SUPPORT_RTOL = 1e-12
QO_RTOL = 1e-10
CODEBOOK_CAP = 4096
RANK_RTOL = 1e-9


def _as_grid(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise InvalidArgument("expected a non-empty 2-D matrix")
    if not np.all(np.isfinite(m)):
        raise InvalidArgument("matrix has non-finite entries")
    return m


def _components(n, linked):
    """Connected components of ``range(n)`` under ``linked(i, j)``, canonical order."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(n), 2):
        if find(i) != find(j) and linked(i, j):
            parent[max(find(i), find(j))] = min(find(i), find(j))
    comps = {}
    for i in range(n):
        comps.setdefault(find(i), []).append(i)
    return sorted(comps.values(), key=lambda c: c[0])


@dataclass(frozen=True)
class SupportSet:
    """Cells ``(row, col)`` where a matrix is nonzero, in row-major order."""

    cells: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(sorted(set(map(tuple, self.cells)))))

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def __contains__(self, cell):
        return tuple(cell) in self.cells

    def isdisjoint(self, other: SupportSet) -> bool:
        return set(self.cells).isdisjoint(other.cells)

    def union(self, *others: SupportSet) -> SupportSet:
        cells = set(self.cells)
        for o in others:
            cells.update(o.cells)
        return SupportSet(tuple(cells))

    def mask(self, shape) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        for r, c in self.cells:
            m[r, c] = True
        return m

    def __str__(self):
        return "{" + ",".join(f"({r + 1},{c + 1})" for r, c in self.cells) + "}"


def support_set(m, tol: float | None = None) -> SupportSet:
    """Cells where ``|m[i, j]| > tol``.

    With ``tol=None`` the threshold is ``SUPPORT_RTOL`` times the largest
    entry magnitude, so constants like ``alpha / sqrt(5)`` never leave
    rounding residue in the support.
    """
    m = _as_grid(m)
    mag = np.abs(m)
    if tol is None:
        tol = SUPPORT_RTOL * mag.max()
    elif tol < 0:
        raise InvalidArgument("tolerance must be non-negative")
    rows, cols = np.nonzero(mag > tol)
    return SupportSet(tuple(zip(rows.tolist(), cols.tolist())))


def normalized_energy_scale(weights, n_tx, n_slots) -> float:
    """Amplitude giving ``E||X||_F^2 = N_t * T`` for unit-energy complex symbols.

    Each real coordinate of a unit-energy complex symbol has variance 1/2.
    """
    total = 0.5 * float(np.sum(np.abs(np.asarray(weights)) ** 2))
    return math.sqrt(n_tx * n_slots / total)


@dataclass(frozen=True, eq=False)
class LinearSTBC:
    """A linear STBC given by its weight matrices.

    Parameters
    ----------
    name : str
        Identifier used by the catalog, reports and the code file format.
    n_tx, n_slots : int
        Transmit antennas ``N_t`` and channel uses ``T``.
    weights : array_like
        Complex array of shape ``(K, N_t, T)``; ``weights[k]`` multiplies
        real symbol ``k``.
    energy_scale : float, optional
        Global amplitude. Defaults to :func:`normalized_energy_scale`.
    symbol_labels : tuple of str, optional
        Human-readable names of the real symbols.
    rectangular : bool
        Exempts the code from the minimum-delay ``T == N_t`` rule. Only
        the V-BLAST layout uses it.
    n_rx : int
        Receive antennas used by default in simulations.
    """

    name: str
    n_tx: int
    n_slots: int
    weights: np.ndarray
    energy_scale: float | None = None
    symbol_labels: tuple = ()
    rectangular: bool = False
    n_rx: int = 2
    notes: str = ""

    def __post_init__(self):
        w = np.array(self.weights, dtype=complex)
        if w.ndim != 3 or w.shape[1:] != (self.n_tx, self.n_slots):
            raise DimensionMismatch(
                f"weights must have shape (K, {self.n_tx}, {self.n_slots}), got {w.shape}")
        if w.shape[0] == 0:
            raise InvalidArgument("a code needs at least one weight matrix")
        if not np.all(np.isfinite(w)):
            raise InvalidArgument("weight matrices must be finite")
        if not self.rectangular and self.n_slots != self.n_tx:
            raise InvalidArgument(
                f"{self.name}: minimum-delay codes need T == N_t "
                f"(got N_t={self.n_tx}, T={self.n_slots}); set rectangular=True to exempt")
        for k in range(w.shape[0]):
            if not np.any(w[k]):
                raise InvalidArgument(f"{self.name}: weight matrix {k} is all zero")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.energy_scale is None:
            object.__setattr__(self, "energy_scale",
                               normalized_energy_scale(w, self.n_tx, self.n_slots))
        elif not (self.energy_scale > 0 and math.isfinite(self.energy_scale)):
            raise InvalidArgument("energy_scale must be a positive real")
        labels = tuple(self.symbol_labels) or tuple(f"s{k + 1}" for k in range(w.shape[0]))
        if len(labels) != w.shape[0]:
            raise InvalidArgument("one label per real symbol required")
        object.__setattr__(self, "symbol_labels", labels)

    @property
    def n_symbols(self) -> int:
        return self.weights.shape[0]

    @property
    def scaled_weights(self) -> np.ndarray:
        return self.energy_scale * self.weights

    def with_energy_scale(self, scale: float) -> LinearSTBC:
        return replace(self, energy_scale=float(scale))

    def mean_codeword_energy(self, constellation) -> float:
        """``E||X||_F^2`` under independent uniform symbols of ``constellation``."""
        norms = np.sum(np.abs(self.weights) ** 2, axis=(1, 2))
        var = np.array([constellation.real_variance(k) for k in range(self.n_symbols)])
        return float(self.energy_scale ** 2 * norms @ var)


@dataclass(frozen=True)
class Group:
    """One class of a partition: its symbol indices and (union) support."""

    index_set: tuple
    support: SupportSet

    @property
    def size(self) -> int:
        return len(self.index_set)


@dataclass(frozen=True)
class CSRPartition:
    """Disjoint symbol groups covering ``range(n_symbols)``.

    Direct CSR output satisfies the strong invariant that every member of a
    group has exactly the group's support; coarsened partitions carry the
    union of their member supports instead.
    """

    groups: tuple
    n_symbols: int

    def __post_init__(self):
        seen = [k for g in self.groups for k in g.index_set]
        if sorted(seen) != list(range(self.n_symbols)):
            raise InvalidArgument("groups must partition the symbol indices exactly")

    @property
    def p_count(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple:
        return tuple(g.size for g in self.groups)

    def group(self, g: int) -> Group:
        if not 0 <= g < len(self.groups):
            raise UnknownGroup(f"no group {g} (P={len(self.groups)})")
        return self.groups[g]

    def group_of(self, k: int) -> int:
        for gi, g in enumerate(self.groups):
            if k in g.index_set:
                return gi
        raise UnknownGroup(f"symbol {k} not in partition")


def _canonical(groups, n_symbols) -> CSRPartition:
    groups = sorted(groups, key=lambda g: min(g.index_set))
    return CSRPartition(tuple(groups), n_symbols)


def csr_partition(code: LinearSTBC, tol: float | None = None) -> CSRPartition:
    """Equivalence classes of the weight matrices under equal support.

    Groups are ordered by their smallest member symbol index.
    """
    classes = {}
    for k in range(code.n_symbols):
        classes.setdefault(support_set(code.weights[k], tol), []).append(k)
    groups = [Group(tuple(members), supp) for supp, members in classes.items()]
    return _canonical(groups, code.n_symbols)


def single_group_partition(code: LinearSTBC) -> CSRPartition:
    """The trivial partition: one pulse for everything (conventional system)."""
    supp = SupportSet().union(*(support_set(a) for a in code.weights))
    return CSRPartition((Group(tuple(range(code.n_symbols)), supp),), code.n_symbols)


def _merge(p: CSRPartition, blocks) -> CSRPartition:
    groups = []
    for block in blocks:
        members = tuple(sorted(k for g in block for k in p.groups[g].index_set))
        supp = p.groups[block[0]].support.union(*(p.groups[g].support for g in block[1:]))
        groups.append(Group(members, supp))
    return _canonical(groups, p.n_symbols)


def pulse_assignable_partition(p: CSRPartition) -> CSRPartition:
    """Merge classes whose supports intersect so every cell carries one pulse.

    Returns ``p`` itself when its supports are already pairwise disjoint.
    """
    blocks = _components(p.p_count,
                         lambda i, j: not p.groups[i].support.isdisjoint(p.groups[j].support))
    if len(blocks) == p.p_count:
        return p
    return _merge(p, blocks)


def coarsen(p: CSRPartition, merge_spec, strict: bool = True) -> CSRPartition:
    """Merge groups of ``p`` into shared-pulse groups.

    Parameters
    ----------
    p : CSRPartition
    merge_spec : iterable of iterables of int
        Each entry lists 0-based group ids that will share one pulse.
        Groups not mentioned are kept as they are.
    strict : bool
        Reject merges that join groups with intersecting supports.
    """
    used = set()
    blocks = []
    for entry in merge_spec:
        block = sorted(set(int(g) for g in entry))
        for g in block:
            p.group(g)
            if g in used:
                raise InvalidMerge(f"group {g} appears in more than one merge set")
            used.add(g)
        if strict:
            for a, b in itertools.combinations(block, 2):
                if not p.groups[a].support.isdisjoint(p.groups[b].support):
                    raise InvalidMerge(
                        f"groups {a} and {b} have intersecting supports "
                        f"{p.groups[a].support} / {p.groups[b].support}")
        if block:
            blocks.append(block)
    blocks += [[g] for g in range(p.p_count) if g not in used]
    if all(len(b) == 1 for b in blocks):
        return p
    return _merge(p, blocks)


def quasi_orthogonal_pair(a, b, tol: float | None = None) -> bool:
    """Whether ``a b^H + b a^H`` vanishes (Frobenius norm within ``tol``).

    The default tolerance is ``QO_RTOL * ||a|| * ||b||``.
    """
    a = _as_grid(a)
    b = _as_grid(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    prod = a @ b.conj().T
    resid = np.linalg.norm(prod + prod.conj().T)
    if tol is None:
        tol = QO_RTOL * np.linalg.norm(a) * np.linalg.norm(b)
    return bool(resid <= tol)


def _qo_matrix(weights, tol=None) -> np.ndarray:
    n = len(weights)
    out = np.ones((n, n), dtype=bool)
    for i, j in itertools.combinations(range(n), 2):
        out[i, j] = out[j, i] = quasi_orthogonal_pair(weights[i], weights[j], tol)
    np.fill_diagonal(out, False)
    return out


def shared_pulse_partition(code: LinearSTBC, p: CSRPartition | None = None,
                           tol: float | None = None) -> CSRPartition:
    """Let mutually quasi-orthogonal groups share one pulse.

    When every weight matrix of one group is quasi-orthogonal to every
    weight matrix of another, the ML metric already decouples between the
    two, so a separate pulse buys nothing. Groups are visited in canonical
    order and each joins the first merged set it is compatible with.
    Supports of the input must be pairwise disjoint (the default input is
    :func:`tops_partition`).
    """
    if p is None:
        p = tops_partition(code, tol)
    qo = _qo_matrix(code.weights, tol)

    def compatible(ga, gb):
        ia = p.groups[ga].index_set
        ib = p.groups[gb].index_set
        return bool(qo[np.ix_(ia, ib)].all())

    blocks = []
    for g in range(p.p_count):
        for block in blocks:
            if all(compatible(g, other) for other in block):
                block.append(g)
                break
        else:
            blocks.append([g])
    return coarsen(p, blocks)


def tops_partition(code: LinearSTBC, tol: float | None = None) -> CSRPartition:
    """CSR classes, merged where needed so pulses never share a cell."""
    return pulse_assignable_partition(csr_partition(code, tol))


def _check_symbols(code, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape[-1:] != (code.n_symbols,):
        raise DimensionMismatch(f"expected {code.n_symbols} real symbols, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidArgument("symbols must be finite")
    return s


def assemble_codeword(code: LinearSTBC, s) -> np.ndarray:
    """``energy_scale * sum_k s_k A_k``; ``s`` may carry leading batch axes."""
    s = _check_symbols(code, s)
    return np.tensordot(s, code.scaled_weights, axes=([-1], [0]))


def group_codeword(code: LinearSTBC, p: CSRPartition, g: int, s) -> np.ndarray:
    """Sub-codeword built from the symbols of group ``g`` only."""
    s = _check_symbols(code, s)
    idx = list(p.group(g).index_set)
    return np.tensordot(s[..., idx], code.scaled_weights[idx], axes=([-1], [0]))


@dataclass(frozen=True)
class IntraGroupStructure:
    parent_group: int
    subgroups: tuple

    @property
    def q_count(self) -> int:
        return len(self.subgroups)


def intra_group_structure(code: LinearSTBC, p: CSRPartition, g: int,
                          tol: float | None = None) -> IntraGroupStructure:
    """Finest split of group ``g`` with all cross-subgroup pairs quasi-orthogonal.

    Computed as the connected components of the "not quasi-orthogonal"
    graph on the group's members.
    """
    members = p.group(g).index_set
    w = code.weights
    comps = _components(
        len(members),
        lambda i, j: not quasi_orthogonal_pair(w[members[i]], w[members[j]], tol))
    return IntraGroupStructure(g, tuple(tuple(members[i] for i in c) for c in comps))


def _enumerate_symbols(code, constellation, cap):
    n_units = code.n_symbols // 2
    count = constellation.size ** n_units
    if count > cap:
        raise CodebookTooLarge(
            f"{code.name} with {constellation.name}: {count} codewords > cap {cap}")
    pairs = constellation.unit_values()
    idx = np.array(list(itertools.product(range(constellation.size), repeat=n_units)))
    return pairs[idx].reshape(count, code.n_symbols)


def codebook(code: LinearSTBC, constellation, cap: int = CODEBOOK_CAP):
    """All symbol vectors and codewords, shapes ``(N, K)`` and ``(N, N_t, T)``."""
    s = _enumerate_symbols(code, constellation, cap)
    return s, assemble_codeword(code, s)


@dataclass(frozen=True)
class CodeMetrics:
    min_rank: int
    coding_gain: float
    pair_count_examined: int


def _pair_differences(x):
    n = len(x)
    for i in range(n - 1):
        yield x[i + 1:] - x[i]


def _ranks(d):
    sv = np.linalg.svd(d, compute_uv=False)
    tol = RANK_RTOL * np.maximum(sv[..., :1], 1.0)
    return (sv > tol).sum(axis=-1)


def diversity_rank(code: LinearSTBC, constellation, cap: int = CODEBOOK_CAP) -> int:
    """Minimum numerical rank of ``X1 - X2`` over distinct codeword pairs."""
    _, x = codebook(code, constellation, cap)
    return int(min(_ranks(d).min() for d in _pair_differences(x)))


def coding_gain(code: LinearSTBC, constellation, cap: int = CODEBOOK_CAP,
                order=None) -> CodeMetrics:
    """Minimum of ``det[(X1-X2)(X1-X2)^H]`` over distinct codeword pairs.

    Pairs whose difference is rank deficient contribute exactly zero.
    ``order`` optionally permutes the codebook before the pair sweep.
    """
    _, x = codebook(code, constellation, cap)
    if order is not None:
        x = x[np.asarray(order)]
    best = math.inf
    min_rank = code.n_tx
    pairs = 0
    for d in _pair_differences(x):
        pairs += len(d)
        ranks = _ranks(d)
        min_rank = min(min_rank, int(ranks.min()))
        gram = d @ np.conj(np.swapaxes(d, -1, -2))
        det = np.linalg.det(gram)
        full = ranks == code.n_tx
        if np.any(full):
            resid = np.abs(det[full].imag)
            if resid.max() >= 1e-10:
                raise ArithmeticError(f"determinant imaginary residue {resid.max():.3g}")
            best = min(best, float(det[full].real.min()))
        if not np.all(full):
            best = 0.0
    return CodeMetrics(min_rank, max(best, 0.0), pairs)
