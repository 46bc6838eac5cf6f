"""Exhaustive ML decoders with exact metric-evaluation counts.

All strategies work on the real-valued equivalent of each group's
observation: ``vec_r(Y_g) = G_g s + n`` where column ``k`` of ``G_g`` is
``[Re vec(H A_k); Im vec(H A_k)]``. A *metric evaluation* is one
Euclidean distance ``||y - G s||^2`` for one complete candidate of the
symbols being searched. Counts are tallied by the search loops
themselves, not inferred from formulas (:func:`candidate_count` is the
independent formula).

Candidates are enumerated in lexicographic order of their real symbol
values (first symbol most significant) and the first minimum wins, so
ties are broken identically by every strategy.

Strategies
----------
``joint``
    Whole codebook against all group observations at once.
``group``
    Independent search per pulse group.
``subgroup``
    Independent search per quasi-orthogonal subgroup of each group.
``iq``
    Per group, in-phase and quadrature coordinates searched separately.
``qr-hardlimit``
    Per subgroup, enumerate the conditioned symbols and resolve the rest
    by QR back-substitution with rounding to the nearest level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .constellation import Constellation, qam
from .core import CSRPartition, LinearSTBC
from .errors import (CodebookTooLarge, NotSeparable, PartitionMismatch,
                     StructureMismatch)
from .streams import stream
from .waveform import FilteredObservations, complex_normal, discrete_shortcut

__all__ = ["STRATEGIES", "DEFAULT_MAX_CANDIDATES", "DecodeResult",
           "BatchDecodeResult", "AuditRow", "decode_batch", "joint_ml",
           "group_ml", "subgroup_ml", "iq_separated_ml", "qr_hardlimit_ml",
           "candidate_count", "default_condition_set", "complexity_audit",
           "fit_exponent", "real_generator", "iq_decoupled"]

STRATEGIES = ("joint", "group", "subgroup", "iq", "qr-hardlimit")
DEFAULT_MAX_CANDIDATES = 10 ** 6
AUDIT_MAX_CANDIDATES = 1 << 25
_CHUNK_ELEMS = 1 << 21
_RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class DecodeResult:
    s_hat: np.ndarray
    x_hat: np.ndarray
    bits: np.ndarray
    metric_evals: int
    strategy: str
    fallback: bool = False


@dataclass(frozen=True, eq=False)
class BatchDecodeResult:
    s_hat: np.ndarray        # (B, K)
    bits: np.ndarray         # (B, bits per codeword)
    metric_evals: np.ndarray  # (B,)
    strategy: str
    fallback: np.ndarray     # (B,) bool


def real_generator(h, code: LinearSTBC) -> np.ndarray:
    """Columns ``[Re vec(H A_k); Im vec(H A_k)]``, shape ``(B, 2 N_r T, K)``."""
    h = np.asarray(getattr(h, "h", h), dtype=complex)
    if h.ndim == 2:
        h = h[None]
    ha = np.einsum("brn,knt->bkrt", h, code.scaled_weights)
    v = ha.reshape(ha.shape[0], ha.shape[1], -1)
    return np.concatenate([v.real, v.imag], axis=-1).transpose(0, 2, 1)


def _real_obs(y) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.ndim == 2:
        y = y[None]
    v = y.reshape(y.shape[0], -1)
    return np.concatenate([v.real, v.imag], axis=-1)


# -- candidate enumeration --------------------------------------------------

def _units(cols, constellation: Constellation):
    """Enumeration units over ``cols``: ``(positions, values)`` pairs.

    Separable sets give one unit per real symbol; otherwise each complex
    symbol is one unit and must lie entirely inside ``cols``.
    """
    cols = list(cols)
    if constellation.separable:
        return [([i], constellation.rail(k).levels[:, None]) for i, k in enumerate(cols)]
    pos = {k: i for i, k in enumerate(cols)}
    units = []
    for k in cols:
        if k % 2:
            continue
        if k + 1 not in pos:
            raise NotSeparable(
                f"{constellation.name} is not separable but the search splits "
                f"complex symbol {k // 2 + 1}")
        units.append(([pos[k], pos[k + 1]], constellation.unit_values()))
    if sum(len(p) for p, _ in units) != len(cols):
        raise NotSeparable(f"{constellation.name}: search splits a complex symbol")
    return units


def _unit_sizes(units):
    return [len(v) for _, v in units]


def _n_candidates(units) -> int:
    return math.prod(_unit_sizes(units))


def _candidates(units, width, index) -> np.ndarray:
    index = np.asarray(index)
    out = np.empty(index.shape + (width,))
    if not units:
        return out
    digits = np.unravel_index(index, _unit_sizes(units))
    for (pos, vals), d in zip(units, digits):
        out[..., pos] = vals[d]
    return out


def _search(y, G, units, max_candidates):
    """Exhaustive minimization of ``||y - G s||^2`` over the unit product.

    Returns ``(s_best (B, k), evaluations)``.
    """
    B, D = y.shape
    k = G.shape[2]
    n = _n_candidates(units)
    if n > max_candidates:
        raise CodebookTooLarge(f"{n} candidates exceed the cap of {max_candidates}")
    n_chunk = max(1, min(n, _CHUNK_ELEMS // max(D, 1)))
    b_chunk = max(1, _CHUNK_ELEMS // (n_chunk * max(D, 1)))
    best = np.full(B, np.inf)
    best_idx = np.zeros(B, dtype=np.int64)
    Gt = G.transpose(0, 2, 1)
    evals = 0
    for c0 in range(0, n, n_chunk):
        c1 = min(n, c0 + n_chunk)
        S = _candidates(units, k, np.arange(c0, c1))
        evals += c1 - c0
        for b0 in range(0, B, b_chunk):
            b1 = min(B, b0 + b_chunk)
            r = y[b0:b1, None, :] - S @ Gt[b0:b1]
            m = np.einsum("bnd,bnd->bn", r, r)
            j = m.argmin(axis=1)
            v = m[np.arange(b1 - b0), j]
            upd = v < best[b0:b1]
            best[b0:b1][upd] = v[upd]
            best_idx[b0:b1][upd] = j[upd] + c0
    return _candidates(units, k, best_idx), evals


# -- structure helpers ------------------------------------------------------

def _resolve(obs, code, partition):
    if isinstance(obs, FilteredObservations):
        ys = obs.y
        part = partition if partition is not None else obs.partition
        if partition is not None and obs.partition is not None and \
                [g.index_set for g in partition.groups] != \
                [g.index_set for g in obs.partition.groups]:
            raise PartitionMismatch("observations were produced with another partition")
    else:
        ys = (np.asarray(obs),)
        part = partition
    if part is None:
        if len(ys) != 1:
            raise PartitionMismatch("multi-group observations need a partition")
        part = core.single_group_partition(code)
    if len(ys) != part.p_count:
        raise PartitionMismatch(f"{len(ys)} observation groups vs P={part.p_count}")
    if part.n_symbols != code.n_symbols:
        raise PartitionMismatch("partition does not match the code's symbol count")
    return [_real_obs(y) for y in ys], part


def _intra(code, part, intra):
    if intra is None:
        return [core.intra_group_structure(code, part, g) for g in range(part.p_count)]
    intra = list(intra)
    if len(intra) != part.p_count:
        raise StructureMismatch("one intra-group structure per group required")
    for g, st in enumerate(intra):
        flat = sorted(k for sub in st.subgroups for k in sub)
        if flat != sorted(part.groups[g].index_set):
            raise StructureMismatch(f"subgroups do not partition group {g}")
    return intra


def iq_decoupled(code: LinearSTBC, cols) -> bool:
    """Whether every in-phase weight is quasi-orthogonal to every quadrature weight."""
    i_set = [k for k in cols if k % 2 == 0]
    q_set = [k for k in cols if k % 2 == 1]
    return all(core.quasi_orthogonal_pair(code.weights[a], code.weights[b])
               for a in i_set for b in q_set)


def default_condition_set(code: LinearSTBC, partition: CSRPartition, intra=None):
    """All members but the last of every quasi-orthogonal subgroup."""
    intra = _intra(code, partition, intra)
    return tuple(sorted(k for st in intra for sub in st.subgroups for k in sub[:-1]))


# -- strategies -------------------------------------------------------------

def _joint(ys, G, part, constellation, max_candidates):
    blocks = []
    for g, grp in enumerate(part.groups):
        mask = np.zeros(G.shape[2], dtype=bool)
        mask[list(grp.index_set)] = True
        blocks.append(G * mask)
    y_all = np.concatenate(ys, axis=1)
    G_all = np.concatenate(blocks, axis=1)
    s, evals = _search(y_all, G_all, _units(range(G.shape[2]), constellation), max_candidates)
    return s, np.full(len(s), evals)


def _by_sets(ys, G, part, constellation, max_candidates, sets_per_group):
    B, K = ys[0].shape[0], G.shape[2]
    s_hat = np.zeros((B, K))
    evals = 0
    for g, sets in enumerate(sets_per_group):
        for cols in sets:
            cols = list(cols)
            if not cols:
                continue
            s, n = _search(ys[g], G[:, :, cols], _units(cols, constellation), max_candidates)
            s_hat[:, cols] = s
            evals += n
    return s_hat, np.full(B, evals)


def _hardlimit_subgroup(y, G, cond, rest, constellation, max_candidates):
    """Enumerate ``cond``, back-substitute ``rest``; returns (s_cond, s_rest, evals, ok)."""
    B, D = y.shape
    units = _units(cond, constellation)
    n = _n_candidates(units)
    if n > max_candidates:
        raise CodebookTooLarge(f"{n} conditioned candidates exceed the cap of {max_candidates}")
    Gc = G[:, :, list(cond)]
    Gr = G[:, :, list(rest)]
    r_len = len(rest)
    rails = [constellation.rail(k) for k in rest]
    if r_len:
        Qm, Rm = np.linalg.qr(Gr)
        diag = np.abs(np.diagonal(Rm, axis1=1, axis2=2))
        ok = diag.min(axis=1) > _RANK_RTOL * np.maximum(diag.max(axis=1), 1e-300)
    else:
        ok = np.ones(B, dtype=bool)
    n_chunk = max(1, min(n, _CHUNK_ELEMS // max(D, 1) // max(B, 1)))
    best = np.full(B, np.inf)
    best_c = np.zeros((B, len(cond)))
    best_r = np.zeros((B, r_len))
    evals = 0
    for c0 in range(0, n, n_chunk):
        c1 = min(n, c0 + n_chunk)
        S = _candidates(units, len(cond), np.arange(c0, c1))  # (n, c)
        resid = y[:, None, :] - S @ Gc.transpose(0, 2, 1)  # (B, n, D)
        sr = np.zeros((B, c1 - c0, r_len))
        if r_len:
            z = np.einsum("bdr,bnd->bnr", Qm, resid)
            for j in range(r_len - 1, -1, -1):
                acc = z[..., j] - np.einsum("bm,bnm->bn", Rm[:, j, j + 1:], sr[..., j + 1:])
                with np.errstate(divide="ignore", invalid="ignore"):
                    est = acc / Rm[:, j, j][:, None]
                sr[..., j] = rails[j].hard_limit(np.nan_to_num(est))
            resid = resid - np.einsum("bdr,bnr->bnd", Gr, sr)
        m = np.einsum("bnd,bnd->bn", resid, resid)
        evals += c1 - c0
        j = m.argmin(axis=1)
        v = m[np.arange(B), j]
        upd = v < best
        best[upd] = v[upd]
        best_c[upd] = S[j[upd]]
        best_r[upd] = sr[np.arange(B), j][upd]
    return best_c, best_r, evals, ok


def _qr(ys, G, part, code, constellation, max_candidates, intra, condition_set):
    if not constellation.separable:
        raise NotSeparable(f"hard-limiting needs a separable set, got {constellation.name}")
    intra = _intra(code, part, intra)
    if condition_set is None:
        condition_set = default_condition_set(code, part, intra)
    condition_set = set(int(k) for k in condition_set)
    B, K = ys[0].shape[0], G.shape[2]
    s_hat = np.zeros((B, K))
    evals = np.zeros(B, dtype=np.int64)
    fallback = np.zeros(B, dtype=bool)
    for g, st in enumerate(intra):
        group_bad = np.zeros(B, dtype=bool)
        for sub in st.subgroups:
            cond = [k for k in sub if k in condition_set]
            rest = [k for k in sub if k not in condition_set]
            sc, sr, n, ok = _hardlimit_subgroup(ys[g], G, cond, rest, constellation,
                                                max_candidates)
            s_hat[:, cond] = sc
            s_hat[:, rest] = sr
            evals += n
            group_bad |= ~ok
        if group_bad.any():
            cols = list(part.groups[g].index_set)
            bad = np.flatnonzero(group_bad)
            s, n = _search(ys[g][bad], G[bad][:, :, cols], _units(cols, constellation),
                           max_candidates)
            s_hat[np.ix_(bad, cols)] = s
            evals[bad] += n
            fallback |= group_bad
    return s_hat, evals, fallback


def decode_batch(strategy: str, obs, h, code: LinearSTBC, constellation: Constellation,
                 partition: CSRPartition | None = None, *, intra=None, condition_set=None,
                 max_candidates: int = DEFAULT_MAX_CANDIDATES) -> BatchDecodeResult:
    """Decode a batch of observations with one strategy.

    ``obs`` is a :class:`FilteredObservations` (batched or not) or a plain
    ``(…, N_r, T)`` array for the conventional single-pulse system.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy '{strategy}' (known: {', '.join(STRATEGIES)})")
    ys, part = _resolve(obs, code, partition)
    G = real_generator(h, code)
    if G.shape[0] != ys[0].shape[0]:
        raise PartitionMismatch("channel and observation batch sizes differ")
    fallback = np.zeros(G.shape[0], dtype=bool)
    if strategy == "joint":
        s, evals = _joint(ys, G, part, constellation, max_candidates)
    elif strategy == "group":
        s, evals = _by_sets(ys, G, part, constellation, max_candidates,
                            [[g.index_set] for g in part.groups])
    elif strategy == "subgroup":
        structs = _intra(code, part, intra)
        s, evals = _by_sets(ys, G, part, constellation, max_candidates,
                            [st.subgroups for st in structs])
    elif strategy == "iq":
        if not constellation.separable:
            raise NotSeparable(f"{constellation.name} is not separable")
        sets = []
        for g in part.groups:
            if not iq_decoupled(code, g.index_set):
                raise NotSeparable(
                    f"{code.name}: in-phase and quadrature weights of group "
                    f"{list(g.index_set)} are not quasi-orthogonal")
            sets.append([[k for k in g.index_set if k % 2 == 0],
                         [k for k in g.index_set if k % 2 == 1]])
        s, evals = _by_sets(ys, G, part, constellation, max_candidates, sets)
    else:
        s, evals, fallback = _qr(ys, G, part, code, constellation, max_candidates,
                                 intra, condition_set)
    return BatchDecodeResult(s, constellation.bits_from_symbols(s), evals, strategy, fallback)


def _single(strategy, obs, h, code, constellation, partition, **kw) -> DecodeResult:
    r = decode_batch(strategy, obs, h, code, constellation, partition, **kw)
    s = r.s_hat[0]
    return DecodeResult(s, core.assemble_codeword(code, s), r.bits[0],
                        int(r.metric_evals[0]), strategy, bool(r.fallback[0]))


def joint_ml(obs, h, code, constellation, partition=None, *,
             max_candidates=DEFAULT_MAX_CANDIDATES) -> DecodeResult:
    """Exhaustive ML over the full codebook; ``metric_evals == |codebook|``."""
    return _single("joint", obs, h, code, constellation, partition,
                   max_candidates=max_candidates)


def group_ml(obs, h, code, partition, constellation, *,
             max_candidates=DEFAULT_MAX_CANDIDATES) -> DecodeResult:
    return _single("group", obs, h, code, constellation, partition,
                   max_candidates=max_candidates)


def subgroup_ml(obs, h, code, partition, constellation, intra=None, *,
                max_candidates=DEFAULT_MAX_CANDIDATES) -> DecodeResult:
    return _single("subgroup", obs, h, code, constellation, partition, intra=intra,
                   max_candidates=max_candidates)


def iq_separated_ml(obs, h, code, partition, constellation, *,
                    max_candidates=DEFAULT_MAX_CANDIDATES) -> DecodeResult:
    return _single("iq", obs, h, code, constellation, partition,
                   max_candidates=max_candidates)


def qr_hardlimit_ml(obs, h, code, partition, constellation, condition_set=None, *,
                    intra=None, max_candidates=DEFAULT_MAX_CANDIDATES) -> DecodeResult:
    """Conditional enumeration with QR back-substitution and hard-limiting.

    Within each quasi-orthogonal subgroup the symbols in ``condition_set``
    are enumerated and the others are solved from the triangular factor
    of their real generator, last first, each rounded to the nearest
    level. If a subgroup leaves a single unconditioned symbol (the
    default), this is exact conditional ML. A numerically singular factor
    switches that trial's group to :func:`group_ml` and sets ``fallback``.
    """
    return _single("qr-hardlimit", obs, h, code, constellation, partition,
                   condition_set=condition_set, intra=intra, max_candidates=max_candidates)


def candidate_count(strategy: str, code: LinearSTBC, partition: CSRPartition,
                    constellation: Constellation, condition_set=None) -> int:
    """Closed-form metric-evaluation count of a strategy (no fallback)."""
    def size(cols):
        cols = list(cols)
        return _n_candidates(_units(cols, constellation)) if cols else 0

    if strategy == "joint":
        return size(range(code.n_symbols))
    if strategy == "group":
        return sum(size(g.index_set) for g in partition.groups)
    intra = _intra(code, partition, None)
    if strategy == "subgroup":
        return sum(size(sub) for st in intra for sub in st.subgroups)
    if strategy == "iq":
        if not constellation.separable or not all(iq_decoupled(code, g.index_set)
                                                  for g in partition.groups):
            raise NotSeparable(f"strategy 'iq' does not apply to {code.name}")
        return sum(size([k for k in g.index_set if k % 2 == p])
                   for g in partition.groups for p in (0, 1))
    if strategy == "qr-hardlimit":
        if condition_set is None:
            condition_set = default_condition_set(code, partition, intra)
        cs = set(condition_set)
        return sum(max(1, size([k for k in sub if k in cs]))
                   for st in intra for sub in st.subgroups)
    raise ValueError(f"unknown strategy '{strategy}'")


# -- complexity audit -------------------------------------------------------

def fit_exponent(ms, counts) -> float:
    """Least-squares slope of ``log(count)`` against ``log(M)``."""
    if len(ms) < 2:
        return float("nan")
    return float(np.polyfit(np.log(ms), np.log(counts), 1)[0])


@dataclass(frozen=True)
class AuditRow:
    code: str
    strategy: str
    M: int
    metric_evals: int
    exponent: float
    status: str  # "decoded", "analytic" or "n/a"


def complexity_audit(code: LinearSTBC, strategies, M_list=(4, 16, 64),
                     partition: CSRPartition | None = None, seed: int = 0,
                     max_candidates: int = AUDIT_MAX_CANDIDATES, snr_db: float = 10.0):
    """Metric-evaluation counts of each strategy across QAM sizes.

    One noisy decode per ``(strategy, M)``. Searches beyond
    ``max_candidates`` report the closed-form count with status
    ``"analytic"``; inapplicable strategies are reported as ``"n/a"``.
    """
    partition = partition or core.tops_partition(code)
    rows = []
    for si, strategy in enumerate(strategies):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy '{strategy}'")
        found = []
        for mi, M in enumerate(M_list):
            const = qam(M)
            rng = stream(seed, si, mi, role="misc")
            s, _ = const.random_symbols(rng, 1, code.n_symbols)
            h = complex_normal(rng, (1, code.n_rx, code.n_tx))
            x = [core.group_codeword(code, partition, g, s) for g in range(partition.p_count)]
            n0 = code.mean_codeword_energy(const) / code.n_slots / 10 ** (snr_db / 10)
            obs = discrete_shortcut(x, h, n0, rng, partition)
            try:
                r = decode_batch(strategy, obs, h, code, const, partition,
                                 max_candidates=max_candidates)
                found.append((M, int(r.metric_evals[0]), "decoded"))
            except CodebookTooLarge:
                found.append((M, candidate_count(strategy, code, partition, const), "analytic"))
            except NotSeparable:
                found.append((M, 0, "n/a"))
        usable = [(m, c) for m, c, st in found if st != "n/a"]
        exp = fit_exponent([m for m, _ in usable], [c for _, c in usable]) \
            if len(usable) == len(found) else float("nan")
        rows += [AuditRow(code.name, strategy, m, c, exp, st) for m, c, st in found]
    return rows
