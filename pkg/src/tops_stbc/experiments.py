"""BER sweeps, complexity audits and partition reports.

A sweep runs Monte-Carlo trials in fixed-size blocks. Block ``b`` at SNR
index ``i`` draws its channel, symbols and noise from streams keyed by
``(seed, i, b)``, so results do not depend on worker count or order and
every strategy sees the same draws.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, core, decoders
from .catalog import catalog_names, get_code
from .codefile import load as load_code_file
from .constellation import by_name
from .errors import ConfigInvalid, InvalidArgument, NotSeparable, NumericFailure
from .pulses import build_pulse_family
from .streams import stream
from .waveform import complex_normal, discrete_shortcut, matched_filter_bank, transmit

__all__ = ["ExperimentConfig", "ExperimentResult", "BerRow", "CSV_SCHEMA",
           "load_config", "parse_config", "parse_snr", "resolve_code",
           "resolve_partition", "noise_density", "run_ber_sweep", "consistency_check",
           "run_complexity_audit", "report_partition", "write_csv"]

CSV_SCHEMA = "tops-ber-v1"
AUDIT_SCHEMA = "tops-audit-v1"
PARTITIONS = ("tops", "shared", "csr", "single")


def parse_snr(text: str) -> tuple:
    """``"a:b:step"`` (inclusive) or a comma list of dB values."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("SNR range must be a:b:step")
        a, b, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR step must be positive")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return tuple(round(a + i * step, 10) for i in range(max(n, 0)))
    return tuple(float(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a sweep's output.

    ``trials`` wins over ``bits`` when both are set; otherwise the trial
    count is the number of codewords needed to reach ``bits``.
    """

    code: str = "golden"
    M: int = 4
    constellation: str = "qam"
    strategies: tuple = ("group",)
    snr_db: tuple = (0.0, 5.0, 10.0)
    snr_kind: str = "ebn0"
    trials: int | None = None
    bits: int | None = 100_000
    seed: int | None = 0
    waveform: bool = False
    partition: str = "tops"
    oversampling: int | None = None
    width: float | None = None
    block: int = 1000
    workers: int = 1
    max_candidates: int = decoders.DEFAULT_MAX_CANDIDATES
    n_rx: int | None = None
    check_frames: int = 500
    output: str | None = None

    def __post_init__(self):
        def bad(msg, name):
            raise ConfigInvalid(msg, field=name)

        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "snr_db", tuple(float(v) for v in self.snr_db))
        if self.seed is None:
            bad("a seed is required", "seed")
        if not self.strategies:
            bad("at least one strategy is required", "strategies")
        for s in self.strategies:
            if s not in decoders.STRATEGIES:
                bad(f"unknown strategy '{s}'", "strategies")
        if not self.snr_db:
            bad("empty SNR grid", "snr_db")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            bad("SNR grid must be strictly increasing", "snr_db")
        if self.snr_kind not in ("ebn0", "es"):
            bad("snr_kind must be 'ebn0' or 'es'", "snr_kind")
        if self.trials is not None and self.trials < 1:
            bad("trials must be >= 1", "trials")
        if self.trials is None and (self.bits is None or self.bits < 1):
            bad("bits must be >= 1", "bits")
        if self.partition not in PARTITIONS:
            bad(f"partition must be one of {', '.join(PARTITIONS)}", "partition")
        if self.block < 1:
            bad("block must be >= 1", "block")
        if self.workers < 1:
            bad("workers must be >= 1", "workers")
        if self.check_frames < 0:
            bad("check_frames must be >= 0", "check_frames")
        try:
            by_name(self.constellation, self.M)
        except (InvalidArgument, ValueError) as exc:
            raise ConfigInvalid(str(exc), field="M") from None

    def digest(self) -> str:
        """Short hash of every field that affects results."""
        d = asdict(self)
        for k in ("workers", "output"):
            d.pop(k)
        text = repr(sorted(d.items()))
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def n_trials(self, bits_per_codeword: int) -> int:
        if self.trials is not None:
            return self.trials
        return math.ceil(self.bits / bits_per_codeword)


_CONVERTERS = {
    "M": int, "trials": int, "bits": int, "seed": int, "block": int, "workers": int,
    "max_candidates": int, "n_rx": int, "oversampling": int, "check_frames": int,
    "width": float,
    "strategies": lambda v: tuple(s.strip() for s in v.split(",") if s.strip()),
    "snr_db": parse_snr,
    "waveform": lambda v: {"true": True, "1": True, "yes": True,
                           "false": False, "0": False, "no": False}[v.lower()],
}
_ALIASES = {"strategy": "strategies", "snr": "snr_db", "m": "M", "out": "output", "o": "output"}


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys mirror the CLI flags (``strategy``, ``snr``, ``bits``, ...).
    Errors name the offending line and field.
    """
    names = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid("expected 'key = value'", line=lineno)
        key, val = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in names:
            raise ConfigInvalid("unknown key", field=key, line=lineno)
        if val.lower() == "none":
            values[key] = None
            continue
        try:
            values[key] = _CONVERTERS.get(key, str)(val)
        except (ValueError, KeyError):
            raise ConfigInvalid(f"cannot parse '{val}'", field=key, line=lineno) from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except ConfigInvalid as exc:
        # re-attach the line where the field was set
        line = _line_of(text, exc.field)
        raise ConfigInvalid(str(exc).split(": ", 1)[-1], field=exc.field, line=line) from None


def _line_of(text, name):
    keys = {name} | {a for a, b in _ALIASES.items() if b == name}
    for lineno, raw in enumerate(text.splitlines(), 1):
        key = raw.split("#", 1)[0].split("=", 1)[0].strip().replace("-", "_")
        if key in keys:
            return lineno
    return None


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), **overrides)


def resolve_code(name_or_file: str) -> core.LinearSTBC:
    """A catalog name, or a path to a code file."""
    p = Path(name_or_file)
    if p.suffix or p.exists():
        return load_code_file(p)
    return get_code(name_or_file)


def resolve_partition(code, mode: str = "tops") -> core.CSRPartition:
    if mode == "tops":
        return core.tops_partition(code)
    if mode == "shared":
        return core.shared_pulse_partition(code)
    if mode == "csr":
        return core.csr_partition(code)
    if mode == "single":
        return core.single_group_partition(code)
    raise InvalidArgument(f"unknown partition mode '{mode}'")


def noise_density(code, constellation, snr_db: float, kind: str = "ebn0") -> float:
    """``N0`` for a given SNR.

    ``ebn0``: ``Eb = E||X||^2 / bits per codeword``; ``es``: ``Es =
    E||X||^2 / T``. Energies are per transmitted codeword, with unit
    average channel gain per link.
    """
    e = code.mean_codeword_energy(constellation)
    if kind == "ebn0":
        e /= constellation.bits_per_codeword(code.n_symbols)
    else:
        e /= code.n_slots
    return e / 10 ** (snr_db / 10)


# -- sweep ------------------------------------------------------------------

@dataclass
class BerRow:
    code: str
    strategy: str
    M: int
    snr_db: float
    bit_errors: int
    bits: int
    ber: float
    ber_stderr: float
    mean_metric_evals: float
    fallbacks: int
    config_hash: str
    wall_time: float = 0.0

    COLUMNS = ("code", "strategy", "M", "snr_db", "bit_errors", "bits", "ber",
               "ber_stderr", "mean_metric_evals", "fallbacks", "config_hash", "wall_time")


@dataclass
class ExperimentResult:
    rows: list
    config: ExperimentConfig | None = None
    provenance: dict = field(default_factory=dict)


class _Setup:
    """Per-sweep objects rebuilt identically on each worker."""

    def __init__(self, cfg: ExperimentConfig):
        code = resolve_code(cfg.code)
        if cfg.n_rx is not None:
            from dataclasses import replace
            code = replace(code, n_rx=cfg.n_rx)
        self.code = code
        self.const = by_name(cfg.constellation, cfg.M)
        self.part = resolve_partition(code, cfg.partition)
        self.pulses = None
        if cfg.waveform or cfg.check_frames:
            p = self.part.p_count
            over = cfg.oversampling or max(64, 8 * p)
            self.pulses = build_pulse_family(p, 1.0, over, cfg.width)


def _observe(setup, s, h, n0, rng, waveform):
    code, part = setup.code, setup.part
    x = [core.group_codeword(code, part, g, s) for g in range(part.p_count)]
    if waveform:
        frame = transmit(x, setup.pulses, h, n0, rng)
        return matched_filter_bank(frame, setup.pulses, part)
    return discrete_shortcut(x, h, n0, rng, part)


def _run_block(args):
    cfg, snr_idx, block_idx, n = args
    setup = _Setup(cfg)
    code, const = setup.code, setup.const
    n0 = noise_density(code, const, cfg.snr_db[snr_idx], cfg.snr_kind)
    s, bits = const.random_symbols(stream(cfg.seed, snr_idx, block_idx, role="symbols"),
                                   n, code.n_symbols)
    h = complex_normal(stream(cfg.seed, snr_idx, block_idx, role="channel"),
                       (n, code.n_rx, code.n_tx))
    obs = _observe(setup, s, h, n0, stream(cfg.seed, snr_idx, block_idx, role="noise"),
                   cfg.waveform)
    out = {}
    for strategy in cfg.strategies:
        r = decoders.decode_batch(strategy, obs, h, code, const, setup.part,
                                  max_candidates=cfg.max_candidates)
        errs = np.count_nonzero(r.bits != bits, axis=1)
        out[strategy] = (errs, r.metric_evals, int(r.fallback.sum()))
    return out


def consistency_check(code, partition, pulses, frames: int = 500, seed: int = 0,
                      atol: float = 1e-8) -> float:
    """Largest waveform-vs-shortcut discrepancy over noiseless frames.

    Raises :class:`NumericFailure` above ``atol``.
    """
    from .constellation import qam
    const = qam(4)
    s, _ = const.random_symbols(stream(seed, role="check"), frames, code.n_symbols)
    h = complex_normal(stream(seed, 1, role="check"), (frames, code.n_rx, code.n_tx))
    x = [core.group_codeword(code, partition, g, s) for g in range(partition.p_count)]
    wf = matched_filter_bank(transmit(x, pulses, h, 0.0), pulses, partition)
    ds = discrete_shortcut(x, h, 0.0)
    err = max(float(np.max(np.abs(a - b))) for a, b in zip(wf.y, ds.y))
    if not err <= atol:
        raise NumericFailure(f"waveform and discrete paths differ by {err:.3e} (> {atol:g})")
    return err


def run_ber_sweep(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    """Monte-Carlo BER of every configured strategy on a shared draw set."""
    setup = _Setup(cfg)
    code, const = setup.code, setup.const
    for strategy in cfg.strategies:
        # fail fast on inapplicable strategies, before any trials run
        if strategy == "iq" and not all(decoders.iq_decoupled(code, g.index_set)
                                        for g in setup.part.groups):
            raise NotSeparable(f"strategy 'iq' does not apply to {code.name}")
    check = None
    if cfg.check_frames:
        check = consistency_check(code, setup.part, setup.pulses, cfg.check_frames, cfg.seed)
    bpc = const.bits_per_codeword(code.n_symbols)
    n_trials = cfg.n_trials(bpc)
    h = cfg.digest()
    rows = []
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for i, snr in enumerate(cfg.snr_db):
            t0 = time.perf_counter()
            jobs = [(cfg, i, b, min(cfg.block, n_trials - b * cfg.block))
                    for b in range(math.ceil(n_trials / cfg.block))]
            results = list(pool.map(_run_block, jobs)) if pool else [_run_block(j) for j in jobs]
            wall = time.perf_counter() - t0
            for strategy in cfg.strategies:
                errs = np.concatenate([r[strategy][0] for r in results])
                evals = np.concatenate([r[strategy][1] for r in results])
                fb = sum(r[strategy][2] for r in results)
                n_err = int(errs.sum())
                frac = errs / bpc
                stderr = float(np.std(frac, ddof=1) / math.sqrt(n_trials)) if n_trials > 1 else float("nan")
                rows.append(BerRow(code.name, strategy, const.size, snr, n_err,
                                   n_trials * bpc, n_err / (n_trials * bpc), stderr,
                                   float(evals.mean()), fb, h, wall))
            if progress:
                progress(rows[-len(cfg.strategies):])
    finally:
        if pool:
            pool.shutdown()
    prov = {"seed": cfg.seed, "config_hash": h, "version": __version__,
            "trials": n_trials, "partition_P": setup.part.p_count,
            "path": "waveform" if cfg.waveform else "discrete", "consistency_max_err": check}
    return ExperimentResult(rows, cfg, prov)


def write_csv(result: ExperimentResult, path=None) -> str:
    """Serialize with a schema/provenance comment line; returns the text."""
    buf = io.StringIO()
    prov = " ".join(f"{k}={v}" for k, v in result.provenance.items())
    buf.write(f"# schema={CSV_SCHEMA} {prov}\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(BerRow.COLUMNS)
    for r in result.rows:
        out.writerow([r.code, r.strategy, r.M, repr(r.snr_db), r.bit_errors, r.bits,
                      repr(r.ber), repr(r.ber_stderr), repr(r.mean_metric_evals),
                      r.fallbacks, r.config_hash, f"{r.wall_time:.3f}"])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv_hash(path) -> str | None:
    """Config hash recorded in an existing sweep CSV, or None if empty."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(l for l in fh if not l.startswith("#"))]
    hashes = {r[BerRow.COLUMNS.index("config_hash")] for r in rows[1:]}
    if len(hashes) > 1:
        raise ConfigInvalid(f"{path} mixes several config hashes")
    return hashes.pop() if hashes else None


# -- audit and report -------------------------------------------------------

def run_complexity_audit(codes=("all",), strategies=decoders.STRATEGIES, M_list=(4, 16, 64),
                         seed: int = 0, max_candidates: int = decoders.AUDIT_MAX_CANDIDATES,
                         partition: str = "tops"):
    """Audit rows for every code and strategy; unknown names are config errors."""
    for s in strategies:
        if s not in decoders.STRATEGIES:
            raise ConfigInvalid(f"unknown strategy '{s}'", field="strategy")
    names = catalog_names() if "all" in codes else list(codes)
    rows = []
    for name in names:
        try:
            code = resolve_code(name)
        except (InvalidArgument, OSError):
            raise ConfigInvalid(f"unknown code '{name}'", field="codes") from None
        rows += decoders.complexity_audit(code, strategies, M_list,
                                          resolve_partition(code, partition), seed,
                                          max_candidates)
    return rows


def write_audit_csv(rows, path=None) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={AUDIT_SCHEMA} version={__version__}\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["code", "strategy", "M", "metric_evals", "exponent", "status"])
    for r in rows:
        out.writerow([r.code, r.strategy, r.M, r.metric_evals, f"{r.exponent + 0.0:.4f}", r.status])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _group_label(code, grp):
    cells = list(grp.support)
    if code.rectangular:
        tag = ""
    elif all(r == c for r, c in cells):
        tag = "diag"
    elif all(r != c for r, c in cells):
        tag = "offdiag"
    else:
        tag = "mixed"
    return f"{tag}{grp.support} g={grp.size}"


def report_partition(name_or_file: str, M: int = 4) -> str:
    """Human-readable partition, subgroup structure and search sizes."""
    code = resolve_code(name_or_file)
    part = core.tops_partition(code)
    const = by_name("qam", M)
    lines = [f"code {code.name}: N_t={code.n_tx} T={code.n_slots} K={code.n_symbols}",
             f"P={part.p_count}; groups: "
             + ", ".join(_group_label(code, g) for g in part.groups)]
    for g in range(part.p_count):
        st = core.intra_group_structure(code, part, g)
        subs = " ".join("{" + ",".join(code.symbol_labels[k] for k in sub) + "}"
                        for sub in st.subgroups)
        lines.append(f"  group {g + 1}: Q={st.q_count} subgroups {subs}")
    shared = core.shared_pulse_partition(code, part)
    if shared.p_count != part.p_count:
        lines.append(f"shared-pulse P={shared.p_count}; groups: "
                     + ", ".join(f"{g.support} g={g.size}" for g in shared.groups))
    counts = []
    for s in decoders.STRATEGIES:
        try:
            counts.append(f"{s}={decoders.candidate_count(s, code, part, const)}")
        except NotSeparable:
            counts.append(f"{s}=n/a")
    lines.append(f"metric evaluations at M={M}: " + " ".join(counts))
    return "\n".join(lines)
