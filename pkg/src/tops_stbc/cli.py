"""Command-line front end: ``tops-stbc <command> ...``.

Exit codes: 0 success, 2 configuration or parse error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, codefile, decoders
from .catalog import catalog_names
from .errors import (CodeFileParseError, ConfigInvalid, InvalidArgument, NotSeparable,
                     NumericFailure)
from .experiments import (load_config, parse_config, read_csv_hash, report_partition,
                          resolve_code, run_ber_sweep, run_complexity_audit,
                          write_audit_csv, write_csv)
from .pulses import build_pulse_family, export_csv, fractional_energy_bandwidth

log = logging.getLogger("tops_stbc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _cmd_partition(args):
    print(report_partition(args.code, args.M))


def _cmd_catalog(args):
    for name in catalog_names():
        code = resolve_code(name)
        note = f"  ({code.notes})" if code.notes else ""
        print(f"{name:10s} N_t={code.n_tx} T={code.n_slots} K={code.n_symbols} "
              f"n_rx={code.n_rx} scale={code.energy_scale:.6g}{note}")


def _cmd_export(args):
    text = codefile.dumps(resolve_code(args.code))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_pulses(args):
    fam = build_pulse_family(args.P, 1.0, args.oversampling or max(64, 8 * args.P), args.width)
    for i, w in enumerate(fam.pulses):
        log.info("pulse %d: 99%% bandwidth %.4f / T_s", i, fractional_energy_bandwidth(w))
    if args.output:
        export_csv(fam, args.output)
    else:
        for t, row in zip(fam.t, fam.samples.T):
            print(",".join([repr(float(t))] + [repr(float(v)) for v in row]))


def _ber_config(args):
    flags = {"code": args.code, "M": args.M, "constellation": args.constellation,
             "bits": args.bits, "trials": args.trials, "seed": args.seed,
             "partition": args.partition, "workers": args.workers, "output": args.output,
             "snr_kind": args.snr_kind, "n_rx": args.n_rx}
    if args.strategy:
        flags["strategies"] = tuple(s.strip() for s in args.strategy.split(",") if s.strip())
    if args.snr:
        from .experiments import parse_snr
        try:
            flags["snr_db"] = parse_snr(args.snr)
        except ValueError as exc:
            raise ConfigInvalid(str(exc), field="snr_db") from None
    if args.waveform:
        flags["waveform"] = True
    if args.trials is not None:
        flags["bits"] = None
    if args.config:
        return load_config(args.config, **flags)
    return parse_config("", **flags)


def _cmd_ber(args):
    cfg = _ber_config(args)
    out = cfg.output
    if out and Path(out).exists() and args.resume:
        old = read_csv_hash(out)
        if old is not None and old != cfg.digest():
            raise ConfigInvalid(f"{out} was written by config {old}, not {cfg.digest()}",
                                field="output")
        log.info("%s already holds config %s; rerunning deterministically", out, old)

    def progress(rows):
        for r in rows:
            log.info("%s %s %.2f dB: BER %.3e (%d/%d)", r.code, r.strategy, r.snr_db,
                     r.ber, r.bit_errors, r.bits)

    result = run_ber_sweep(cfg, progress)
    text = write_csv(result, out)
    if not out:
        sys.stdout.write(text)


def _cmd_audit(args):
    codes = [c.strip() for c in args.codes.split(",")]
    strategies = [s.strip() for s in args.strategy.split(",")] if args.strategy \
        else list(decoders.STRATEGIES)
    M_list = [int(m) for m in args.M_list.split(",")]
    rows = run_complexity_audit(codes, strategies, M_list, args.seed,
                                partition=args.partition)
    text = write_audit_csv(rows, args.output)
    if not args.output:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tops-stbc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="report pulse groups and subgroup structure")
    p.add_argument("code", help="catalog name or code file")
    p.add_argument("--M", type=int, default=4, help="QAM size for the count summary")
    p.set_defaults(func=_cmd_partition)

    p = sub.add_parser("catalog", help="list catalog codes")
    p.set_defaults(func=_cmd_catalog)

    p = sub.add_parser("export", help="write a code in the text code-file format")
    p.add_argument("code")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("pulses", help="export an orthonormal pulse family as CSV")
    p.add_argument("--P", type=int, required=True)
    p.add_argument("--oversampling", type=int)
    p.add_argument("--width", type=float, help="Gaussian width in units of T_s (default 1/8)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_pulses)

    p = sub.add_parser("ber", help="Monte-Carlo BER sweep")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--code")
    p.add_argument("--M", type=int)
    p.add_argument("--constellation", help="qam (default), pam, psk or bpsk")
    p.add_argument("--strategy", help="comma list of " + ", ".join(decoders.STRATEGIES))
    p.add_argument("--snr", help="a:b:step or comma list, dB")
    p.add_argument("--snr-kind", choices=("ebn0", "es"))
    p.add_argument("--bits", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--partition", choices=("tops", "shared", "csr", "single"))
    p.add_argument("--n-rx", type=int)
    p.add_argument("--waveform", action="store_true", help="simulate the full pulse path")
    p.add_argument("--workers", type=int)
    p.add_argument("--resume", action="store_true",
                   help="refuse to overwrite output written by a different config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_ber)

    p = sub.add_parser("audit", help="metric-evaluation counts and fitted exponents")
    p.add_argument("--codes", default="all")
    p.add_argument("--strategy")
    p.add_argument("--M-list", default="4,16,64")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--partition", default="tops", choices=("tops", "shared", "csr", "single"))
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_audit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ConfigInvalid, CodeFileParseError, InvalidArgument, NotSeparable, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
