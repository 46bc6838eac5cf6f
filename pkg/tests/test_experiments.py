import math

import numpy as np
import pytest

from tops_stbc import cli
from tops_stbc.errors import CodeFileParseError, ConfigInvalid, NotSeparable
from tops_stbc.experiments import (ExperimentConfig, parse_config, parse_snr,
                                   report_partition, run_ber_sweep, run_complexity_audit,
                                   write_audit_csv, write_csv)


def _strip_wall(text):
    return [line.rsplit(",", 1)[0] for line in text.splitlines()]


def test_parse_snr():
    assert parse_snr("0:10:5") == (0.0, 5.0, 10.0)
    assert parse_snr("1, 2.5") == (1.0, 2.5)
    with pytest.raises(ValueError):
        parse_snr("0:1")


@pytest.mark.parametrize("kwargs,field", [
    ({"trials": 0}, "trials"), ({"snr_db": (5, 0)}, "snr_db"), ({"strategies": ("sphere",)}, "strategies"),
    ({"seed": None}, "seed"), ({"M": 8}, "M"), ({"partition": "x"}, "partition"),
    ({"strategies": ()}, "strategies"), ({"snr_kind": "x"}, "snr_kind")])
def test_config_validation(kwargs, field):
    with pytest.raises(ConfigInvalid) as exc:
        ExperimentConfig(**kwargs)
    assert exc.value.field == field


def test_config_file_diagnostics():
    text = "code = golden\n# comment\nstrategy = group, joint\nsnr = 0:4:2\ntrials = 0\n"
    with pytest.raises(ConfigInvalid) as exc:
        parse_config(text)
    assert exc.value.line == 5 and exc.value.field == "trials"
    with pytest.raises(ConfigInvalid) as exc:
        parse_config("code = golden\nbogus = 1\n")
    assert exc.value.line == 2
    with pytest.raises(ConfigInvalid) as exc:
        parse_config("M = four\n")
    assert exc.value.line == 1 and exc.value.field == "M"
    with pytest.raises(ConfigInvalid, match="line 1"):
        parse_config("no equals sign\n")
    cfg = parse_config("code = sr2x2\nstrategy = group,subgroup\nsnr = 0,3\nbits = none\n"
                       "trials = 10\nwaveform = yes\n")
    assert cfg.strategies == ("group", "subgroup") and cfg.waveform and cfg.trials == 10


def test_digest_ignores_workers_and_output():
    a = ExperimentConfig(workers=1)
    assert a.digest() == ExperimentConfig(workers=3, output="x.csv").digest()
    assert a.digest() != ExperimentConfig(seed=1).digest()


def _small(**kw):
    base = dict(code="golden", strategies=("group", "joint"), snr_db=(0.0, 6.0),
                trials=600, bits=None, seed=11, block=250, check_frames=50)
    base.update(kw)
    return ExperimentConfig(**base)


def test_sweep_reproducible_and_worker_independent():
    a = write_csv(run_ber_sweep(_small()))
    b = write_csv(run_ber_sweep(_small()))
    c = write_csv(run_ber_sweep(_small(workers=2)))
    assert _strip_wall(a) == _strip_wall(b) == _strip_wall(c)
    assert a.startswith("# schema=tops-ber-v1")


def test_group_and_joint_columns_identical():
    res = run_ber_sweep(_small())
    by = {}
    for r in res.rows:
        by.setdefault(r.snr_db, {})[r.strategy] = r
        assert r.ber == r.bit_errors / r.bits
        assert r.config_hash == res.config.digest()
    for d in by.values():
        assert d["group"].bit_errors == d["joint"].bit_errors
        assert d["group"].mean_metric_evals == 32 and d["joint"].mean_metric_evals == 256


def test_waveform_path_matches_shortcut_statistically():
    wf = run_ber_sweep(_small(waveform=True, strategies=("group",), trials=3000, snr_db=(3.0,)))
    ds = run_ber_sweep(_small(strategies=("group",), trials=3000, snr_db=(3.0,)))
    a, b = wf.rows[0], ds.rows[0]
    assert abs(a.ber - b.ber) < 4 * math.hypot(a.ber_stderr, b.ber_stderr)


def test_alamouti_bpsk_against_closed_form():
    cfg = ExperimentConfig(code="alamouti", constellation="bpsk", M=2, strategies=("group",),
                           snr_db=(0.0, 10.0), bits=200_000, seed=5, block=20_000)
    for row in run_ber_sweep(cfg).rows:
        g = 10 ** (row.snr_db / 10) / 2
        p = (1 - math.sqrt(g / (1 + g))) / 2
        assert abs(row.ber - p * p * (1 + 2 * (1 - p))) < 3 * row.ber_stderr


def test_inapplicable_strategy_fails_fast():
    with pytest.raises(NotSeparable):
        run_ber_sweep(_small(code="sr2x2", strategies=("iq",)))


def test_report_partition():
    text = report_partition("golden")
    assert "P=2; groups: diag{(1,1),(2,2)} g=4, offdiag{(1,2),(2,1)} g=4" in text
    assert report_partition("vblast4").splitlines()[1].startswith("P=4")
    assert "shared-pulse P=2" in report_partition("sr4x2")


def test_report_malformed_file(tmp_path):
    bad = tmp_path / "bad.stbc"
    bad.write_text("stbc bad 2 2 2\n1+0i 0+0i\n0+0i 1+0i\n1+0i oops\n0+0i 1+0i\n")
    with pytest.raises(CodeFileParseError, match="block 2"):
        report_partition(str(bad))


def test_audit_single_row_and_unknown():
    rows = run_complexity_audit(["golden"], ["group"], [4])
    assert len(rows) == 1 and rows[0].metric_evals == 32
    assert write_audit_csv(rows).splitlines()[1] == "code,strategy,M,metric_evals,exponent,status"
    with pytest.raises(ConfigInvalid):
        run_complexity_audit(["golden"], ["sphere"], [4])
    with pytest.raises(ConfigInvalid):
        run_complexity_audit(["nope"], ["group"], [4])


def test_cli_commands(tmp_path, capsys):
    assert cli.main(["partition", "golden"]) == 0
    assert "P=2" in capsys.readouterr().out
    assert cli.main(["catalog"]) == 0
    out = tmp_path / "g.stbc"
    assert cli.main(["export", "golden", "-o", str(out)]) == 0
    assert cli.main(["partition", str(out)]) == 0
    assert cli.main(["pulses", "--P", "2", "-o", str(tmp_path / "p.csv")]) == 0
    assert cli.main(["audit", "--codes", "golden", "--strategy", "group,iq",
                     "--M-list", "4,16", "-o", str(tmp_path / "a.csv")]) == 0
    assert "golden,iq,16,64,1.0000,decoded" in (tmp_path / "a.csv").read_text()


def test_cli_ber_and_resume(tmp_path, capsys):
    csv_path = tmp_path / "b.csv"
    args = ["ber", "--code", "golden", "--M", "4", "--strategy", "group", "--snr", "0:4:2",
            "--trials", "200", "--seed", "3", "-o", str(csv_path)]
    assert cli.main(args) == 0
    first = csv_path.read_text()
    assert cli.main(args + ["--resume"]) == 0
    assert _strip_wall(csv_path.read_text()) == _strip_wall(first)
    changed = [a if a != "3" else "4" for a in args]
    assert cli.main(changed + ["--resume"]) == 2
    assert "config" in capsys.readouterr().err


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("code = alamouti\nconstellation = bpsk\nM = 2\nstrategy = joint\n"
                   "snr = 0\ntrials = 100\nseed = 1\n")
    out = tmp_path / "o.csv"
    assert cli.main(["ber", "--config", str(cfg), "-o", str(out)]) == 0
    assert "alamouti,joint,2,0.0" in out.read_text()
    cfg.write_text("code = alamouti\ntrials = 0\n")
    assert cli.main(["ber", "--config", str(cfg)]) == 2


def test_cli_exit_codes(tmp_path, monkeypatch):
    assert cli.main(["partition", "nope"]) == 2
    assert cli.main(["ber", "--code", "sr2x2", "--strategy", "iq", "--trials", "5"]) == 2
    bad = tmp_path / "bad.stbc"
    bad.write_text("stbc x 2 2\n")
    assert cli.main(["partition", str(bad)]) == 2

    from tops_stbc import experiments
    from tops_stbc.errors import NumericFailure

    def boom(*a, **k):
        raise NumericFailure("forced")
    monkeypatch.setattr(experiments, "consistency_check", boom)
    assert cli.main(["ber", "--code", "golden", "--trials", "5", "--seed", "1"]) == 3
