import numpy as np
import pytest

from tops_stbc import core
from tops_stbc.catalog import catalog_names, get_code
from tops_stbc.constellation import qam
from tops_stbc.errors import DimensionMismatch, GridMismatch, GroupCountMismatch, InvalidArgument
from tops_stbc.pulses import build_pulse_family
from tops_stbc.streams import stream
from tops_stbc.waveform import (ChannelRealization, complex_normal, discrete_shortcut,
                                draw_channel, dump_frame_csv, matched_filter_bank, transmit)


def _setup(name, batch, seed=0):
    code = get_code(name)
    p = core.tops_partition(code)
    fam = build_pulse_family(p.p_count)
    s, _ = qam(16).random_symbols(np.random.default_rng(seed), batch, code.n_symbols)
    h = draw_channel(code.n_tx, code.n_rx, np.random.default_rng(seed + 1), batch)
    x = [core.group_codeword(code, p, g, s) for g in range(p.p_count)]
    return code, p, fam, x, h


@pytest.mark.parametrize("name", catalog_names())
def test_noiseless_paths_agree(name):
    code, p, fam, x, h = _setup(name, 50)
    wf = matched_filter_bank(transmit(x, fam, h, 0.0), fam, p)
    ds = discrete_shortcut(x, h, 0.0)
    for a, b in zip(wf.y, ds.y):
        assert np.max(np.abs(a - b)) < 1e-10


def test_matched_filter_noise_statistics():
    fam = build_pulse_family(2)
    n0 = 0.7
    zeros = [np.zeros((50_000, 1, 1)), np.zeros((50_000, 1, 1))]
    h = np.ones((50_000, 1, 1))
    obs = matched_filter_bank(transmit(zeros, fam, h, n0, stream(5, role="noise")), fam)
    y0, y1 = (v.ravel() for v in obs.y)
    for v in (y0, y1):
        assert np.var(v.real) == pytest.approx(n0 / 2, rel=0.02)
        assert np.var(v.imag) == pytest.approx(n0 / 2, rel=0.02)
    assert abs(np.corrcoef(y0.real, y1.real)[0, 1]) < 0.01
    assert abs(np.corrcoef(y0.real, y0.imag)[0, 1]) < 0.01


def test_discrete_noise_variance():
    v = complex_normal(np.random.default_rng(0), (200_000,), 2.0)
    assert np.var(v.real) == pytest.approx(1.0, rel=0.02)


def test_group_count_mismatch():
    code, p, fam, x, h = _setup("golden", 2)
    with pytest.raises(GroupCountMismatch):
        transmit(x[:1], fam, h, 0.0)


def test_grid_mismatch():
    code, p, fam, x, h = _setup("golden", 2)
    frame = transmit(x, fam, h, 0.0)
    with pytest.raises(GridMismatch):
        matched_filter_bank(frame, build_pulse_family(2, oversampling=128))


def test_noise_needs_rng():
    code, p, fam, x, h = _setup("golden", 2)
    with pytest.raises(InvalidArgument):
        transmit(x, fam, h, 1.0)
    with pytest.raises(InvalidArgument):
        discrete_shortcut(x, h, -1.0)


def test_channel_validation():
    with pytest.raises(DimensionMismatch):
        ChannelRealization(np.ones(3))
    with pytest.raises(InvalidArgument):
        ChannelRealization(np.full((2, 2), np.nan))
    assert draw_channel(4, 2, np.random.default_rng(0)).h.shape == (2, 4)


def test_dump_frame(tmp_path):
    code, p, fam, x, h = _setup("golden", 1)
    frame = transmit([v[0] for v in x], fam, h.h[0], 0.0)
    dump_frame_csv(frame, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert len(lines) == fam.n_samples + 1
    assert lines[0].split(",")[:3] == ["t", "re_r1_s1", "im_r1_s1"]


def test_streams_deterministic_and_distinct():
    a = stream(1, 2, 3, role="noise").standard_normal(4)
    b = stream(1, 2, 3, role="noise").standard_normal(4)
    c = stream(1, 2, 3, role="channel").standard_normal(4)
    d = stream(1, 2, 4, role="noise").standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
    with pytest.raises(KeyError):
        stream(1, role="bogus")
