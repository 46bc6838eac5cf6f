import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tops_stbc.errors import DegenerateFamily, GridMismatch, InvalidArgument, UnstableOrder
from tops_stbc.pulses import (SampledWaveform, build_pulse_family, export_csv,
                              fractional_energy_bandwidth, hermite_waveform, inner_product)

_trapz = getattr(np, "trapezoid", None) or np.trapz


def _independent_gram(fam):
    # numpy's own trapezoid rule on the time axis, not the package weights
    t = fam.t
    return np.array([[_trapz(a * b, t) for b in fam.samples] for a in fam.samples])


@pytest.mark.parametrize("P", [1, 2, 4, 8])
def test_gram_is_identity(P):
    fam = build_pulse_family(P)
    assert np.max(np.abs(_independent_gram(fam) - np.eye(P))) < 1e-10
    assert np.max(np.abs(fam.gram - np.eye(P))) < 1e-12


def test_gaussian_shape():
    w = hermite_waveform(0, oversampling=128)
    u = (w.t - 0.5) * 8
    ref = np.exp(-u * u / 2)
    ref /= math.sqrt(_trapz(ref ** 2, w.t))
    assert np.allclose(w.samples, ref, atol=1e-12)
    assert w.energy == pytest.approx(1.0, abs=1e-12)


def test_gaussian_bandwidth_closed_form():
    # |G(f)|^2 ~ exp(-4 pi^2 w^2 f^2): 99% of the energy within 2.5758 sigma_f
    w = hermite_waveform(0, oversampling=256)
    expect = 2 * 2.5758293035489 / (2 * math.sqrt(2) * math.pi * (1 / 8))
    assert fractional_energy_bandwidth(w) == pytest.approx(expect, rel=5e-3)


def test_bandwidth_grows_with_order():
    fam = build_pulse_family(6, oversampling=128)
    bw = [fractional_energy_bandwidth(p) for p in fam.pulses]
    assert all(b > a for a, b in zip(bw, bw[1:]))


def test_first_pulse_is_the_gaussian():
    fam = build_pulse_family(3)
    assert np.allclose(fam[0].samples, hermite_waveform(0).samples, atol=1e-12)


@given(st.integers(1, 8), st.sampled_from([1.0, 2e-6]))
def test_gram_identity_any_duration(P, t_s):
    fam = build_pulse_family(P, t_s, 8 * P + 16)
    g = _independent_gram(fam)
    assert np.max(np.abs(g - np.eye(P))) < 1e-9


def test_errors():
    with pytest.raises(InvalidArgument):
        build_pulse_family(4, oversampling=16)
    with pytest.raises(InvalidArgument):
        hermite_waveform(17)
    with pytest.raises(UnstableOrder):
        hermite_waveform(3, width=1e-4, oversampling=7)
    with pytest.raises(DegenerateFamily):
        # only two samples carry energy, so three pulses cannot be independent
        build_pulse_family(3, oversampling=25, width=0.008)
    a = hermite_waveform(0, oversampling=64)
    b = hermite_waveform(0, oversampling=32)
    with pytest.raises(GridMismatch):
        inner_product(a, b)
    with pytest.raises(InvalidArgument):
        SampledWaveform(np.ones(5), 0.1, 1.0)


def test_export_csv(tmp_path):
    fam = build_pulse_family(2)
    path = tmp_path / "p.csv"
    export_csv(fam, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,w0,w1" and len(rows) == fam.n_samples + 1
