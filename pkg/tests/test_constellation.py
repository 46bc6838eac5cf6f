import numpy as np
import pytest
from hypothesis import given, strategies as st

from tops_stbc.constellation import bpsk, by_name, gray_labels, pam, psk, qam
from tops_stbc.errors import InvalidArgument, NotSeparable


@pytest.mark.parametrize("c", [qam(4), qam(16), qam(64), pam(2), pam(8), bpsk(), psk(8)],
                         ids=lambda c: c.name)
def test_unit_average_energy(c):
    assert abs(np.mean(np.abs(c.points) ** 2) - 1) < 1e-12


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_gray_neighbours_differ_in_one_bit(n):
    lab = gray_labels(n)
    assert np.all(np.sum(lab[1:] != lab[:-1], axis=1) == 1)
    assert len({tuple(r) for r in lab}) == n


@pytest.mark.parametrize("M", [4, 16, 64])
def test_qam_gray_adjacency_on_grid(M):
    c = qam(M)
    d = np.abs(c.points[:, None] - c.points[None, :])
    dmin = d[d > 0].min()
    near = np.isclose(d, dmin)
    hamming = np.sum(c.labels[:, None, :] != c.labels[None, :, :], axis=-1)
    assert np.all(hamming[near] == 1)


def test_hard_limit_nearest_and_midpoint_rule():
    rail = bpsk().rail(0)
    assert list(rail.levels) == [-1.0, 1.0]
    assert rail.hard_limit(0.3) == 1.0
    assert rail.hard_limit(-0.3) == -1.0
    # midpoint goes to the lower level
    assert rail.hard_limit(0.0) == -1.0
    r4 = qam(16).rail(0)
    assert r4.hard_limit(0.5 * (r4.levels[1] + r4.levels[2])) == r4.levels[1]


@given(st.floats(-10, 10))
def test_hard_limit_is_a_nearest_level(v):
    rail = qam(64).rail(1)
    out = rail.hard_limit(v)
    assert np.min(np.abs(rail.levels - v)) == pytest.approx(abs(out - v), abs=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([4, 16, 64]))
def test_bits_round_trip(seed, M):
    c = qam(M)
    s, bits = c.random_symbols(np.random.default_rng(seed), 7, 6)
    assert np.array_equal(c.bits_from_symbols(s), bits)


def test_psk_is_not_separable():
    with pytest.raises(NotSeparable):
        psk(8).rail(0)


def test_unit_values_lexicographic():
    v = psk(8).unit_values()
    keys = [tuple(r) for r in v]
    assert keys == sorted(keys)


def test_by_name_variants():
    assert by_name("qam16").size == 16
    assert by_name("qam", 64).size == 64
    assert by_name("8psk").name == "psk8"
    assert by_name("bpsk").bits_per_symbol == 1
    with pytest.raises(InvalidArgument):
        by_name("qam", 8)
    with pytest.raises(InvalidArgument):
        by_name("ofdm")
