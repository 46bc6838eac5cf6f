import cmath
import math

import numpy as np
import pytest

from tops_stbc import core
from tops_stbc.catalog import (PULSE_GROUP_COUNTS, Fast4x2Params, GoldenParams,
                               build_fast4x2, build_golden, build_vblast, catalog_names,
                               get_code)
from tops_stbc.constellation import qam
from tops_stbc.errors import InvalidArgument, InvalidParams


def _complex(s):
    return s[..., 0::2] + 1j * s[..., 1::2]


@pytest.fixture
def symbols():
    return qam(16).random_symbols(np.random.default_rng(7), 20, 16)[0]


def test_alamouti_is_orthogonal(symbols):
    code = get_code("alamouti")
    s = symbols[:, :4]
    x = core.assemble_codeword(code, s)
    z = _complex(s)
    gram = x @ np.conj(np.swapaxes(x, 1, 2))
    expect = np.sum(np.abs(z) ** 2, axis=1)[:, None, None] * np.eye(2)
    assert np.allclose(gram, expect, atol=1e-12)


def test_golden_matches_closed_form(symbols):
    th, tb = (1 + 5 ** 0.5) / 2, (1 - 5 ** 0.5) / 2
    al, ab = 1 + 1j - 1j * th, 1 + 1j * (1 - tb)
    s = symbols[:, :8]
    a, b, c, d = _complex(s).T
    ref = np.stack([np.stack([al * (a + b * th), al * (c + d * th)], -1),
                    np.stack([1j * ab * (c + d * tb), ab * (a + b * tb)], -1)], -2) / 5 ** 0.5
    assert np.allclose(core.assemble_codeword(get_code("golden"), s), ref, atol=1e-12)


def test_sr2x2_matches_closed_form(symbols):
    s = symbols[:, :8]
    rot = cmath.exp(1j * math.atan(2) / 2)
    x1, x2, x3, x4 = (_complex(s) * rot).T
    w = cmath.exp(1j * math.pi / 4)
    ref = np.stack([np.stack([x1.real + 1j * x2.imag, w * (x3.real + 1j * x4.imag)], -1),
                    np.stack([w * (x4.real + 1j * x3.imag), x2.real + 1j * x1.imag], -1)], -2)
    assert np.allclose(core.assemble_codeword(get_code("sr2x2"), s), ref, atol=1e-12)


def test_ciod4_is_diagonal_part_of_sr4x2(symbols):
    full = core.assemble_codeword(get_code("sr4x2"), np.concatenate(
        [symbols[:, :8], np.zeros((20, 8))], axis=1))
    ciod = core.assemble_codeword(get_code("ciod4"), symbols[:, :8]) / math.sqrt(2)
    assert np.allclose(full, ciod, atol=1e-12)


def test_fast4x2_blocks_are_alamouti(symbols):
    x = core.assemble_codeword(get_code("fast4x2"), symbols)
    for r in (0, 2):
        for c in (0, 2):
            blk = x[:, r:r + 2, c:c + 2]
            assert np.allclose(blk[:, 1, 1], np.conj(blk[:, 0, 0]), atol=1e-12)
            assert np.allclose(blk[:, 0, 1], -np.conj(blk[:, 1, 0]), atol=1e-12)


def test_fast4x2_params():
    p = Fast4x2Params()
    for u in p.bases + p.sigma_images:
        assert min(abs(u.real), abs(u.imag)) < 1e-12
    with pytest.raises(InvalidParams):
        Fast4x2Params(zeta=1.1)
    with pytest.raises(InvalidParams):
        Fast4x2Params(sigma_bases=(1, 1 + 1j, 1j, 1j))
    code = build_fast4x2(Fast4x2Params(r=1j))
    assert core.tops_partition(code).p_count == 4


def test_golden_params():
    with pytest.raises(InvalidParams):
        GoldenParams(theta=2.0)
    alt = build_golden(GoldenParams(gamma=-1))
    assert core.csr_partition(alt).p_count == 2


def test_vblast():
    code = build_vblast(3)
    assert (code.n_tx, code.n_slots, code.n_symbols, code.n_rx) == (3, 1, 6, 3)
    assert get_code("vblast6").n_tx == 6
    with pytest.raises(InvalidArgument):
        get_code("nope")


def test_group_count_table_names_catalog_codes():
    assert set(PULSE_GROUP_COUNTS) <= set(catalog_names())


@pytest.mark.parametrize("name", catalog_names())
def test_catalog_codes_are_fresh_objects(name):
    assert get_code(name) is not get_code(name)
