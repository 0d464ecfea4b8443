import numpy as np
import pytest

from .. import tables
from ..codebook import (Transversal, build_codebook, max_rate,
                        path_ids_of_signatures, read_codebook_table,
                        ring_spacing_radii, select_power_of_two,
                        spaced_constellation, standard_transversal,
                        write_codebook_table)
from ..errors import CodebookError, TrellisBudgetError
from ..sqam import SqamConstellation, is_standard, signatures
from ..trellis import expected_path_count
from ..utils import floor_log2


@pytest.mark.parametrize(
    ("n_rings", "n_phases", "n", "expected"),
    [
        (8, 4, 3, 4.0),
        (2, 2, 7, 13 / 7),
        (2, 4, 5, 2.2),
        (8, 4, 5, 21 / 5),
    ],
)
def test_max_rate(n_rings, n_phases, n, expected):
    constellation = spaced_constellation(n_rings, n_phases, 0.2)
    assert max_rate(constellation, n) == pytest.approx(expected)


def test_large_codebook_size_by_counting():
    constellation = spaced_constellation(8, 4, 0.2)
    assert 1 << floor_log2(expected_path_count(constellation, 5)) == 2 ** 21


def test_ring_spacing_radii():
    assert ring_spacing_radii(3, 0.5) == (1.0, 1.5, 2.0)
    with pytest.raises(ValueError):
        ring_spacing_radii(3, 0.0)
    with pytest.raises(ValueError):
        ring_spacing_radii(3, -0.2)


def test_select_power_of_two(rng):
    constellation = SqamConstellation((1.0,), 2)
    sig = rng.integers(0, 4, size=(5000, 3)).astype(float)
    transversal = Transversal(
        constellation=constellation,
        n=2,
        vectors=np.ones((5000, 2), dtype=complex),
        signatures=sig,
        path_ids=np.arange(5000),
    )
    codebook = select_power_of_two(transversal)
    assert codebook.size == 4096
    assert codebook.bits_per_block == 12
    kept = sorted(map(tuple, codebook.signatures))
    assert kept == sorted(map(tuple, sig))[:4096]


def test_transversal(small_constellation, small_trellis):
    transversal = standard_transversal(small_constellation, 3, trellis=small_trellis)
    assert len(transversal) == 108
    assert all(is_standard(x) for x in transversal.vectors)
    np.testing.assert_allclose(
        signatures(transversal.vectors), transversal.signatures, atol=1e-9
    )


def test_small_codebook(small_codebook):
    assert small_codebook.size == 64
    assert small_codebook.path_count == 108
    assert small_codebook.rate == pytest.approx(2.0)
    assert len({tuple(sig) for sig in small_codebook.signatures}) == 64
    # the first power-of-two paths in signature order are kept
    np.testing.assert_array_equal(small_codebook.path_ids, np.arange(64))
    np.testing.assert_array_equal(
        small_codebook.index_of_path(small_codebook.path_ids), np.arange(64)
    )
    assert small_codebook.index_of_path([100]).tolist() == [-1]


@pytest.mark.parametrize("index", [0, 1, 37, 63])
def test_encode_and_decode_index(small_codebook, index):
    bits = small_codebook.message_bits(index)
    assert len(bits) == 6
    codeword = small_codebook.encode(bits)
    np.testing.assert_allclose(
        codeword.as_array(), small_codebook.codewords[index]
    )
    assert small_codebook.encode([int(b) for b in bits]).symbols == codeword.symbols
    assert small_codebook.decode_index(codeword.symbols) == index
    # any square-law equivalent block decodes to the same index
    rotated = np.conj(codeword.as_array()) * np.exp(0.3j)
    assert small_codebook.decode_index(rotated) == index


def test_decode_index_outside_codebook(small_constellation, small_codebook):
    transversal = standard_transversal(small_constellation, 3)
    assert small_codebook.decode_index(transversal.vectors[100]) == -1
    with pytest.raises(CodebookError):
        small_codebook.decode_index([1.0, 1.0])


@pytest.mark.parametrize("message", ["10101", "1010101", "10a010", [0, 1, 2, 0, 1, 1]])
def test_encode_rejects_bad_messages(small_codebook, message):
    with pytest.raises(CodebookError):
        small_codebook.encode(message)


def test_codebook_size_must_be_power_of_two(small_codebook):
    with pytest.raises(CodebookError):
        type(small_codebook)(
            constellation=small_codebook.constellation,
            n=3,
            codewords=small_codebook.codewords[:48],
            signatures=small_codebook.signatures[:48],
            path_ids=small_codebook.path_ids[:48],
            path_count=108,
        )


def test_path_ids_of_signatures(small_trellis, small_codebook):
    np.testing.assert_array_equal(
        path_ids_of_signatures(small_trellis, small_codebook.signatures),
        small_codebook.path_ids,
    )


def test_codebook_table(tmp_path, small_codebook):
    path = write_codebook_table(small_codebook, tmp_path / "codebook.tsv")
    header, table = tables.read_tsv(path)
    assert header["n"] == "3"
    assert header["size"] == "64"
    assert header["path_count"] == "108"
    assert table.field_names[:2] == ["index", "sig0"]

    loaded = read_codebook_table(path)
    assert loaded.size == 64
    assert loaded.constellation == small_codebook.constellation
    np.testing.assert_allclose(loaded.codewords, small_codebook.codewords, atol=1e-9)
    np.testing.assert_array_equal(loaded.path_ids, small_codebook.path_ids)


def test_codebook_table_needs_header(tmp_path):
    table = tables.table_from_rows([{"index": 0}], ["index"])
    path = tables.write_tsv(table, tmp_path / "bare.tsv")
    with pytest.raises(CodebookError):
        read_codebook_table(path)


def test_build_codebook_budget(small_constellation):
    with pytest.raises(TrellisBudgetError):
        build_codebook(small_constellation, 3, budget=50)
