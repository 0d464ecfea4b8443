import math

import numpy as np
import pytest

from .. import tables
from ..utils import (bit_errors, child_rng, db_per_km_to_rho, dbm_to_watts,
                     dispersion_to_beta2, floor_log2, popcount, watts_to_dbm)


def test_power_conversions():
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert dbm_to_watts(-30.0) == pytest.approx(1e-6)
    assert dbm_to_watts(-math.inf) == 0.0
    assert watts_to_dbm(1e-3) == pytest.approx(0.0)
    assert watts_to_dbm(0.0) == -math.inf
    assert watts_to_dbm(dbm_to_watts(-12.5)) == pytest.approx(-12.5)


def test_fiber_conversions():
    # 0.2 dB/km leaves 10 dB after 50 km
    rho = db_per_km_to_rho(0.2)
    assert math.exp(-rho * 50.0) == pytest.approx(0.1)
    # standard single-mode fiber at 1550 nm
    assert dispersion_to_beta2(17.0, 1550.0) == pytest.approx(-21.7e-24, rel=0.01)
    assert dispersion_to_beta2(-1.0, 1310.0) > 0.0


def test_popcount_and_bit_errors():
    assert popcount(np.array([0, 1, 3, 255, 2 ** 31])).tolist() == [0, 1, 2, 8, 1]
    sent = np.array([[0, 5], [7, 2]])
    received = np.array([[1, 5], [0, 2]])
    assert bit_errors(sent, received).tolist() == [[1, 0], [3, 0]]


@pytest.mark.parametrize(("value", "expected"), [(1, 0), (2, 1), (108, 6), (2 ** 21, 21), (2_654_208, 21)])
def test_floor_log2(value, expected):
    assert floor_log2(value) == expected


def test_floor_log2_rejects_zero():
    with pytest.raises(ValueError):
        floor_log2(0)


def test_child_rng_streams():
    first = child_rng(7, 0, 3).standard_normal(4)
    np.testing.assert_array_equal(first, child_rng(7, 0, 3).standard_normal(4))
    assert not np.array_equal(first, child_rng(7, 0, 4).standard_normal(4))
    assert not np.array_equal(first, child_rng(8, 0, 3).standard_normal(4))


def test_string_for_table():
    assert tables.string_for_table(None) == ""
    assert tables.string_for_table(True) == "true"
    assert tables.string_for_table(float("nan")) == "nan"
    assert tables.string_for_table(0.1 + 0.2) == "0.3"
    assert tables.string_for_table(3) == "3"


def test_provenance_header():
    header = tables.provenance_header(
        {"seed": 1, "sweep": {"launch_dbm": [-10.0, -9.5], "fidelity": "fast"}}
    )
    assert header.splitlines() == [
        "# seed: 1",
        "# sweep.launch_dbm: -10, -9.5",
        "# sweep.fidelity: fast",
    ]


def test_tsv_round_trip(tmp_path):
    rows = [{"a": 1, "b": 0.5}, {"a": 2, "b": None}]
    table = tables.table_from_rows(rows)
    path = tables.write_tsv(table, tmp_path / "sub" / "t.tsv", settings={"k": "v"})
    header, loaded = tables.read_tsv(path)
    assert header == {"k": "v"}
    assert loaded.field_names == ["a", "b"]
    assert [list(row) for row in loaded.rows] == [["1", "0.5"], ["2", ""]]


def test_empty_table_needs_columns():
    with pytest.raises(ValueError):
        tables.table_from_rows([])
    assert tables.table_from_rows([], ["a"]).field_names == ["a"]
