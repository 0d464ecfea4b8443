import logging
import math

import pytest

from .. import tables
from ..enums import Fidelity
from ..harness import (CURVE_COLUMNS, CurvePoint, SweepSpec, pam_amplitudes,
                       run_ber_sweep, run_imdd_baseline, run_laser_power_study,
                       run_oband, run_rate_sweep, run_ring_spacing_search,
                       threshold_crossing, write_curve_table)
from ..phy import LinkConfig


@pytest.fixture
def quiet_link() -> LinkConfig:
    return LinkConfig(noise_scale=0.0)


def quick_spec(codebook, link, **kwargs) -> SweepSpec:
    kwargs.setdefault("launch_powers_dbm", (-20.0,))
    kwargs.setdefault("blocks_per_point", 200)
    kwargs.setdefault("batch_size", 100)
    kwargs.setdefault("fidelity", Fidelity.fast)
    kwargs.setdefault("calibration_blocks", 200)
    return SweepSpec(codebook=codebook, link=link, **kwargs)


def test_sweep_spec_validation(small_codebook):
    spec = quick_spec(small_codebook, LinkConfig(), blocks_per_point=250)
    assert spec.batches == [100, 100, 50]
    assert spec.fidelity == Fidelity.fast
    with pytest.raises(ValueError):
        quick_spec(small_codebook, LinkConfig(), launch_powers_dbm=(-5.0, -10.0))
    with pytest.raises(ValueError):
        quick_spec(small_codebook, LinkConfig(), launch_powers_dbm=())
    with pytest.raises(ValueError):
        quick_spec(small_codebook, LinkConfig(), threads=0)
    with pytest.raises(ValueError):
        quick_spec(small_codebook, LinkConfig(), batch_size=0)

    spec = quick_spec(small_codebook, LinkConfig(), laser_power_dbm=-3.0)
    assert spec.link.laser_power_dbm == -3.0


def test_noiseless_fast_sweep(small_codebook, quiet_link):
    spec = quick_spec(small_codebook, quiet_link, launch_powers_dbm=(-20.0, -10.0))
    points = run_ber_sweep(spec)
    assert [point.launch_dbm for point in points] == [-20.0, -10.0]
    for point in points:
        assert point.ber == 0.0
        assert point.failure_rate == 0.0
        assert point.trials == 200
        assert point.drive_scale > 0.0
    assert points[1].drive_scale > points[0].drive_scale


def test_noiseless_waveform_sweep(small_codebook, quiet_link):
    spec = quick_spec(
        small_codebook, quiet_link, blocks_per_point=50, batch_size=50,
        fidelity=Fidelity.waveform,
    )
    (point,) = run_ber_sweep(spec)
    assert point.ber == 0.0
    assert point.failure_rate == 0.0


def test_thread_count_does_not_change_results(small_codebook):
    link = LinkConfig(laser_power_dbm=-14.0)
    results = [
        run_ber_sweep(
            quick_spec(
                small_codebook, link, launch_powers_dbm=(-25.0, -20.0),
                blocks_per_point=2000, min_error_events=30, threads=threads,
            )
        )
        for threads in (1, 3)
    ]
    assert results[0] == results[1]
    # the noisiest point stops early on the error floor
    assert results[0][0].trials < 2000
    assert results[0][0].error_events >= 30


def test_rate_limits(small_codebook, quiet_link):
    (point,) = run_rate_sweep(quick_spec(small_codebook, quiet_link))
    assert point.rate_b_per_sym == pytest.approx(2.0)
    assert point.throughput_gbps == pytest.approx(100.0)
    assert math.isnan(point.ber)

    (point,) = run_rate_sweep(
        quick_spec(small_codebook, LinkConfig(), launch_powers_dbm=(-40.0,))
    )
    assert 0.0 <= point.rate_b_per_sym < 0.2


def test_pam_amplitudes():
    assert pam_amplitudes(4) ** 2 == pytest.approx([0.0, 1 / 3, 2 / 3, 1.0])
    with pytest.raises(ValueError):
        pam_amplitudes(1)


@pytest.mark.parametrize("levels", [2, 4])
def test_noiseless_imdd(quiet_link, levels):
    spec = quick_spec(None, quiet_link, launch_powers_dbm=(-10.0,))
    (point,) = run_imdd_baseline(levels, spec, block_length=4)
    bits = math.log2(levels)
    assert point.rate_b_per_sym == pytest.approx(bits)
    assert point.throughput_gbps == pytest.approx(50.0 * bits)
    assert point.ber == 0.0


def test_imdd_near_modulator_saturation():
    # at 0 dBm from a 1 dBm laser the top PAM-4 level lands nearer the
    # linearized third level than its own
    link = LinkConfig.o_band(dispersion_ps_nm_km=0.0)
    spec = quick_spec(
        None, link, launch_powers_dbm=(0.0,), blocks_per_point=500,
        batch_size=250, fidelity=Fidelity.waveform,
    )
    (point,) = run_imdd_baseline(4, spec, block_length=4)
    assert point.ber < 1e-3
    assert point.rate_b_per_sym > 1.9


def test_imdd_needs_every_level_in_calibration(quiet_link):
    spec = quick_spec(None, quiet_link, calibration_blocks=2)
    with pytest.raises(ValueError):
        run_imdd_baseline(16, spec, block_length=4)


def make_point(launch, ber, trials=1000):
    return CurvePoint(launch_dbm=launch, ber=ber, failure_rate=0.0, trials=trials)


def test_threshold_crossing_interpolates():
    points = [make_point(-15.0, 1e-2), make_point(-11.0, 1e-4)]
    assert threshold_crossing(points, 1e-3) == pytest.approx(-13.0)


def test_threshold_crossing_keeps_small_measured_ber():
    # 1e-5 measured over few blocks is still read as 1e-5
    points = [make_point(-15.0, 1e-1, trials=50), make_point(-11.0, 1e-5, trials=50)]
    assert threshold_crossing(points, 1e-3) == pytest.approx(-15.0 + 4.0 * 2.0 / 4.0)


def test_threshold_crossing_not_bracketed():
    assert threshold_crossing([make_point(-15.0, 1e-4)]) is None
    assert threshold_crossing([make_point(-15.0, 1e-1), make_point(-10.0, 1e-2)]) is None
    assert threshold_crossing([]) is None


@pytest.mark.parametrize("bits_per_block", [1, 12])
def test_threshold_crossing_zero_ber(bits_per_block):
    points = [make_point(-15.0, 1e-2), make_point(-11.0, 0.0)]
    floor = math.log10(0.5 / (1000 * bits_per_block))
    expected = -15.0 + (-3.0 + 2.0) * 4.0 / (floor + 2.0)
    crossing = threshold_crossing(points, 1e-3, bits_per_block=bits_per_block)
    assert crossing == pytest.approx(expected)


def test_ring_spacing_search_without_crossing(quiet_link):
    spec = quick_spec(None, quiet_link, blocks_per_point=100)
    result = run_ring_spacing_search(2, 2, 3, [0.5, 1.0], spec)
    assert list(result.thresholds_dbm) == [0.5, 1.0]
    assert set(result.curves) == {0.5, 1.0}
    # error-free curves never cross the threshold from above
    assert result.best_delta is None
    assert [row["best"] for row in result.rows()] == [False, False]
    with pytest.raises(ValueError):
        run_ring_spacing_search(2, 2, 3, [], spec)


def test_ring_spacing_search_picks_lowest_threshold():
    powers = (-30.0, -25.0, -20.0, -15.0, -10.0)
    spec = quick_spec(
        None, LinkConfig(), launch_powers_dbm=powers, blocks_per_point=2000,
        batch_size=500,
    )
    result = run_ring_spacing_search(2, 2, 3, [0.5, 1.0], spec)
    thresholds = result.thresholds_dbm
    assert all(powers[0] < thresholds[d] < powers[-1] for d in (0.5, 1.0))
    assert result.best_delta in (0.5, 1.0)
    assert thresholds[result.best_delta] == min(thresholds.values())
    assert sum(row["best"] for row in result.rows()) == 1


def test_laser_power_study_skips_unreachable(small_codebook, quiet_link, caplog):
    spec = quick_spec(
        small_codebook, quiet_link, launch_powers_dbm=(-45.0, -10.0),
        blocks_per_point=100,
    )
    with caplog.at_level(logging.WARNING, logger="tukeysim"):
        curves = run_laser_power_study(spec, [-30.0, 1.0])
    assert [p.launch_dbm for p in curves[-30.0]] == [-45.0]
    assert [p.launch_dbm for p in curves[1.0]] == [-45.0, -10.0]
    assert "Skipping" in caplog.text


def test_oband_curves(small_codebook, quiet_link):
    spec = quick_spec(small_codebook, quiet_link, blocks_per_point=100)
    curves = run_oband(spec)
    assert set(curves) == {-1.0, 1.0}
    assert all(len(points) == 1 for points in curves.values())


def test_write_curve_table(tmp_path):
    points = [make_point(-15.0, 1e-2), make_point(-11.0, 1e-4)]
    path = write_curve_table(points, tmp_path / "curve.tsv", settings={"seed": 7})
    header, table = tables.read_tsv(path)
    assert header == {"seed": "7"}
    assert table.field_names == CURVE_COLUMNS
    assert len(table.rows) == 2
