"""
Launch-power budgets of the reference configurations on reduced block counts.

These run full waveform sweeps and take minutes; set ``TUKEYSIM_SLOW_TESTS``
to run them.
"""
import os

import numpy as np
import pytest

from ..codebook import build_codebook, spaced_constellation
from ..enums import Fidelity
from ..harness import (SweepSpec, run_ber_sweep, run_imdd_baseline,
                       run_laser_power_study, run_oband, run_rate_sweep,
                       threshold_crossing)
from ..phy import LinkConfig

pytestmark = pytest.mark.skipif(
    not os.environ.get("TUKEYSIM_SLOW_TESTS"),
    reason="slow link-budget sweeps; set TUKEYSIM_SLOW_TESTS=1",
)

BLOCKS = 20_000
ERROR_EVENTS = 100


def sqam_codebook(n_rings, n_phases, n, delta=0.2):
    return build_codebook(spaced_constellation(n_rings, n_phases, delta), n)


def sweep(codebook, link, powers, **kwargs) -> SweepSpec:
    kwargs.setdefault("blocks_per_point", BLOCKS)
    kwargs.setdefault("min_error_events", ERROR_EVENTS)
    kwargs.setdefault("batch_size", 1000)
    kwargs.setdefault("fidelity", Fidelity.waveform)
    kwargs.setdefault("calibration_blocks", 1000)
    kwargs.setdefault("threads", 4)
    kwargs.setdefault("seed", 1)
    return SweepSpec(
        codebook=codebook, link=link,
        launch_powers_dbm=tuple(float(p) for p in powers), **kwargs
    )


def threshold(codebook, link, powers, **kwargs):
    curve = run_ber_sweep(sweep(codebook, link, powers, **kwargs))
    crossing = threshold_crossing(curve, bits_per_block=codebook.bits_per_block)
    assert crossing is not None, curve
    return crossing


@pytest.mark.parametrize(
    "n_rings, n_phases, n, powers, expected",
    [
        (8, 4, 3, np.arange(-12.0, -5.0), -8.8),
        (2, 2, 7, np.arange(-17.0, -9.0), -13.25),
    ],
)
def test_c_band_threshold(n_rings, n_phases, n, powers, expected):
    codebook = sqam_codebook(n_rings, n_phases, n)
    crossing = threshold(codebook, LinkConfig.c_band(), powers)
    assert crossing == pytest.approx(expected, abs=1.0)


def test_half_symbol_rate_gain():
    codebook = sqam_codebook(8, 4, 3)
    powers = np.arange(-13.0, -5.0)
    fast = threshold(codebook, LinkConfig.c_band(symbol_rate=50e9), powers)
    slow = threshold(codebook, LinkConfig.c_band(symbol_rate=25e9), powers)
    assert fast - slow == pytest.approx(1.5, abs=0.5)


def test_laser_power_roll_up():
    codebook = sqam_codebook(2, 2, 7)
    spec = sweep(codebook, LinkConfig.c_band(), np.arange(-18.0, -7.0))
    curves = run_laser_power_study(spec, [-3.0, 1.0])

    bers = [point.ber for point in curves[1.0]]
    lowest = int(np.argmin(bers))
    assert lowest < len(bers) - 1
    assert bers[-1] > bers[lowest]

    assert curves[-3.0]
    assert min(point.ber for point in curves[-3.0]) > 1e-2


def test_throughput_against_pam():
    link = LinkConfig.c_band()
    codebook = sqam_codebook(8, 4, 3)
    (tukey,) = run_rate_sweep(
        sweep(codebook, link, [-10.0], blocks_per_point=5000, min_error_events=None)
    )
    assert tukey.throughput_gbps >= 190.0

    (pam8,) = run_imdd_baseline(
        8, sweep(None, link, [-10.0], blocks_per_point=5000, min_error_events=None)
    )
    assert pam8.throughput_gbps == pytest.approx(145.0, abs=15.0)

    pam16 = run_imdd_baseline(
        16,
        sweep(
            None, link, [-1.0, 0.0, 1.0], laser_power_dbm=20.0,
            blocks_per_point=5000, min_error_events=None,
        ),
    )
    assert max(point.throughput_gbps for point in pam16) >= 190.0


def test_oband_threshold():
    codebook = sqam_codebook(8, 4, 3)
    spec = sweep(
        codebook, LinkConfig.o_band(laser_power_dbm=2.0), np.arange(-10.0, -1.0)
    )
    curves = run_oband(spec)
    crossings = {
        dispersion: threshold_crossing(curve, bits_per_block=codebook.bits_per_block)
        for dispersion, curve in curves.items()
    }
    for crossing in crossings.values():
        assert crossing == pytest.approx(-5.8, abs=1.0)
    assert abs(crossings[-1.0] - crossings[1.0]) <= 0.5
