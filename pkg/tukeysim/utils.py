"""
Unit conversions, random stream derivation and small array helpers.
"""
from __future__ import annotations

import logging
import logging.handlers
import math
import os
from pathlib import Path

import numpy as np
import scipy.constants

from .type_hints import IntArray

logger = logging.getLogger(__name__)


def dbm_to_watts(power_dbm: float) -> float:
    """Convert a power in dBm to watts.  ``-inf`` maps to zero."""
    if power_dbm == -math.inf:
        return 0.0
    return 1e-3 * 10.0 ** (power_dbm / 10.0)


def watts_to_dbm(power_w: float) -> float:
    """Convert a power in watts to dBm.  Zero maps to ``-inf``."""
    if power_w <= 0.0:
        return -math.inf
    return 10.0 * math.log10(power_w / 1e-3)


def db_per_km_to_rho(loss_db_per_km: float) -> float:
    """
    Convert a fiber loss in dB/km to the power attenuation constant.

    The returned constant is in 1/km, such that the power after ``L`` km is
    ``exp(-rho * L)`` times the input power.
    """
    return loss_db_per_km * math.log(10.0) / 10.0


def dispersion_to_beta2(
    dispersion_ps_nm_km: float,
    wavelength_nm: float,
) -> float:
    """
    Convert a dispersion parameter D to the group velocity dispersion.

    Parameters
    ----------
    dispersion_ps_nm_km : float
        D in ps/(nm km).
    wavelength_nm : float
        Carrier wavelength in nm.

    Returns
    -------
    beta2 : float
        Group velocity dispersion in s^2/km.
    """
    d_s_per_m_km = dispersion_ps_nm_km * 1e-12 / 1e-9
    wavelength_m = wavelength_nm * 1e-9
    return (
        -d_s_per_m_km * wavelength_m ** 2
        / (2.0 * math.pi * scipy.constants.speed_of_light)
    )


def child_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Random stream for one unit of work.

    The stream depends only on the seed and the integer keys, never on
    scheduling, so a batch draws the same numbers on any worker.
    """
    return np.random.default_rng([int(seed), *(int(key) for key in keys)])


def popcount(values: IntArray) -> IntArray:
    """Number of set bits of each nonnegative integer (up to 32 bits)."""
    values = np.ascontiguousarray(values, dtype=">u4")
    bits = np.unpackbits(values.view(np.uint8))
    return bits.reshape(values.shape + (32,)).sum(axis=-1)


def bit_errors(sent: IntArray, received: IntArray) -> IntArray:
    """Hamming distance between the binary labels of two index arrays."""
    return popcount(np.bitwise_xor(sent, received))


def floor_log2(value: int) -> int:
    """Exact floor(log2(value)) for a positive Python integer."""
    if value < 1:
        raise ValueError(f"floor_log2 needs a positive integer, got {value}")
    return int(value).bit_length() - 1


class RotatingFileHandlerRelativePath(logging.handlers.RotatingFileHandler):
    """
    Rotating file handler that creates the directory of its log file.

    Relative filenames are resolved against the current working directory
    at construction time.
    """

    def __init__(self, filename: str, *args, **kwargs):
        path = Path(os.path.expanduser(filename)).resolve()
        path.parent.mkdir(parents=True, exist_ok=True)
        super().__init__(str(path), *args, **kwargs)
