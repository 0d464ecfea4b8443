"""
Physical layer: Tukey pulse shaping, electrical dispersion
precompensation, the IQ Mach-Zehnder modulator, the fiber, and the
photodiode with integrate-and-dump detection.

Two fidelities share :class:`LinkConfig`:

* the waveform path simulates every stage on an oversampled time grid,
  including the sine nonlinearity of the modulator;
* :func:`fast_channel` draws the interval integrals directly from their
  Gaussian approximations, which linearize the modulator.

Blocks are simulated in isolation with silent guard time on both sides.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.constants
import scipy.fft
import scipy.integrate

from . import tables
from .enums import Band
from .errors import (CalibrationError, GridError, InfeasibleLaunchPowerError,
                     LinkConfigError)
from .sqam import psi
from .type_hints import ComplexArray, FloatArray, IntArray
from .utils import (db_per_km_to_rho, dbm_to_watts, dispersion_to_beta2,
                    watts_to_dbm)

logger = logging.getLogger(__name__)

#: C-band fiber loss, 0.2 dB/km, as a power attenuation constant (1/km).
C_BAND_RHO = 0.046
#: C-band group velocity dispersion in s^2/km (D = 17 ps/nm/km).
C_BAND_BETA2 = -2.167e-23
O_BAND_LOSS_DB_PER_KM = 0.5
O_BAND_WAVELENGTH_NM = 1310.0

DEFAULT_OVERSAMPLING = 16
DEFAULT_PAD_SYMBOLS = 4
CALIBRATION_TOLERANCE_DB = 0.02
MAX_BISECTION_STEPS = 80
MAX_BRACKET_EXTENSIONS = 8
#: Ratio between successive lower ends of the calibration bracket.
BRACKET_STEP = 1e-6
#: Midpoints of the taper average in :func:`taper_energy`.
TAPER_POINTS = 64


def tukey_alpha(beta: float) -> float:
    """Unit-energy amplitude ``2 / sqrt(4 - beta)`` of the Tukey pulse."""
    return 2.0 / math.sqrt(4.0 - beta)


def tukey_waveform(beta: float, t) -> FloatArray:
    """
    Unit-energy Tukey pulse at normalized time ``t``.

    Flat at ``alpha`` for ``|t| <= (1 - beta)/2``, a half-sine taper for
    ``||t| - 1/2| <= beta/2``, and zero outside ``|t| <= (1 + beta)/2``.

    Raises
    ------
    LinkConfigError
        If ``beta`` is outside [0, 1].
    """
    if not 0.0 <= beta <= 1.0:
        raise LinkConfigError(f"Roll-off must be in [0, 1], got {beta}")
    t = np.abs(np.asarray(t, dtype=float))
    alpha = tukey_alpha(beta)
    out = np.zeros_like(t)
    flat = t <= (1.0 - beta) / 2.0
    out[flat] = alpha
    if beta > 0.0:
        taper = ~flat & (np.abs(t - 0.5) <= beta / 2.0)
        out[taper] = 0.5 * alpha * (
            1.0 - np.sin(np.pi * (2.0 * t[taper] - 1.0) / (2.0 * beta))
        )
    return out[()] if out.ndim == 0 else out


@dataclasses.dataclass(frozen=True)
class LinkConfig:
    """
    Parameters of one simulated link.

    Attributes
    ----------
    band : Band
    length_km : float
        Fiber length L.
    rho : float
        Power attenuation constant in 1/km; the field decays as
        ``exp(-rho L / 2)``.
    beta2 : float
        Group velocity dispersion in s^2/km.
    beta0 : float
        Carrier phase constant in rad/km (a global phase).
    beta1 : float
        Group delay in s/km (a rigid time shift).
    symbol_rate : float
        Baud.
    rolloff : float
        Tukey roll-off beta in [0, 1].
    laser_power_dbm : float
        Unmodulated carrier power ``E_in^2 / 2``.
    kappa : float
        Modulator constant.
    drive_scale : float
        Dimensionless drive amplitude: the modulator phase argument is
        ``kappa * drive_scale * sqrt(T) * u(t)``.
    responsivity : float
        Photodiode responsivity in A/W.
    temperature_k, load_resistance : float
        Thermal noise temperature and load resistor.
    precompensate : bool
        Electrical dispersion precompensation at the transmitter (C band).
    noise_scale : float
        Multiplies both noise spectral densities; 0 disables noise.
    wavelength_nm : float
    """
    band: Band = Band.C
    length_km: float = 10.0
    rho: float = C_BAND_RHO
    beta2: float = C_BAND_BETA2
    beta0: float = 0.0
    beta1: float = 0.0
    symbol_rate: float = 50e9
    rolloff: float = 0.5
    laser_power_dbm: float = 1.0
    kappa: float = 1.0
    drive_scale: float = 0.1
    responsivity: float = 0.75
    temperature_k: float = 300.0
    load_resistance: float = 300.0
    precompensate: bool = True
    noise_scale: float = 1.0
    wavelength_nm: float = 1550.0

    def __post_init__(self):
        object.__setattr__(self, "band", Band.from_any(self.band))
        if not 0.0 <= self.rolloff <= 1.0:
            raise LinkConfigError(f"rolloff must be in [0, 1], got {self.rolloff}")
        for name in ("symbol_rate", "responsivity", "temperature_k",
                     "load_resistance", "kappa", "wavelength_nm"):
            if not getattr(self, name) > 0.0:
                raise LinkConfigError(
                    f"{name} must be positive, got {getattr(self, name)}"
                )
        for name in ("length_km", "rho", "drive_scale", "noise_scale"):
            if not getattr(self, name) >= 0.0:
                raise LinkConfigError(
                    f"{name} must be nonnegative, got {getattr(self, name)}"
                )
        if self.band == Band.O and self.precompensate:
            raise LinkConfigError(
                "O-band links run without dispersion precompensation"
            )

    @classmethod
    def c_band(cls, **kwargs) -> LinkConfig:
        """Standard single-mode fiber at 1550 nm with precompensation."""
        return cls(band=Band.C, **kwargs)

    @classmethod
    def o_band(cls, dispersion_ps_nm_km: float = 1.0, **kwargs) -> LinkConfig:
        """
        O-band link near the zero-dispersion wavelength.

        The residual dispersion is left uncompensated.
        """
        kwargs.setdefault("rho", db_per_km_to_rho(O_BAND_LOSS_DB_PER_KM))
        kwargs.setdefault("wavelength_nm", O_BAND_WAVELENGTH_NM)
        kwargs.setdefault(
            "beta2",
            dispersion_to_beta2(dispersion_ps_nm_km, kwargs["wavelength_nm"]),
        )
        kwargs["precompensate"] = False
        return cls(band=Band.O, **kwargs)

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.symbol_rate

    @property
    def alpha(self) -> float:
        return tukey_alpha(self.rolloff)

    @property
    def e_in(self) -> float:
        """Modulator input field amplitude, ``sqrt(2 P_laser)``."""
        return math.sqrt(2.0 * dbm_to_watts(self.laser_power_dbm))

    @property
    def shot_psd(self) -> float:
        """Two-sided shot noise PSD ``e R``."""
        return self.noise_scale * scipy.constants.elementary_charge * self.responsivity

    @property
    def thermal_psd(self) -> float:
        """Two-sided thermal noise PSD ``2 k T / R_L``."""
        return (
            self.noise_scale * 2.0 * scipy.constants.Boltzmann
            * self.temperature_k / self.load_resistance
        )

    @property
    def drive_phase(self) -> float:
        """Radians of modulator argument per unit of ``sqrt(T) u(t)``."""
        return self.kappa * self.drive_scale

    @property
    def effective_kappa(self) -> float:
        """Modulator constant acting on ``u(t)``: ``kappa * drive * sqrt(T)``."""
        return self.drive_phase * math.sqrt(self.symbol_period)

    @property
    def field_loss(self) -> float:
        return math.exp(-self.rho * self.length_km / 2.0)

    @property
    def link_gain(self) -> float:
        """``(E_in kappa_eff alpha)^2 exp(-rho L)``: symbol energy to
        received interval energy, per unit interval fraction."""
        return (
            self.e_in * self.effective_kappa * self.alpha * self.field_loss
        ) ** 2

    def with_launch(self, drive_scale: float) -> LinkConfig:
        return dataclasses.replace(self, drive_scale=drive_scale)


@dataclasses.dataclass(frozen=True)
class ReceivedBlock:
    """
    Integrate-and-dump outputs of a batch of blocks.

    ``y`` holds the ``n`` ISI-free integrals and ``z`` the ``n - 1``
    ISI-present integrals of each block.
    """
    y: FloatArray
    z: FloatArray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if y.shape[:-1] != z.shape[:-1] or y.shape[-1] != z.shape[-1] + 1:
            raise ValueError(
                f"Observation shapes {y.shape} and {z.shape} do not describe "
                "n ISI-free and n - 1 ISI-present intervals"
            )
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.y.shape[-1]

    def __len__(self) -> int:
        return int(np.prod(self.y.shape[:-1], dtype=int))


@dataclasses.dataclass(frozen=True, eq=False)
class WaveformGrid:
    """
    Samples of a batch of waveforms on a common time grid.

    The grid spans ``[-(pad + 1/2) T, (n - 1/2 + pad) T]`` in steps of
    ``T / oversampling``.
    """
    n: int
    symbol_period: float
    oversampling: int = DEFAULT_OVERSAMPLING
    pad: int = DEFAULT_PAD_SYMBOLS
    samples: Optional[ComplexArray] = None

    def __post_init__(self):
        os_ = self.oversampling
        if os_ < 8 or os_ & (os_ - 1):
            raise GridError(
                f"Oversampling must be a power of two >= 8, got {os_}"
            )
        if self.pad < 1:
            raise GridError(f"Grid needs at least one pad symbol, got {self.pad}")
        if self.samples is not None:
            samples = np.asarray(self.samples)
            if samples.shape[-1] != self.size:
                raise GridError(
                    f"{samples.shape[-1]} samples do not fit a grid of "
                    f"{self.size}"
                )

    @property
    def dt(self) -> float:
        return self.symbol_period / self.oversampling

    @property
    def size(self) -> int:
        return (self.n + 2 * self.pad) * self.oversampling + 1

    @property
    def start(self) -> float:
        return -(self.pad + 0.5) * self.symbol_period

    @property
    def t(self) -> FloatArray:
        return self.start + self.dt * np.arange(self.size)

    @property
    def frequencies(self) -> FloatArray:
        return scipy.fft.fftfreq(self.size, self.dt)

    def index_of(self, time: float) -> int:
        """Grid index nearest to ``time``."""
        return int(round((time - self.start) / self.dt))

    def with_samples(self, samples: ComplexArray) -> WaveformGrid:
        return dataclasses.replace(self, samples=samples)

    def intervals(self, rolloff: float) -> tuple[IntArray, IntArray, IntArray, IntArray]:
        """
        Snapped sample bounds of the ISI-free and interior ISI-present
        intervals.

        Returns
        -------
        y_lo, y_hi, z_lo, z_hi : ndarray of int
            Inclusive sample indices of each interval's end points.
        """
        period = self.symbol_period
        half_flat = (1.0 - rolloff) * period / 2.0
        centers = np.arange(self.n) * period
        y_lo = np.array([self.index_of(c - half_flat) for c in centers])
        y_hi = np.array([self.index_of(c + half_flat) for c in centers])
        z_lo = y_hi[:-1]
        z_hi = y_lo[1:]
        if y_lo[0] < 0 or y_hi[-1] >= self.size:
            raise GridError("Grid does not cover every detection interval")
        return y_lo, y_hi, z_lo, z_hi


def make_grid(
    n: int,
    cfg: LinkConfig,
    oversampling: int = DEFAULT_OVERSAMPLING,
    pad: int = DEFAULT_PAD_SYMBOLS,
) -> WaveformGrid:
    return WaveformGrid(
        n=n, symbol_period=cfg.symbol_period, oversampling=oversampling,
        pad=pad,
    )


def pulse_matrix(grid: WaveformGrid, rolloff: float) -> FloatArray:
    """``w(t - kT)`` for every symbol ``k`` and grid time, shape (n, S)."""
    period = grid.symbol_period
    t_norm = grid.t[np.newaxis, :] / period - np.arange(grid.n)[:, np.newaxis]
    return tukey_waveform(rolloff, t_norm) / math.sqrt(period)


def shape_block(
    x: ComplexArray,
    cfg: LinkConfig,
    grid: WaveformGrid,
) -> WaveformGrid:
    """
    Tukey signalling ``g(t) = sum_k x_k w(t - kT)`` for a batch of blocks.

    Parameters
    ----------
    x : ndarray, shape (..., n)
    cfg : LinkConfig
    grid : WaveformGrid

    Raises
    ------
    GridError
        If the blocks do not have the grid's length.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != grid.n:
        raise GridError(
            f"Blocks of length {x.shape[-1]} on a grid for n={grid.n}"
        )
    return grid.with_samples(x @ pulse_matrix(grid, cfg.rolloff))


def _dispersion_phase(grid: WaveformGrid, cfg: LinkConfig) -> FloatArray:
    f = grid.frequencies
    return 2.0 * cfg.beta2 * cfg.length_km * np.pi ** 2 * f ** 2


def precompensate(u: WaveformGrid, cfg: LinkConfig) -> WaveformGrid:
    """
    Multiply by ``H(f) = exp(+i 2 beta2 L pi^2 f^2)``, the inverse of the
    fiber's dispersion.

    Raises
    ------
    LinkConfigError
        On an O-band link.
    """
    if cfg.band == Band.O:
        raise LinkConfigError("Precompensation is not used in the O band")
    spectrum = scipy.fft.fft(u.samples, axis=-1)
    spectrum *= np.exp(1j * _dispersion_phase(u, cfg))
    return u.with_samples(scipy.fft.ifft(spectrum, axis=-1))


def iq_modulate(u: WaveformGrid, cfg: LinkConfig) -> WaveformGrid:
    """
    Nested Mach-Zehnder modulator:
    ``x(t) = E_in (sin(k Re u) + i sin(k Im u))`` with
    ``k = kappa * drive_scale * sqrt(T)``.
    """
    k = cfg.effective_kappa
    samples = np.asarray(u.samples)
    return u.with_samples(
        cfg.e_in * (np.sin(k * samples.real) + 1j * np.sin(k * samples.imag))
    )


def fiber(x: WaveformGrid, cfg: LinkConfig) -> WaveformGrid:
    """
    Linear fiber: loss ``exp(-rho L / 2)`` on the field, dispersion
    ``exp(-i 2 beta2 L pi^2 f^2)``, and the phase and delay terms
    ``exp(-i (beta0 + 2 pi f beta1) L)``.
    """
    f = x.frequencies
    length = cfg.length_km
    spectrum = scipy.fft.fft(x.samples, axis=-1)
    phase = -_dispersion_phase(x, cfg) - (cfg.beta0 + 2.0 * np.pi * f * cfg.beta1) * length
    spectrum *= cfg.field_loss * np.exp(1j * phase)
    return x.with_samples(scipy.fft.ifft(spectrum, axis=-1))


def detect_integrate(
    r: WaveformGrid,
    cfg: LinkConfig,
    rng: Optional[np.random.Generator] = None,
    per_sample_noise: bool = False,
) -> ReceivedBlock:
    """
    Photodiode and integrate-and-dump.

    Each interval yields ``R I + sqrt(I) n_sh + n_th`` with
    ``I = int |r|^2 dt`` over the interval, ``n_sh ~ N(0, sigma_sh^2)`` and
    ``n_th ~ N(0, T_int sigma_th^2)``.  The ISI-present intervals at the
    block edges are not integrated.

    Parameters
    ----------
    r : WaveformGrid
        Received field.
    cfg : LinkConfig
    rng : numpy.random.Generator, optional
        Noise source.  Without one the output is noiseless.
    per_sample_noise : bool, optional
        Add white noise to every sample of the photocurrent and integrate
        with rectangle sums instead of adding noise to the integrals.
    """
    y_lo, y_hi, z_lo, z_hi = r.intervals(cfg.rolloff)
    power = np.abs(np.asarray(r.samples)) ** 2
    period = cfg.symbol_period
    y_len = (1.0 - cfg.rolloff) * period
    z_len = cfg.rolloff * period

    if per_sample_noise:
        current = cfg.responsivity * power
        if rng is not None:
            scale = 1.0 / math.sqrt(r.dt)
            current = (
                current
                + np.sqrt(power) * math.sqrt(cfg.shot_psd) * scale
                * rng.standard_normal(power.shape)
                + math.sqrt(cfg.thermal_psd) * scale
                * rng.standard_normal(power.shape)
            )
        charge = np.concatenate(
            [np.zeros(power.shape[:-1] + (1,)),
             np.cumsum(current, axis=-1) * r.dt],
            axis=-1,
        )
        return ReceivedBlock(
            y=charge[..., y_hi] - charge[..., y_lo],
            z=charge[..., z_hi] - charge[..., z_lo],
        )

    energy = scipy.integrate.cumulative_trapezoid(
        power, dx=r.dt, axis=-1, initial=0.0
    )
    y_energy = energy[..., y_hi] - energy[..., y_lo]
    z_energy = energy[..., z_hi] - energy[..., z_lo]
    y = cfg.responsivity * y_energy
    z = cfg.responsivity * z_energy
    if rng is not None:
        y = y + _integral_noise(y_energy, y_len, cfg, rng)
        z = z + _integral_noise(z_energy, z_len, cfg, rng)
    return ReceivedBlock(y=y, z=z)


def _integral_noise(
    energy: FloatArray,
    length: float,
    cfg: LinkConfig,
    rng: np.random.Generator,
) -> FloatArray:
    shot = np.sqrt(np.maximum(energy, 0.0) * cfg.shot_psd)
    thermal = math.sqrt(length * cfg.thermal_psd)
    return (
        shot * rng.standard_normal(energy.shape)
        + thermal * rng.standard_normal(energy.shape)
    )


def modulated_field(
    x: ComplexArray,
    cfg: LinkConfig,
    grid: Optional[WaveformGrid] = None,
) -> tuple[WaveformGrid, WaveformGrid]:
    """Drive signal ``u(t)`` and optical field ``x(t)`` for a batch."""
    grid = grid or make_grid(np.shape(x)[-1], cfg)
    u = shape_block(x, cfg, grid)
    if cfg.precompensate:
        u = precompensate(u, cfg)
    return u, iq_modulate(u, cfg)


def transmit_waveform(
    x: ComplexArray,
    cfg: LinkConfig,
    rng: Optional[np.random.Generator] = None,
    grid: Optional[WaveformGrid] = None,
    per_sample_noise: bool = False,
    dump_path: Optional[Union[str, Path]] = None,
) -> ReceivedBlock:
    """
    Simulate blocks ``x`` (shape (..., n)) through the full waveform chain.

    Parameters
    ----------
    dump_path : str or Path, optional
        Write the waveforms of the first block as tab-separated text.
    """
    u, field = modulated_field(x, cfg, grid=grid)
    r = fiber(field, cfg)
    if dump_path is not None:
        dump_waveforms(dump_path, u, field, r, cfg)
    return detect_integrate(r, cfg, rng, per_sample_noise=per_sample_noise)


def mean_observations(
    x: ComplexArray,
    cfg: LinkConfig,
) -> tuple[FloatArray, FloatArray]:
    """
    Noiseless interval energies under the linearized modulator.

    Returns
    -------
    y_bar : ndarray, shape (..., n)
        ``(1 - beta) G |x_k|^2``
    z_bar : ndarray, shape (..., n - 1)
        ``beta G psi(x_l, x_{l+1})``

    where ``G`` is :attr:`LinkConfig.link_gain`.
    """
    x = np.asarray(x, dtype=complex)
    gain = cfg.link_gain
    y_bar = (1.0 - cfg.rolloff) * gain * np.abs(x) ** 2
    z_bar = cfg.rolloff * gain * psi(x[..., :-1], x[..., 1:])
    return y_bar, np.asarray(z_bar, dtype=float)


def fast_channel(
    x: ComplexArray,
    cfg: LinkConfig,
    rng: Optional[np.random.Generator] = None,
) -> ReceivedBlock:
    """
    Draw the integrals from their Gaussian approximation.

    ``y_k ~ N(R y_bar, y_bar sigma_sh^2 + (1 - beta) T sigma_th^2)`` and
    ``z_l ~ N(R z_bar, z_bar sigma_sh^2 + beta T sigma_th^2)``.
    """
    y_bar, z_bar = mean_observations(x, cfg)
    y = cfg.responsivity * y_bar
    z = cfg.responsivity * z_bar
    if rng is not None:
        period = cfg.symbol_period
        y = y + _integral_noise(y_bar, (1.0 - cfg.rolloff) * period, cfg, rng)
        z = z + _integral_noise(z_bar, cfg.rolloff * period, cfg, rng)
    return ReceivedBlock(y=y, z=z)


def launch_power(
    x: ComplexArray,
    cfg: LinkConfig,
    grid: Optional[WaveformGrid] = None,
) -> float:
    """Mean optical power in watts of blocks ``x`` at the modulator output,
    averaged over the block durations."""
    x = np.asarray(x, dtype=complex)
    _, field = modulated_field(x, cfg, grid=grid)
    energy = scipy.integrate.trapezoid(
        np.abs(field.samples) ** 2, dx=field.dt, axis=-1
    )
    return float(np.mean(energy) / (x.shape[-1] * cfg.symbol_period))


def saturation_drive(cfg: LinkConfig, peak_amplitude: float) -> float:
    """Drive scale at which the largest flat-top amplitude reaches the
    modulator's sine peak."""
    return (math.pi / 2.0) / (cfg.kappa * cfg.alpha * peak_amplitude)


def flat_top_energy(x, cfg: LinkConfig) -> FloatArray:
    """
    Flat-top energy of symbols ``x`` after the modulator sine, in units of
    ``|x|^2``.

    The drive is constant over the flat top, so each arm is
    ``sin(kappa * drive * alpha * x)``.  Equals ``|x|^2`` at zero drive.
    """
    x = np.asarray(x, dtype=complex)
    c = cfg.drive_phase * cfg.alpha
    if c == 0.0:
        return np.abs(x) ** 2
    return (np.sin(c * x.real) ** 2 + np.sin(c * x.imag) ** 2) / c ** 2


def taper_energy(a, b, cfg: LinkConfig, points: int = TAPER_POINTS) -> FloatArray:
    """
    Overlap-interval energy of adjacent symbols ``a`` and ``b`` after the
    modulator sine, in units of ``psi(a, b)``.

    Across the taper the drive is ``alpha/2 ((a + b) + (b - a) sin(phi))``
    with ``phi`` uniform on [-pi/2, pi/2]; the arm energies are averaged
    over ``points`` midpoints of that range.  Equals ``psi`` at zero drive.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    c = cfg.drive_phase * cfg.alpha
    if c == 0.0:
        return np.asarray(psi(a, b), dtype=float)
    phi = -np.pi / 2.0 + np.pi * (np.arange(points) + 0.5) / points
    drive = 0.5 * c * (
        (a + b)[..., np.newaxis] + (b - a)[..., np.newaxis] * np.sin(phi)
    )
    energy = np.sin(drive.real) ** 2 + np.sin(drive.imag) ** 2
    return np.mean(energy, axis=-1) / c ** 2


def calibrate_launch_power(
    cfg: LinkConfig,
    codewords,
    target_dbm: float,
    n_blocks: int = 1000,
    seed: int = 0,
    tolerance_db: float = CALIBRATION_TOLERANCE_DB,
    grid: Optional[WaveformGrid] = None,
) -> float:
    """
    Find the drive scale giving the requested launch power.

    Parameters
    ----------
    cfg : LinkConfig
    codewords : Codebook or ndarray, shape (M, n)
        Blocks to draw uniformly from.
    target_dbm : float
        Target launch power; ``-inf`` returns 0.
    n_blocks : int, optional
        Random blocks averaged per evaluation (at least 1000 is typical).
    seed : int, optional
        Seed of the block draw.
    tolerance_db : float, optional

    Returns
    -------
    drive_scale : float

    Raises
    ------
    InfeasibleLaunchPowerError
        If the target is above the power reached at modulator saturation.
    CalibrationError
        If no drive in the extended bracket is quiet enough, or the
        bisection does not settle within ``tolerance_db``.
    """
    if target_dbm == -math.inf:
        return 0.0
    words = np.asarray(getattr(codewords, "codewords", codewords), dtype=complex)
    rng = np.random.default_rng(seed)
    blocks = words[rng.integers(len(words), size=n_blocks)]
    grid = grid or make_grid(blocks.shape[-1], cfg)

    # u(t) does not depend on the drive scale; only the modulator does
    u = shape_block(blocks, cfg, grid)
    if cfg.precompensate:
        u = precompensate(u, cfg)
    block_time = blocks.shape[-1] * cfg.symbol_period

    def power_dbm(drive: float) -> float:
        field = iq_modulate(u, cfg.with_launch(drive))
        energy = scipy.integrate.trapezoid(
            np.abs(field.samples) ** 2, dx=field.dt, axis=-1
        )
        return watts_to_dbm(float(np.mean(energy)) / block_time)

    hi = saturation_drive(cfg, float(np.max(np.abs(words))))
    ceiling = power_dbm(hi)
    if target_dbm > ceiling + tolerance_db:
        raise InfeasibleLaunchPowerError(target_dbm, ceiling)

    # power grows as drive^2 in the linear regime, 60 dB per decade of
    # drive, so each extension of the bracket reaches 120 dB further down
    lo = hi * BRACKET_STEP
    for _ in range(MAX_BRACKET_EXTENSIONS):
        if power_dbm(lo) <= target_dbm + tolerance_db:
            break
        lo *= BRACKET_STEP
    else:
        raise CalibrationError(
            target_dbm, f"drive {lo:.3g} still launches {power_dbm(lo):.2f} dBm"
        )

    # bisect on log(drive)
    log_lo, log_hi = math.log(lo), math.log(hi)
    for step in range(MAX_BISECTION_STEPS):
        drive = math.exp(0.5 * (log_lo + log_hi))
        error = power_dbm(drive) - target_dbm
        logger.debug(
            "Calibration step %d: drive %.6g, error %.4f dB", step, drive, error
        )
        if abs(error) <= tolerance_db:
            return drive
        if error > 0:
            log_hi = math.log(drive)
        else:
            log_lo = math.log(drive)
    raise CalibrationError(
        target_dbm,
        f"no drive within {tolerance_db} dB after {MAX_BISECTION_STEPS} steps",
    )


def occupied_bandwidth(
    beta: float,
    fraction: float = 0.95,
    oversampling: int = 64,
    span: int = 2048,
) -> float:
    """
    Smallest two-sided bandwidth, in units of the symbol rate, holding
    ``fraction`` of the Tukey pulse energy.

    The pulse is sampled at ``oversampling`` points per symbol over
    ``span`` symbol periods and transformed with an FFT.

    Raises
    ------
    ValueError
        If ``fraction`` is not in (0, 1).
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"Energy fraction must be in (0, 1), got {fraction}")
    size = span * oversampling
    t = (np.arange(size) - size // 2) / oversampling
    spectrum = np.abs(scipy.fft.fft(tukey_waveform(beta, t))) ** 2
    freqs = np.abs(scipy.fft.fftfreq(size, 1.0 / oversampling))
    order = np.argsort(freqs, kind="stable")
    freqs = freqs[order]
    cumulative = np.cumsum(spectrum[order]) / np.sum(spectrum)
    # one bin per distinct |f| so the interpolation abscissa increases
    distinct, counts = np.unique(freqs, return_counts=True)
    ends = np.cumsum(counts) - 1
    half_width = float(np.interp(fraction, cumulative[ends], distinct))
    return 2.0 * half_width


def dump_waveforms(
    path: str | Path,
    u: WaveformGrid,
    x: WaveformGrid,
    r: WaveformGrid,
    cfg: LinkConfig,
) -> Path:
    """
    Write time, Re/Im of u, x and r, and the noiseless photocurrent s of
    the first block in a batch.
    """
    def first(grid: WaveformGrid) -> ComplexArray:
        samples = np.asarray(grid.samples)
        return samples.reshape(-1, samples.shape[-1])[0]

    u0, x0, r0 = first(u), first(x), first(r)
    s0 = cfg.responsivity * np.abs(r0) ** 2
    columns = ["t", "u_re", "u_im", "x_re", "x_im", "r_re", "r_im", "s"]
    rows = [
        dict(zip(columns, values))
        for values in zip(
            u.t.tolist(), u0.real.tolist(), u0.imag.tolist(), x0.real.tolist(),
            x0.imag.tolist(), r0.real.tolist(), r0.imag.tolist(), s0.tolist(),
        )
    ]
    settings = {"symbol_period": cfg.symbol_period, "rolloff": cfg.rolloff}
    logger.debug("Writing waveform dump to %s", path)
    return tables.write_tsv(tables.table_from_rows(rows, columns), path, settings)
