"""
Monte Carlo experiment engine.

Every launch power is simulated in batches.  Batch ``b`` of point ``p``
draws from ``default_rng([seed, p, b])`` and batches are accumulated in
index order, so results do not depend on the number of worker threads.
"""
from __future__ import annotations

import concurrent.futures
import dataclasses
import logging
import math
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
import scipy.special

from . import tables
from .codebook import Codebook, build_codebook, max_rate, spaced_constellation
from .decoder import (EdgeStatistics, LevelStatistics, edge_log_likelihood,
                      path_log_likelihood, viterbi_decode)
from .enums import Fidelity
from .errors import InfeasibleLaunchPowerError
from .phy import (LinkConfig, ReceivedBlock, calibrate_launch_power,
                  fast_channel, transmit_waveform)
from .trellis import Trellis, build_trellis, forward_log_sum, log_path_count
from .type_hints import ComplexArray, FloatArray, IntArray
from .utils import bit_errors, child_rng

logger = logging.getLogger(__name__)

BER_THRESHOLD = 1e-3
DEFAULT_BLOCKS = 100_000
DEFAULT_ERROR_EVENTS = 100
DEFAULT_BATCH_SIZE = 1000


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    """
    One launch-power sweep.

    Attributes
    ----------
    codebook : Codebook or None
        Not needed by the IMDD baseline.
    link : LinkConfig
        Template; the drive scale is set per point by calibration.
    launch_powers_dbm : tuple of float
        Ascending launch powers.
    laser_power_dbm : float, optional
        Overrides the template's laser power.
    blocks_per_point : int
        Block budget per launch power.
    min_error_events : int or None
        Stop a point once this many blocks were in error.  ``None`` always
        runs the full budget.
    batch_size : int
    fidelity : Fidelity
    seed : int
    threads : int
        Upper bound on worker threads.
    calibration_blocks : int
        Random blocks averaged when calibrating the drive.
    per_sample_noise : bool
        Waveform fidelity only; see :func:`tukeysim.phy.detect_integrate`.
    """
    codebook: Optional[Codebook]
    link: LinkConfig = dataclasses.field(default_factory=LinkConfig)
    launch_powers_dbm: tuple[float, ...] = (-10.0,)
    laser_power_dbm: Optional[float] = None
    blocks_per_point: int = DEFAULT_BLOCKS
    min_error_events: Optional[int] = DEFAULT_ERROR_EVENTS
    batch_size: int = DEFAULT_BATCH_SIZE
    fidelity: Fidelity = Fidelity.waveform
    seed: int = 0
    threads: int = 1
    calibration_blocks: int = 1000
    per_sample_noise: bool = False

    def __post_init__(self):
        powers = tuple(float(p) for p in self.launch_powers_dbm)
        object.__setattr__(self, "launch_powers_dbm", powers)
        object.__setattr__(self, "fidelity", Fidelity.from_any(self.fidelity))
        if not powers:
            raise ValueError("A sweep needs at least one launch power")
        if list(powers) != sorted(powers):
            raise ValueError(f"Launch powers must be ascending: {powers}")
        if self.blocks_per_point < 1 or self.batch_size < 1:
            raise ValueError("blocks_per_point and batch_size must be >= 1")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.laser_power_dbm is not None:
            object.__setattr__(
                self, "link",
                dataclasses.replace(self.link, laser_power_dbm=self.laser_power_dbm),
            )

    @property
    def batches(self) -> list[int]:
        """Block count of each batch of a point."""
        full, rest = divmod(self.blocks_per_point, self.batch_size)
        return [self.batch_size] * full + ([rest] if rest else [])


@dataclasses.dataclass(frozen=True)
class CurvePoint:
    """Result at one launch power."""
    launch_dbm: float
    ber: float
    failure_rate: float
    rate_b_per_sym: Optional[float] = None
    throughput_gbps: Optional[float] = None
    trials: int = 0
    error_events: int = 0
    drive_scale: float = 0.0


@dataclasses.dataclass
class BatchTally:
    """Associative accumulator of one or more batches."""
    blocks: int = 0
    bit_errors: float = 0.0
    failures: int = 0
    block_errors: int = 0
    info_nats: float = 0.0

    def __iadd__(self, other: BatchTally) -> BatchTally:
        self.blocks += other.blocks
        self.bit_errors += other.bit_errors
        self.failures += other.failures
        self.block_errors += other.block_errors
        self.info_nats += other.info_nats
        return self


@dataclasses.dataclass(frozen=True)
class RingSpacingResult:
    """Outcome of a ring-spacing search."""
    best_delta: Optional[float]
    thresholds_dbm: dict[float, Optional[float]]
    curves: dict[float, list[CurvePoint]]

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "delta": delta,
                "threshold_dbm": threshold,
                "best": delta == self.best_delta,
            }
            for delta, threshold in self.thresholds_dbm.items()
        ]


def simulate_channel(
    x: ComplexArray,
    cfg: LinkConfig,
    rng: Optional[np.random.Generator],
    spec: SweepSpec,
) -> ReceivedBlock:
    """Run blocks through the channel of ``spec``; noiseless without ``rng``."""
    if spec.fidelity == Fidelity.fast:
        return fast_channel(x, cfg, rng)
    return transmit_waveform(
        x, cfg, rng, per_sample_noise=spec.per_sample_noise
    )


def _run_batches(
    spec: SweepSpec,
    point: int,
    batch_fn: Callable[[int, np.random.Generator], BatchTally],
    stop: Optional[Callable[[BatchTally], bool]] = None,
) -> BatchTally:
    """
    Run the batches of one point, up to ``spec.threads`` at a time.

    Batches are folded in index order and the run stops after the first
    batch whose running tally satisfies ``stop``.
    """
    sizes = spec.batches
    total = BatchTally()

    def work(index: int) -> BatchTally:
        return batch_fn(sizes[index], child_rng(spec.seed, point, index))

    with concurrent.futures.ThreadPoolExecutor(max_workers=spec.threads) as pool:
        for start in range(0, len(sizes), spec.threads):
            wave = range(start, min(start + spec.threads, len(sizes)))
            for index, tally in zip(wave, pool.map(work, wave)):
                total += tally
                if stop is not None and stop(total):
                    logger.debug(
                        "Point %d stopped after %d batches", point, index + 1
                    )
                    return total
    return total


def _calibrated(
    spec: SweepSpec,
    codewords,
    launch_dbm: float,
) -> LinkConfig:
    drive = calibrate_launch_power(
        spec.link, codewords, launch_dbm,
        n_blocks=spec.calibration_blocks, seed=spec.seed,
    )
    return spec.link.with_launch(drive)


def decoder_statistics(spec: SweepSpec, cfg: LinkConfig) -> EdgeStatistics:
    """
    Edge statistics for decoding ``spec`` on the calibrated link ``cfg``.

    The fast channel is linear in the drive, so only waveform runs get the
    modulator label maps.
    """
    constellation = None
    if spec.fidelity == Fidelity.waveform:
        constellation = spec.codebook.constellation
    return EdgeStatistics.from_link(cfg, constellation)


def _ber_batch(
    spec: SweepSpec,
    trellis: Trellis,
    cfg: LinkConfig,
) -> Callable[[int, np.random.Generator], BatchTally]:
    codebook = spec.codebook
    stats = decoder_statistics(spec, cfg)

    def batch(size: int, rng: np.random.Generator) -> BatchTally:
        sent = rng.integers(codebook.size, size=size)
        rb = simulate_channel(codebook.codewords[sent], cfg, rng, spec)
        decoded = viterbi_decode(trellis, stats, rb, codebook).indices
        failed = decoded < 0
        errors = bit_errors(sent[~failed], decoded[~failed]).sum()
        # a failed block counts as half of its bits in error
        errors = errors + 0.5 * codebook.bits_per_block * failed.sum()
        return BatchTally(
            blocks=size,
            bit_errors=float(errors),
            failures=int(failed.sum()),
            block_errors=int(np.count_nonzero(failed | (decoded != sent))),
        )
    return batch


def run_ber_sweep(
    spec: SweepSpec,
    skip_infeasible: bool = False,
) -> list[CurvePoint]:
    """
    BER and decoding-failure rate against launch power.

    Parameters
    ----------
    spec : SweepSpec
    skip_infeasible : bool, optional
        Leave out launch powers above the saturation ceiling instead of
        raising.

    Raises
    ------
    InfeasibleLaunchPowerError
        If a launch power cannot be reached and ``skip_infeasible`` is off.
    """
    codebook = spec.codebook
    trellis = build_trellis(codebook.constellation, codebook.n)
    bits = codebook.bits_per_block
    points = []
    for index, launch in enumerate(spec.launch_powers_dbm):
        try:
            cfg = _calibrated(spec, codebook, launch)
        except InfeasibleLaunchPowerError as ex:
            if not skip_infeasible:
                raise
            logger.warning("Skipping %.2f dBm: %s", launch, ex)
            continue
        floor = spec.min_error_events
        tally = _run_batches(
            spec, index, _ber_batch(spec, trellis, cfg),
            stop=None if floor is None else (lambda t: t.block_errors >= floor),
        )
        point = CurvePoint(
            launch_dbm=launch,
            ber=tally.bit_errors / (tally.blocks * bits) if bits else 0.0,
            failure_rate=tally.failures / tally.blocks,
            trials=tally.blocks,
            error_events=tally.block_errors,
            drive_scale=cfg.drive_scale,
        )
        logger.info(
            "%7.2f dBm  BER %.3e  failures %.3e  (%d blocks)",
            launch, point.ber, point.failure_rate, point.trials,
        )
        points.append(point)
    return points


def _rate_batch(
    spec: SweepSpec,
    trellis: Trellis,
    cfg: LinkConfig,
) -> Callable[[int, np.random.Generator], BatchTally]:
    codebook = spec.codebook
    stats = decoder_statistics(spec, cfg)
    loglik = edge_log_likelihood(stats)
    log_paths = log_path_count(trellis)

    def batch(size: int, rng: np.random.Generator) -> BatchTally:
        sent = rng.integers(codebook.size, size=size)
        rb = simulate_channel(codebook.codewords[sent], cfg, rng, spec)
        log_p = path_log_likelihood(
            trellis, stats, rb, codebook.signatures[sent]
        )
        log_q = forward_log_sum(trellis, rb.y, rb.z, loglik) - log_paths
        return BatchTally(blocks=size, info_nats=float(np.sum(log_p - log_q)))
    return batch


def run_rate_sweep(spec: SweepSpec) -> list[CurvePoint]:
    """
    Achievable information rate against launch power.

    The rate is ``E[log p(y, z | x) - log q(y, z)] / n`` in bits, where
    ``p`` is the Gaussian law along the transmitted path and ``q`` the
    uniform mixture over every trellis path, clipped to
    ``[0, max_rate]``.
    """
    codebook = spec.codebook
    trellis = build_trellis(codebook.constellation, codebook.n)
    ceiling = max_rate(codebook.constellation, codebook.n)
    points = []
    for index, launch in enumerate(spec.launch_powers_dbm):
        cfg = _calibrated(spec, codebook, launch)
        tally = _run_batches(spec, index, _rate_batch(spec, trellis, cfg))
        rate = tally.info_nats / (tally.blocks * codebook.n * math.log(2.0))
        rate = min(max(rate, 0.0), ceiling)
        point = CurvePoint(
            launch_dbm=launch,
            ber=math.nan,
            failure_rate=math.nan,
            rate_b_per_sym=rate,
            throughput_gbps=rate * cfg.symbol_rate / 1e9,
            trials=tally.blocks,
            drive_scale=cfg.drive_scale,
        )
        logger.info("%7.2f dBm  rate %.4f b/sym", launch, rate)
        points.append(point)
    return points


def pam_amplitudes(levels: int) -> FloatArray:
    """Field amplitudes whose intensities are equally spaced in [0, 1]."""
    if levels < 2:
        raise ValueError(f"PAM needs at least 2 levels, got {levels}")
    return np.sqrt(np.arange(levels) / (levels - 1))


def pam_statistics(
    spec: SweepSpec,
    cfg: LinkConfig,
    amplitudes: FloatArray,
    sent: IntArray,
) -> LevelStatistics:
    """Level statistics measured on noiseless blocks of level indices ``sent``."""
    rb = simulate_channel(amplitudes[sent].astype(complex), cfg, None, spec)
    return LevelStatistics.from_observations(rb.y, sent, len(amplitudes), cfg)


def _imdd_batch(
    spec: SweepSpec,
    cfg: LinkConfig,
    amplitudes: FloatArray,
    block_length: int,
    stats: LevelStatistics,
) -> Callable[[int, np.random.Generator], BatchTally]:
    levels = len(amplitudes)
    bits = int(math.log2(levels))

    def batch(size: int, rng: np.random.Generator) -> BatchTally:
        sent = rng.integers(levels, size=(size, block_length))
        rb = simulate_channel(amplitudes[sent].astype(complex), cfg, rng, spec)
        # z of a real nonnegative sequence repeats what y carries; the
        # neighbour leakage it would add is worse than its extra energy
        loglik = stats.log_density(rb.y)
        decided = np.argmax(loglik, axis=-1)
        log_p = np.take_along_axis(loglik, sent[..., np.newaxis], -1)[..., 0]
        log_q = scipy.special.logsumexp(loglik, axis=-1) - math.log(levels)
        errors = bit_errors(sent, decided).sum() if bits else 0
        wrong = np.any(decided != sent, axis=-1)
        return BatchTally(
            blocks=size,
            bit_errors=float(errors),
            block_errors=int(np.count_nonzero(wrong)),
            info_nats=float(np.sum(log_p - log_q)),
        )
    return batch


def run_imdd_baseline(
    levels: int,
    spec: SweepSpec,
    block_length: int = 8,
) -> list[CurvePoint]:
    """
    PAM intensity modulation through the same link and photodiode.

    Each launch power calibrates the drive on random PAM blocks, then
    measures the per-level law of the flat-top integrals on those blocks
    without noise (see :class:`tukeysim.decoder.LevelStatistics`).
    Reports the per-symbol mutual information under that law as
    ``rate_b_per_sym`` (and times the symbol rate as throughput) with the
    hard-decision BER.

    Raises
    ------
    ValueError
        If the calibration blocks cannot show every level twice.
    """
    amplitudes = pam_amplitudes(levels)
    bits = math.log2(levels)
    rng = np.random.default_rng(spec.seed)
    # every level equally often, in random order
    sent = rng.permuted(
        np.arange(spec.calibration_blocks * block_length) % levels
    ).reshape(spec.calibration_blocks, block_length)
    calibration_words = amplitudes[sent].astype(complex)
    points = []
    for index, launch in enumerate(spec.launch_powers_dbm):
        cfg = _calibrated(spec, calibration_words, launch)
        stats = pam_statistics(spec, cfg, amplitudes, sent)
        tally = _run_batches(
            spec, index, _imdd_batch(spec, cfg, amplitudes, block_length, stats)
        )
        symbols = tally.blocks * block_length
        rate = min(max(tally.info_nats / (symbols * math.log(2.0)), 0.0), bits)
        point = CurvePoint(
            launch_dbm=launch,
            ber=tally.bit_errors / (symbols * bits),
            failure_rate=0.0,
            rate_b_per_sym=rate,
            throughput_gbps=rate * cfg.symbol_rate / 1e9,
            trials=tally.blocks,
            error_events=tally.block_errors,
            drive_scale=cfg.drive_scale,
        )
        logger.info(
            "PAM-%d %7.2f dBm  %.1f Gb/s", levels, launch, point.throughput_gbps
        )
        points.append(point)
    return points


def threshold_crossing(
    points: Sequence[CurvePoint],
    target: float = BER_THRESHOLD,
    bits_per_block: int = 1,
) -> Optional[float]:
    """
    Launch power where the BER first falls to ``target``.

    Interpolates linearly in log10(BER) between the bracketing points.
    Returns ``None`` when the curve never brackets the target.  A point
    without errors is read as half an error among all of its bits,
    ``trials * bits_per_block``; measured BERs are used as they are.
    """
    def log_ber(point: CurvePoint) -> float:
        if point.ber > 0.0:
            return math.log10(point.ber)
        return math.log10(0.5 / max(point.trials * bits_per_block, 1))

    log_target = math.log10(target)
    previous = None
    for point in points:
        current = log_ber(point)
        if point.ber <= target:
            if previous is None:
                return None
            x0, y0 = previous
            if current >= y0:
                return point.launch_dbm
            return x0 + (log_target - y0) * (point.launch_dbm - x0) / (current - y0)
        previous = (point.launch_dbm, current)
    return None


def run_ring_spacing_search(
    n_rings: int,
    n_phases: int,
    n: int,
    deltas: Iterable[float],
    spec: SweepSpec,
    target: float = BER_THRESHOLD,
) -> RingSpacingResult:
    """
    Pick the ring spacing needing the least launch power for ``target`` BER.

    Spacings whose curve never reaches the target are reported with no
    threshold; ``best_delta`` is ``None`` if none does.
    """
    deltas = list(deltas)
    if not deltas:
        raise ValueError("Ring spacing search needs at least one delta")
    thresholds = {}
    curves = {}
    for delta in deltas:
        codebook = build_codebook(spaced_constellation(n_rings, n_phases, delta), n)
        curve = run_ber_sweep(
            dataclasses.replace(spec, codebook=codebook), skip_infeasible=True
        )
        curves[delta] = curve
        thresholds[delta] = threshold_crossing(
            curve, target, bits_per_block=codebook.bits_per_block
        )
        logger.info("delta %.3f: threshold %s dBm", delta, thresholds[delta])
    reached = {d: t for d, t in thresholds.items() if t is not None}
    best = min(reached, key=reached.get) if reached else None
    return RingSpacingResult(best_delta=best, thresholds_dbm=thresholds, curves=curves)


def run_oband(
    spec: SweepSpec,
    dispersions: Sequence[float] = (-1.0, 1.0),
) -> dict[float, list[CurvePoint]]:
    """
    BER sweeps over an O-band link for each residual dispersion (ps/nm/km).
    """
    template = spec.link
    curves = {}
    for dispersion in dispersions:
        link = LinkConfig.o_band(
            dispersion_ps_nm_km=dispersion,
            length_km=template.length_km,
            symbol_rate=template.symbol_rate,
            rolloff=template.rolloff,
            laser_power_dbm=template.laser_power_dbm,
            kappa=template.kappa,
            responsivity=template.responsivity,
            temperature_k=template.temperature_k,
            load_resistance=template.load_resistance,
            noise_scale=template.noise_scale,
        )
        logger.info("O band, D = %+.2f ps/nm/km", dispersion)
        curves[dispersion] = run_ber_sweep(dataclasses.replace(spec, link=link))
    return curves


def run_laser_power_study(
    spec: SweepSpec,
    laser_powers_dbm: Sequence[float],
) -> dict[float, list[CurvePoint]]:
    """BER sweeps at several laser powers; unreachable launch powers are
    left out of each curve."""
    curves = {}
    for laser in laser_powers_dbm:
        logger.info("Laser power %.2f dBm", laser)
        curves[laser] = run_ber_sweep(
            dataclasses.replace(spec, laser_power_dbm=laser),
            skip_infeasible=True,
        )
    return curves


CURVE_COLUMNS = [field.name for field in dataclasses.fields(CurvePoint)]


def write_curve_table(
    points: Iterable[CurvePoint] | Iterable[Mapping[str, Any]],
    path: str | Path,
    settings: Optional[Mapping[str, Any]] = None,
    columns: Optional[Sequence[str]] = None,
) -> Path:
    """Write curve points as a tab-separated table with a provenance header."""
    table = tables.table_from_rows(list(points), columns or CURVE_COLUMNS)
    return tables.write_tsv(table, path, settings=settings)
