"""
Sequence detection on the square-law trellis.

Branch metrics are negative Gaussian log-likelihoods (constant terms
dropped), so Viterbi finds the exact minimum of the summed metric over all
trellis paths.  A best path whose standard vector is not a codeword is a
decoding failure.

Edge means follow the linearized modulator unless the statistics carry a
label map, which replaces each label by its energy through the modulator
sine (see :func:`modulator_label_maps`).
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Mapping, Optional

import numpy as np

from .codebook import Codebook
from .enums import SectionKind
from .errors import TrellisBudgetError
from .phy import LinkConfig, ReceivedBlock, flat_top_energy, taper_energy
from .sqam import SqamConstellation, canonicalize, psi
from .trellis import (ENUMERATION_BUDGET, Trellis, TrellisSection,
                      expected_path_count, section_observations)
from .type_hints import FloatArray, IntArray

logger = logging.getLogger(__name__)

#: Smallest edge variance; keeps the metrics finite on noiseless links.
VARIANCE_FLOOR = 1e-60

#: Sorted labels and the energy each one has through the modulator.
LabelMap = tuple[FloatArray, FloatArray]


def _label_map(labels, energies) -> LabelMap:
    labels = np.asarray(canonicalize(np.ravel(labels)), dtype=float)
    keys, inverse = np.unique(labels, return_inverse=True)
    totals = np.bincount(inverse, weights=np.ravel(energies))
    return keys, totals / np.bincount(inverse)


def modulator_label_maps(
    cfg: LinkConfig,
    constellation: SqamConstellation,
) -> dict[SectionKind, LabelMap]:
    """
    Label maps of both section kinds for a link without precompensation.

    ISI-free labels ``|x|^2`` map to :func:`tukeysim.phy.flat_top_energy`
    and ISI-present labels ``psi(a, b)`` to
    :func:`tukeysim.phy.taper_energy`, averaged over every constellation
    point (or pair) sharing the label.
    """
    points = constellation.points()
    a = points[:, np.newaxis]
    b = points[np.newaxis, :]
    return {
        SectionKind.isi_free: _label_map(
            np.abs(points) ** 2, flat_top_energy(points, cfg)
        ),
        SectionKind.isi_present: _label_map(psi(a, b), taper_energy(a, b, cfg)),
    }


@dataclasses.dataclass(frozen=True)
class EdgeStatistics:
    """
    Per-label mean and variance scales of the interval integrals.

    ``Mean(e) = R G label`` and ``Var(e) = G sigma_sh^2 label + T sigma_th^2``
    where ``G = (E_in kappa alpha)^2 exp(-rho L)``.  An ISI-free interval
    observes ``(1 - beta)`` times these, an ISI-present one ``beta`` times.

    With ``label_maps``, a label of a given section kind is first replaced
    by its energy through the modulator.
    """
    gain: float
    responsivity: float
    shot_psd: float
    thermal_psd: float
    symbol_period: float
    rolloff: float
    label_maps: Optional[Mapping[SectionKind, LabelMap]] = dataclasses.field(
        default=None, compare=False, repr=False,
    )

    def __post_init__(self):
        if not 0.0 < self.rolloff < 1.0:
            raise ValueError(
                f"Decoding needs a roll-off strictly inside (0, 1), "
                f"got {self.rolloff}"
            )

    @classmethod
    def from_link(
        cls,
        cfg: LinkConfig,
        constellation: Optional[SqamConstellation] = None,
    ) -> EdgeStatistics:
        """
        Statistics of a calibrated link.

        Given the constellation, a link without precompensation gets the
        modulator label maps: its drive reaches the modulator undispersed,
        so each interval sees the sine of its own symbols only.  A
        precompensated link keeps the linearized means.
        """
        label_maps = None
        if (constellation is not None and not cfg.precompensate
                and cfg.drive_phase > 0.0):
            label_maps = modulator_label_maps(cfg, constellation)
        return cls(
            gain=cfg.link_gain,
            responsivity=cfg.responsivity,
            shot_psd=cfg.shot_psd,
            thermal_psd=cfg.thermal_psd,
            symbol_period=cfg.symbol_period,
            rolloff=cfg.rolloff,
            label_maps=label_maps,
        )

    def energy(self, labels, kind: Optional[SectionKind] = None) -> FloatArray:
        labels = np.asarray(labels, dtype=float)
        if kind is None or self.label_maps is None:
            return labels
        keys, energies = self.label_maps[kind]
        return np.interp(labels, keys, energies)

    def mean(self, labels, kind: Optional[SectionKind] = None) -> FloatArray:
        return self.responsivity * self.gain * self.energy(labels, kind)

    def var(self, labels, kind: Optional[SectionKind] = None) -> FloatArray:
        var = (
            self.gain * self.shot_psd * self.energy(labels, kind)
            + self.symbol_period * self.thermal_psd
        )
        return np.maximum(var, VARIANCE_FLOOR)

    def fraction(self, kind: SectionKind) -> float:
        """Share of the symbol period covered by an interval of ``kind``."""
        if kind == SectionKind.isi_free:
            return 1.0 - self.rolloff
        return self.rolloff


def _metric(obs, labels, stats: EdgeStatistics, kind: SectionKind):
    fraction = stats.fraction(kind)
    mean = stats.mean(labels, kind)
    var = stats.var(labels, kind)
    return (obs - fraction * mean) ** 2 / (fraction * var) + np.log(var)


def branch_metric_isi_free(y, labels, stats: EdgeStatistics):
    """
    ``(y - (1 - beta) Mean)^2 / ((1 - beta) Var) + ln Var``.

    ``y`` and ``labels`` broadcast against each other.
    """
    return _metric(y, labels, stats, SectionKind.isi_free)


def branch_metric_isi_present(z, labels, stats: EdgeStatistics):
    """``(z - beta Mean)^2 / (beta Var) + ln Var``."""
    return _metric(z, labels, stats, SectionKind.isi_present)


def section_metrics(
    section: TrellisSection,
    stats: EdgeStatistics,
    obs: FloatArray,
) -> FloatArray:
    """Metric of every edge of ``section`` for observations (B,), (B, E)."""
    return _metric(
        np.asarray(obs)[:, np.newaxis],
        section.labels[np.newaxis, :],
        stats,
        section.kind,
    )


def edge_log_likelihood(stats: EdgeStatistics):
    """
    Full Gaussian log-density of each edge, for
    :func:`tukeysim.trellis.forward_log_sum`.
    """
    def loglik(section: TrellisSection, obs: FloatArray) -> FloatArray:
        return gaussian_log_density(
            np.asarray(obs)[:, np.newaxis], section.labels[np.newaxis, :],
            stats, section.kind,
        )
    return loglik


def gaussian_log_density(obs, labels, stats: EdgeStatistics, kind: SectionKind):
    fraction = stats.fraction(kind)
    mean = fraction * stats.mean(labels, kind)
    var = fraction * stats.var(labels, kind)
    return -0.5 * (np.log(2.0 * math.pi * var) + (obs - mean) ** 2 / var)


def path_log_likelihood(
    trellis: Trellis,
    stats: EdgeStatistics,
    rb: ReceivedBlock,
    labels: FloatArray,
) -> FloatArray:
    """Gaussian log-likelihood of given label sequences (B, 2n - 1)."""
    total = np.zeros(labels.shape[:-1])
    for section in trellis.sections:
        obs = section_observations(section, rb.y, rb.z)
        total = total + gaussian_log_density(
            obs, labels[..., section.index], stats, section.kind,
        )
    return total


@dataclasses.dataclass(frozen=True, eq=False)
class LevelStatistics:
    """
    Gaussian law of the ISI-free integral of each PAM level.

    ``means`` and the distortion part of ``variances`` are measured on
    noiseless observations of the calibrated channel, so they include the
    modulator sine and whatever the neighbouring symbols leak into the
    interval.  Photodiode noise of the mean energy is added on top.
    """
    means: FloatArray
    variances: FloatArray

    @classmethod
    def from_observations(
        cls,
        y: FloatArray,
        sent: IntArray,
        levels: int,
        cfg: LinkConfig,
    ) -> LevelStatistics:
        """
        Raises
        ------
        ValueError
            If some level was observed fewer than twice.
        """
        y = np.ravel(y)
        sent = np.ravel(sent)
        counts = np.bincount(sent, minlength=levels)
        if np.any(counts < 2):
            raise ValueError(
                f"Every PAM level needs two noiseless observations, got "
                f"{counts.tolist()}"
            )
        means = np.bincount(sent, weights=y, minlength=levels) / counts
        spread = np.bincount(
            sent, weights=(y - means[sent]) ** 2, minlength=levels
        ) / counts
        energy = np.maximum(means, 0.0) / cfg.responsivity
        noise = (
            energy * cfg.shot_psd
            + (1.0 - cfg.rolloff) * cfg.symbol_period * cfg.thermal_psd
        )
        return cls(
            means=means, variances=np.maximum(spread + noise, VARIANCE_FLOOR)
        )

    def log_density(self, obs) -> FloatArray:
        """Log-density of observations (...) under every level, (..., M)."""
        obs = np.asarray(obs)[..., np.newaxis]
        return -0.5 * (
            np.log(2.0 * math.pi * self.variances)
            + (obs - self.means) ** 2 / self.variances
        )


@dataclasses.dataclass(frozen=True)
class DecodeResult:
    """
    Attributes
    ----------
    indices : ndarray of int
        Codebook index of each decoded block, -1 for a decoding failure.
    path_ids : ndarray of int
        Minimum-metric trellis path of each block.
    metrics : ndarray of float
        Total metric of that path.
    """
    indices: IntArray
    path_ids: IntArray
    metrics: FloatArray

    @property
    def failures(self) -> IntArray:
        return self.indices < 0


def _check_dimensions(trellis: Trellis, rb: ReceivedBlock) -> None:
    if rb.n != trellis.n:
        raise ValueError(
            f"Received blocks of length {rb.n} for a trellis with n={trellis.n}"
        )


def viterbi_decode(
    trellis: Trellis,
    stats: EdgeStatistics,
    rb: ReceivedBlock,
    codebook: Codebook,
) -> DecodeResult:
    """
    Minimum-metric path search over the trellis for a batch of blocks.

    Ties at a vertex go to the incoming edge with the smaller source vertex,
    then the smaller label.

    Raises
    ------
    ValueError
        If the observations do not match the trellis block length.
    """
    _check_dimensions(trellis, rb)
    y = rb.y.reshape(-1, trellis.n)
    z = rb.z.reshape(-1, trellis.n - 1)
    batch = y.shape[0]
    rows = np.arange(batch)

    cost = np.zeros((batch, 1))
    backpointers = []
    for section in trellis.sections:
        obs = section_observations(section, y, z)
        cand = cost[:, section.src] + section_metrics(section, stats, obs)
        best_edge = np.empty((batch, section.n_dst), dtype=np.int64)
        new_cost = np.empty((batch, section.n_dst))
        for v in range(section.n_dst):
            incoming = np.flatnonzero(section.dst == v)
            pick = np.argmin(cand[:, incoming], axis=1)
            best_edge[:, v] = incoming[pick]
            new_cost[:, v] = cand[rows, incoming[pick]]
        backpointers.append(best_edge)
        cost = new_cost

    edges = np.empty((batch, trellis.depth), dtype=np.int64)
    vertex = np.zeros(batch, dtype=np.int64)
    for section, best_edge in zip(
        reversed(trellis.sections), reversed(backpointers)
    ):
        edge = best_edge[rows, vertex]
        edges[:, section.index] = edge
        vertex = section.src[edge]

    path_ids = trellis.path_from_edges(edges)
    lead = rb.y.shape[:-1]
    return DecodeResult(
        indices=codebook.index_of_path(path_ids).reshape(lead),
        path_ids=path_ids.reshape(lead),
        metrics=cost[:, 0].reshape(lead),
    )


def path_metrics(
    trellis: Trellis,
    stats: EdgeStatistics,
    rb: ReceivedBlock,
    path_ids: Optional[IntArray] = None,
    budget: Optional[int] = ENUMERATION_BUDGET,
) -> FloatArray:
    """
    Total metric of paths for every block, shape (B, P).

    Accumulates section by section in the same order as Viterbi.
    Defaults to every path of the trellis.
    """
    _check_dimensions(trellis, rb)
    if path_ids is None:
        total = expected_path_count(trellis.constellation, trellis.n)
        if budget is not None and total > budget:
            raise TrellisBudgetError(total, budget)
        path_ids = np.arange(total, dtype=np.int64)
    labels = trellis.label_array(path_ids)
    y = rb.y.reshape(-1, trellis.n)
    z = rb.z.reshape(-1, trellis.n - 1)
    metric = np.zeros((y.shape[0], len(path_ids)))
    for section in trellis.sections:
        obs = section_observations(section, y, z)
        metric = metric + _metric(
            obs[:, np.newaxis], labels[np.newaxis, :, section.index], stats,
            section.kind,
        )
    return metric


def brute_force_ml(
    codebook: Codebook,
    trellis: Trellis,
    stats: EdgeStatistics,
    rb: ReceivedBlock,
    budget: Optional[int] = ENUMERATION_BUDGET,
) -> IntArray:
    """
    Minimum-metric codeword by exhaustive search over the codebook.

    Never fails; ties go to the lower codebook index.

    Raises
    ------
    TrellisBudgetError
        If the codebook is larger than ``budget``.
    """
    if budget is not None and codebook.size > budget:
        raise TrellisBudgetError(codebook.size, budget)
    metric = path_metrics(trellis, stats, rb, path_ids=codebook.path_ids)
    return np.argmin(metric, axis=1).reshape(rb.y.shape[:-1])
