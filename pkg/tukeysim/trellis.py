"""
The square-law-distinct trellis of a star-QAM constellation.

For block length ``n`` the trellis has ``2n`` vertex layers: a root, then
``2n - 2`` layers of one vertex per ring, then a goal.  Section ``s`` joins
layer ``s`` to layer ``s + 1``:

* even sections are ISI-free: vertex ``j`` has one edge to ``j`` labelled
  ``radii[j]^2`` (the root and goal sections fan out and in);
* odd sections are ISI-present: vertex ``j`` has ``ceil((n_p+1)/2)``
  parallel edges to every ``k``, labelled with the psi set of (j, k).

Root-to-goal label sequences are exactly the reachable signatures, and no
two paths share one.

Paths are indexed in lexicographic order of their label sequences.  A path
is the digit string ``(r_0, e_1, ..., e_{n-1})`` where ``r_0`` is the first
ring and ``e_l`` indexes the out-edges of an odd-section vertex sorted by
(label, destination ring).
"""
from __future__ import annotations

import dataclasses
import functools
import itertools
import logging
import math
from typing import Callable, Iterator, Optional

import numpy as np
import scipy.special

from .enums import SectionKind
from .errors import TrellisBudgetError
from .sqam import Signature, SqamConstellation, canonicalize, psi
from .type_hints import FloatArray, IntArray

logger = logging.getLogger(__name__)

#: Default number of paths enumerate_label_sequences will walk.
ENUMERATION_BUDGET = 2 ** 25


def psi_set(
    constellation: SqamConstellation,
    j: int,
    k: int,
) -> tuple[float, ...]:
    """
    Distinct overlap energies between a point of ring ``j`` and one of ring
    ``k``, ascending.

    The set has ``ceil((n_p + 1) / 2)`` members for every pair of rings.
    """
    a = constellation.ring(j)
    b = constellation.ring(k)
    values = psi(a[:, np.newaxis], b[np.newaxis, :]).ravel()
    return tuple(sorted(set(canonicalize(values))))


def expected_path_count(constellation: SqamConstellation, n: int) -> int:
    """Closed-form path count ``ceil((n_p+1)/2)^(n-1) * n_r^n``."""
    return constellation.parallel_edges ** (n - 1) * constellation.n_rings ** n


@dataclasses.dataclass(frozen=True, eq=False)
class TrellisSection:
    """
    The edges joining two adjacent vertex layers.

    Edges are ordered by (source vertex, label, destination vertex); for a
    fixed destination this is the order that breaks Viterbi ties.
    """
    index: int
    kind: SectionKind
    src: IntArray
    dst: IntArray
    labels: FloatArray
    #: position of each edge's label in its psi set (0 on ISI-free edges)
    choice: IntArray
    n_dst: int

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def observation_index(self) -> int:
        """Index of this section's interval among the y (even) or z (odd)
        observations."""
        return self.index // 2


@dataclasses.dataclass(frozen=True, eq=False)
class Trellis:
    """
    Layered, edge-labelled graph for one constellation and block length.

    Attributes
    ----------
    constellation : SqamConstellation
    n : int
        Block length.
    psi_table : ndarray, shape (n_r, n_r, K)
        ``psi_table[j, k]`` is the ascending psi set of rings (j, k).
    sections : tuple of TrellisSection
        ``2n - 1`` sections, alternating ISI-free and ISI-present.
    out_dst, out_choice : ndarray, shape (n_r, n_r * K)
        Odd-section out-edges of each ring vertex in path-digit order.
    """
    constellation: SqamConstellation
    n: int
    psi_table: FloatArray
    sections: tuple[TrellisSection, ...]
    out_dst: IntArray
    out_choice: IntArray

    @property
    def depth(self) -> int:
        """Number of sections (the signature length)."""
        return 2 * self.n - 1

    @property
    def energies(self) -> FloatArray:
        """Canonical squared radii, the ISI-free edge labels."""
        return np.asarray(
            canonicalize(self.constellation.radii_array ** 2), dtype=float
        )

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        n_r = self.constellation.n_rings
        return (1,) + (n_r,) * (2 * self.n - 2) + (1,)

    @property
    def radix(self) -> tuple[int, ...]:
        """Mixed radix of the path digits."""
        n_r = self.constellation.n_rings
        return (n_r,) + (n_r * self.constellation.parallel_edges,) * (self.n - 1)

    @property
    def path_count(self) -> int:
        """Number of root-to-goal paths, counted through the sections."""
        counts = [1]
        for section in self.sections:
            nxt = [0] * section.n_dst
            for src, dst in zip(section.src.tolist(), section.dst.tolist()):
                nxt[dst] += counts[src]
            counts = nxt
        return counts[0]

    def path_digits(self, path_ids: IntArray) -> IntArray:
        """Split path indices into their mixed-radix digits, shape (B, n)."""
        path_ids = np.asarray(path_ids, dtype=np.int64)
        digits = np.empty(path_ids.shape + (self.n,), dtype=np.int64)
        rest = path_ids.copy()
        for pos, base in reversed(list(enumerate(self.radix))):
            digits[..., pos] = rest % base
            rest //= base
        return digits

    def path_ids(self, digits: IntArray) -> IntArray:
        """Combine mixed-radix digits (..., n) into path indices."""
        digits = np.asarray(digits, dtype=np.int64)
        ids = np.zeros(digits.shape[:-1], dtype=np.int64)
        for pos, base in enumerate(self.radix):
            ids = ids * base + digits[..., pos]
        return ids

    def rings_and_choices(
        self,
        path_ids: IntArray,
    ) -> tuple[IntArray, IntArray]:
        """
        Ring sequence (..., n) and psi-set choices (..., n - 1) of paths.
        """
        digits = self.path_digits(path_ids)
        rings = np.empty_like(digits)
        choices = np.empty(digits.shape[:-1] + (self.n - 1,), dtype=np.int64)
        rings[..., 0] = digits[..., 0]
        for ell in range(1, self.n):
            prev = rings[..., ell - 1]
            rings[..., ell] = self.out_dst[prev, digits[..., ell]]
            choices[..., ell - 1] = self.out_choice[prev, digits[..., ell]]
        return rings, choices

    def label_array(self, path_ids: IntArray) -> FloatArray:
        """Label sequences (signatures) of paths, shape (..., 2n - 1)."""
        rings, choices = self.rings_and_choices(path_ids)
        energies = self.energies
        labels = np.empty(rings.shape[:-1] + (self.depth,), dtype=float)
        labels[..., 0::2] = energies[rings]
        labels[..., 1::2] = self.psi_table[
            rings[..., :-1], rings[..., 1:], choices
        ]
        return labels

    def edge_indices(self, path_ids: IntArray) -> IntArray:
        """Edge index taken in every section, shape (..., 2n - 1)."""
        rings, choices = self.rings_and_choices(path_ids)
        n_r = self.constellation.n_rings
        n_k = self.constellation.parallel_edges
        edges = np.empty(rings.shape[:-1] + (self.depth,), dtype=np.int64)
        edges[..., 0::2] = rings
        # odd sections are laid out (src, label, dst); recover the position
        # of (src, dst, choice) from the per-source digit table
        for ell in range(self.n - 1):
            src = rings[..., ell]
            dst = rings[..., ell + 1]
            edges[..., 2 * ell + 1] = (
                src * n_r * n_k + self._digit_of[src, dst, choices[..., ell]]
            )
        return edges

    @functools.cached_property
    def _digit_of(self) -> IntArray:
        n_r = self.constellation.n_rings
        n_k = self.constellation.parallel_edges
        table = np.empty((n_r, n_r, n_k), dtype=np.int64)
        for src in range(n_r):
            for digit, (dst, choice) in enumerate(
                zip(self.out_dst[src], self.out_choice[src])
            ):
                table[src, dst, choice] = digit
        return table

    def path_from_edges(self, edges: IntArray) -> IntArray:
        """Path indices from the edges taken in every section."""
        edges = np.asarray(edges, dtype=np.int64)
        n_r = self.constellation.n_rings
        n_k = self.constellation.parallel_edges
        digits = np.empty(edges.shape[:-1] + (self.n,), dtype=np.int64)
        digits[..., 0] = edges[..., 0]
        for ell in range(1, self.n):
            digits[..., ell] = edges[..., 2 * ell - 1] % (n_r * n_k)
        return self.path_ids(digits)


def _psi_table(constellation: SqamConstellation) -> FloatArray:
    n_r = constellation.n_rings
    n_k = constellation.parallel_edges
    table = np.empty((n_r, n_r, n_k), dtype=float)
    for j, k in itertools.product(range(n_r), repeat=2):
        values = psi_set(constellation, j, k)
        if len(values) != n_k:
            raise RuntimeError(
                f"psi set of rings ({j}, {k}) has {len(values)} values, "
                f"expected {n_k}"
            )
        table[j, k] = values
    return table


def build_trellis(constellation: SqamConstellation, n: int) -> Trellis:
    """
    Build the trellis of ``constellation`` for blocks of ``n`` symbols.

    Raises
    ------
    ValueError
        If ``n < 2``.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"Block length must be an integer >= 2, got {n}")
    n = int(n)
    n_r = constellation.n_rings
    n_k = constellation.parallel_edges
    table = _psi_table(constellation)

    # odd-section out-edges of each source, sorted by (label, dst)
    out_dst = np.empty((n_r, n_r * n_k), dtype=np.int64)
    out_choice = np.empty((n_r, n_r * n_k), dtype=np.int64)
    for src in range(n_r):
        order = sorted(
            itertools.product(range(n_r), range(n_k)),
            key=lambda dc: (table[src, dc[0], dc[1]], dc[0]),
        )
        out_dst[src] = [dst for dst, _ in order]
        out_choice[src] = [choice for _, choice in order]

    sections = []
    for index in range(2 * n - 1):
        last = index == 2 * n - 2
        if index % 2 == 0:
            if index == 0:
                src = np.zeros(n_r, dtype=np.int64)
                dst = np.arange(n_r)
            else:
                src = np.arange(n_r)
                dst = np.zeros(n_r, dtype=np.int64) if last else np.arange(n_r)
            ring = dst if index == 0 else src
            sections.append(TrellisSection(
                index=index,
                kind=SectionKind.isi_free,
                src=src,
                dst=dst,
                labels=np.asarray(
                    canonicalize(constellation.radii_array ** 2), dtype=float
                )[ring],
                choice=np.zeros(n_r, dtype=np.int64),
                n_dst=1 if last else n_r,
            ))
        else:
            src = np.repeat(np.arange(n_r), n_r * n_k)
            dst = out_dst.ravel()
            choice = out_choice.ravel()
            sections.append(TrellisSection(
                index=index,
                kind=SectionKind.isi_present,
                src=src,
                dst=dst,
                labels=table[src, dst, choice],
                choice=choice,
                n_dst=n_r,
            ))

    trellis = Trellis(
        constellation=constellation,
        n=n,
        psi_table=table,
        sections=tuple(sections),
        out_dst=out_dst,
        out_choice=out_choice,
    )
    logger.debug(
        "Built trellis for %d rings x %d phases, n=%d: %d paths",
        n_r, constellation.n_phases, n, expected_path_count(constellation, n),
    )
    return trellis


def check_budget(path_count: int, budget: Optional[int]) -> None:
    """Raise TrellisBudgetError if ``path_count`` exceeds ``budget``."""
    if budget is not None and path_count > budget:
        raise TrellisBudgetError(path_count, budget)


def iter_path_blocks(
    trellis: Trellis,
    chunk: int = 65536,
    budget: Optional[int] = ENUMERATION_BUDGET,
) -> Iterator[IntArray]:
    """Yield consecutive arrays of path indices covering every path."""
    total = expected_path_count(trellis.constellation, trellis.n)
    check_budget(total, budget)
    for start in range(0, total, chunk):
        yield np.arange(start, min(start + chunk, total), dtype=np.int64)


def enumerate_label_sequences(
    trellis: Trellis,
    budget: Optional[int] = ENUMERATION_BUDGET,
) -> Iterator[Signature]:
    """
    Yield every root-to-goal label sequence once, in lexicographic order.

    Parameters
    ----------
    trellis : Trellis
    budget : int or None, optional
        Refuse trellises with more paths than this.  ``None`` streams
        without a limit.

    Raises
    ------
    TrellisBudgetError
        If the path count exceeds ``budget``.  Raised on the first ``next``.
    """
    for ids in iter_path_blocks(trellis, budget=budget):
        for row in trellis.label_array(ids):
            yield Signature(tuple(row))


#: ``loglik(section, observations)`` -> per-edge log-likelihoods, (B, E).
EdgeLogLikelihood = Callable[[TrellisSection, FloatArray], FloatArray]


def forward_log_sum(
    trellis: Trellis,
    y: FloatArray,
    z: FloatArray,
    loglik: EdgeLogLikelihood,
) -> FloatArray:
    """
    Log of the sum over all paths of the exponentiated path log-likelihood.

    Parameters
    ----------
    trellis : Trellis
    y : ndarray, shape (..., n)
        ISI-free observations.
    z : ndarray, shape (..., n - 1)
        ISI-present observations.
    loglik : callable
        ``loglik(section, obs)`` with ``obs`` of shape (B,) returns the
        log-likelihood of every edge of the section, shape (B, E).

    Returns
    -------
    total : ndarray, shape (...)
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    lead = y.shape[:-1]
    y = y.reshape(-1, trellis.n)
    z = z.reshape(-1, trellis.n - 1)
    alpha = np.zeros((y.shape[0], 1))
    for section in trellis.sections:
        obs = section_observations(section, y, z)
        cand = alpha[:, section.src] + loglik(section, obs)
        alpha = np.stack(
            [
                scipy.special.logsumexp(cand[:, section.dst == v], axis=1)
                for v in range(section.n_dst)
            ],
            axis=1,
        )
    return alpha[:, 0].reshape(lead)


def section_observations(
    section: TrellisSection,
    y: FloatArray,
    z: FloatArray,
) -> FloatArray:
    """The observation column a section's edges are scored against."""
    source = y if section.kind == SectionKind.isi_free else z
    return source[:, section.observation_index]


def log_path_count(trellis: Trellis) -> float:
    return math.log(expected_path_count(trellis.constellation, trellis.n))
