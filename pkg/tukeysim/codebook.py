"""
Codebooks of pairwise square-law-distinct blocks.

The standard transversal holds one standard vector per trellis path, so it
is the largest codebook a square-law receiver can separate.  A working
codebook keeps the lexicographically first power-of-two members and maps
messages to them by natural binary index.
"""
from __future__ import annotations

import dataclasses
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import tables
from .errors import CodebookError
from .sqam import (SqamConstellation, StandardVector, Signature,
                   standard_from_signatures)
from .trellis import (ENUMERATION_BUDGET, Trellis, build_trellis,
                      check_budget, expected_path_count, iter_path_blocks)
from .type_hints import ComplexArray, FloatArray, IntArray
from .utils import floor_log2

logger = logging.getLogger(__name__)


def ring_spacing_radii(n_rings: int, delta: float) -> tuple[float, ...]:
    """
    Equally spaced ring radii ``1, 1 + delta, ..., 1 + (n_r - 1) delta``.

    Raises
    ------
    ValueError
        If ``delta`` is not positive or ``n_rings < 1``.
    """
    if not delta > 0.0:
        raise ValueError(f"Ring spacing must be positive, got {delta}")
    if n_rings < 1:
        raise ValueError(f"Need at least one ring, got {n_rings}")
    return tuple(1.0 + j * delta for j in range(n_rings))


def spaced_constellation(
    n_rings: int,
    n_phases: int,
    delta: float,
) -> SqamConstellation:
    """Star QAM with radii from :func:`ring_spacing_radii`."""
    return SqamConstellation(ring_spacing_radii(n_rings, delta), n_phases)


def max_rate(constellation: SqamConstellation, n: int) -> float:
    """
    Highest rate in b/sym of a power-of-two codebook of block length ``n``.

    Computed with exact integers as ``floor(log2(|P|)) / n``.
    """
    return floor_log2(expected_path_count(constellation, n)) / n


@dataclasses.dataclass(frozen=True, eq=False)
class Transversal:
    """The standard vectors of every trellis path, in path order."""
    constellation: SqamConstellation
    n: int
    vectors: ComplexArray
    signatures: FloatArray
    path_ids: IntArray

    def __len__(self) -> int:
        return len(self.path_ids)


def standard_transversal(
    constellation: SqamConstellation,
    n: int,
    budget: Optional[int] = ENUMERATION_BUDGET,
    trellis: Optional[Trellis] = None,
) -> Transversal:
    """
    One standard vector for every square-law equivalence class.

    Each trellis label sequence goes through the inverse signature map and
    is snapped onto the constellation.

    Raises
    ------
    TrellisBudgetError
        If the trellis has more paths than ``budget``.
    """
    trellis = trellis or build_trellis(constellation, n)
    total = expected_path_count(constellation, n)
    check_budget(total, budget)
    vectors = np.empty((total, n), dtype=complex)
    labels = np.empty((total, 2 * n - 1), dtype=float)
    for ids in iter_path_blocks(trellis, budget=budget):
        labels[ids] = trellis.label_array(ids)
        vectors[ids] = constellation.snap(standard_from_signatures(labels[ids]))
    logger.debug("Standard transversal has %d members", total)
    return Transversal(
        constellation=constellation,
        n=n,
        vectors=vectors,
        signatures=labels,
        path_ids=np.arange(total, dtype=np.int64),
    )


@dataclasses.dataclass(frozen=True, eq=False)
class Codebook:
    """
    A power-of-two set of standard vectors with natural binary labels.

    Attributes
    ----------
    constellation : SqamConstellation
    n : int
        Block length.
    codewords : ndarray, shape (M, n)
    signatures : ndarray, shape (M, 2n - 1)
    path_ids : ndarray, shape (M,)
        Trellis path of each codeword.
    path_count : int
        Size of the transversal the codebook was drawn from.
    """
    constellation: SqamConstellation
    n: int
    codewords: ComplexArray
    signatures: FloatArray
    path_ids: IntArray
    path_count: int

    def __post_init__(self):
        size = len(self.codewords)
        if size < 1 or size & (size - 1):
            raise CodebookError(f"Codebook size {size} is not a power of two")
        lookup = np.full(self.path_count, -1, dtype=np.int64)
        lookup[self.path_ids] = np.arange(size)
        object.__setattr__(self, "_lookup", lookup)

    @property
    def size(self) -> int:
        return len(self.codewords)

    @property
    def bits_per_block(self) -> int:
        return floor_log2(self.size)

    @property
    def rate(self) -> float:
        """Information rate in bits per symbol."""
        return self.bits_per_block / self.n

    def index_of_path(self, path_ids: IntArray) -> IntArray:
        """Codebook index of each trellis path, -1 for paths not kept."""
        return self._lookup[np.asarray(path_ids, dtype=np.int64)]

    def message_index(self, message: str | Sequence[int]) -> int:
        if isinstance(message, str):
            bits = [int(ch) for ch in message if ch in "01"]
            if len(bits) != len(message):
                raise CodebookError(f"Message is not a bit string: {message!r}")
        else:
            bits = [int(b) for b in message]
            if any(b not in (0, 1) for b in bits):
                raise CodebookError(f"Message is not a bit sequence: {message}")
        if len(bits) != self.bits_per_block:
            raise CodebookError(
                f"Message has {len(bits)} bits, codebook takes "
                f"{self.bits_per_block}"
            )
        index = 0
        for bit in bits:
            index = 2 * index + bit
        return index

    def encode(self, message: str | Sequence[int]) -> StandardVector:
        """
        Codeword for a message of ``bits_per_block`` bits, most significant
        bit first.

        Raises
        ------
        CodebookError
            If the message has the wrong length or is not binary.
        """
        return StandardVector(tuple(self.codewords[self.message_index(message)]))

    def message_bits(self, index: int) -> str:
        if not 0 <= index < self.size:
            raise CodebookError(f"Codebook index {index} out of range")
        if not self.bits_per_block:
            return ""
        return format(index, f"0{self.bits_per_block}b")

    def decode_index(self, codeword: Sequence[complex]) -> int:
        """Index of the codeword square-law equivalent to ``codeword``, or -1."""
        sig = Signature.from_vector(codeword).as_array()
        if sig.shape[0] != self.signatures.shape[1]:
            raise CodebookError(
                f"Codeword length {len(codeword)} does not match n={self.n}"
            )
        match = np.flatnonzero(
            np.all(np.abs(self.signatures - sig) <= 1e-9, axis=1)
        )
        return int(match[0]) if match.size else -1


def select_power_of_two(transversal: Transversal) -> Codebook:
    """
    Keep the first ``2^floor(log2 |T|)`` members in lexicographic order of
    their signatures.
    """
    total = len(transversal)
    if total == 0:
        raise CodebookError("Cannot select from an empty transversal")
    size = 1 << floor_log2(total)
    # lexsort keys run last-to-first
    order = np.lexsort(transversal.signatures.T[::-1])[:size]
    logger.debug("Selected %d of %d transversal members", size, total)
    return Codebook(
        constellation=transversal.constellation,
        n=transversal.n,
        codewords=transversal.vectors[order],
        signatures=transversal.signatures[order],
        path_ids=transversal.path_ids[order],
        path_count=total,
    )


def build_codebook(
    constellation: SqamConstellation,
    n: int,
    budget: Optional[int] = ENUMERATION_BUDGET,
    trellis: Optional[Trellis] = None,
) -> Codebook:
    """Transversal followed by power-of-two selection."""
    return select_power_of_two(
        standard_transversal(constellation, n, budget=budget, trellis=trellis)
    )


CODEBOOK_COLUMNS_PREFIX = ("index",)


def codebook_table_columns(n: int) -> list[str]:
    return (
        list(CODEBOOK_COLUMNS_PREFIX)
        + [f"sig{i}" for i in range(2 * n - 1)]
        + [f"{part}{k}" for k in range(n) for part in ("re", "im")]
    )


def write_codebook_table(codebook: Codebook, path: str | Path) -> Path:
    """
    Export a codebook: one row per codeword with its signature and symbols.
    """
    columns = codebook_table_columns(codebook.n)
    rows = []
    for index, (sig, word) in enumerate(
        zip(codebook.signatures, codebook.codewords)
    ):
        symbols = np.column_stack([word.real, word.imag]).ravel()
        rows.append(dict(zip(columns, [index, *sig.tolist(), *symbols.tolist()])))
    settings = {
        "radii": list(codebook.constellation.radii),
        "n_phases": codebook.constellation.n_phases,
        "n": codebook.n,
        "size": codebook.size,
        "path_count": codebook.path_count,
    }
    return tables.write_tsv(
        tables.table_from_rows(rows, columns), path, settings=settings
    )


def read_codebook_table(path: str | Path) -> Codebook:
    """
    Import a table written by :func:`write_codebook_table`.

    Raises
    ------
    CodebookError
        If the header or columns do not describe a codebook.
    """
    header, table = tables.read_tsv(path)
    try:
        radii = tuple(float(r) for r in header["radii"].split(","))
        constellation = SqamConstellation(radii, int(header["n_phases"]))
        n = int(header["n"])
        path_count = int(header["path_count"])
    except (KeyError, ValueError) as exc:
        raise CodebookError(f"{path}: invalid codebook header") from exc

    columns = codebook_table_columns(n)
    if list(table.field_names) != columns:
        raise CodebookError(f"{path}: unexpected columns {table.field_names}")
    data = np.asarray(table.rows, dtype=float)
    if data.ndim != 2 or not len(data):
        raise CodebookError(f"{path}: no codewords")
    signatures = data[:, 1:2 * n]
    parts = data[:, 2 * n:]
    codewords = parts[:, 0::2] + 1j * parts[:, 1::2]

    trellis = build_trellis(constellation, n)
    return Codebook(
        constellation=constellation,
        n=n,
        codewords=codewords,
        signatures=signatures,
        path_ids=path_ids_of_signatures(trellis, signatures),
        path_count=path_count,
    )


def path_ids_of_signatures(trellis: Trellis, signatures: FloatArray) -> IntArray:
    """Trellis path index of each signature, by walking its labels."""
    energies = trellis.energies
    signatures = np.asarray(signatures, dtype=float)
    rings = np.argmin(
        np.abs(signatures[:, 0::2, np.newaxis] - energies), axis=-1
    )
    labels = trellis.psi_table[rings[:, :-1], rings[:, 1:]]
    choices = np.argmin(
        np.abs(labels - signatures[:, 1::2, np.newaxis]), axis=-1
    )
    digits = np.empty_like(rings)
    digits[:, 0] = rings[:, 0]
    for ell in range(1, trellis.n):
        src = rings[:, ell - 1]
        match = (
            (trellis.out_dst[src] == rings[:, ell, np.newaxis])
            & (trellis.out_choice[src] == choices[:, ell - 1, np.newaxis])
        )
        digits[:, ell] = np.argmax(match, axis=1)
    return trellis.path_ids(digits)
