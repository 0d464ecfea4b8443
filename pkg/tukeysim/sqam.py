"""
Star-QAM constellations and the square-law signature algebra.

A direct-detection receiver with Tukey signalling observes, for a block
``x_0 .. x_{n-1}``, only the interval energies

    |x_0|^2, psi(x_0, x_1), |x_1|^2, ..., psi(x_{n-2}, x_{n-1}), |x_{n-1}|^2

which is the *signature* of the block.  Two blocks with equal signatures
are square-law equivalent and cannot be told apart.  Every equivalence
class has exactly one *standard* member: its first symbol is a positive
real and every phase increment lies in ``[0, pi]``.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Sequence

import numpy as np

from .errors import ConstellationError, SignatureError
from .type_hints import ComplexArray, FloatArray, IntArray

logger = logging.getLogger(__name__)

#: Absolute tolerance for comparing signatures of unit-scale constellations.
SIGNATURE_ATOL = 1e-9
#: Distance from +-1 within which an arccos argument is clamped.
ARCCOS_CLAMP = 1e-9
#: Significant digits kept when canonicalizing labels.
CANONICAL_DIGITS = 12


def canonicalize(values: float | Sequence[float]) -> float | list[float]:
    """Round to 12 significant digits so float residue cannot split labels."""
    if np.ndim(values) == 0:
        return float(f"{float(values):.{CANONICAL_DIGITS}g}")
    return [canonicalize(value) for value in values]


def phase_count_classes(n_phases: int) -> int:
    """
    Number of distinct ``cos`` values of a phase difference on the grid.

    This is ``ceil((n_p + 1) / 2)``: the parallel-edge count of the trellis.
    """
    return n_phases // 2 + 1


@dataclasses.dataclass(frozen=True)
class SqamConstellation:
    """
    Star QAM: ``n_r`` rings crossed with ``n_p`` uniformly spaced rays.

    Parameters
    ----------
    radii : tuple of float
        Distinct positive ring radii, stored in ascending order.
    n_phases : int
        Number of phases; point ``(j, m)`` is ``radii[j] * exp(2j pi m/n_p)``.
    """
    radii: tuple[float, ...]
    n_phases: int

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if not radii:
            raise ConstellationError("A constellation needs at least one ring")
        if any(not math.isfinite(r) or r <= 0.0 for r in radii):
            raise ConstellationError(f"Ring radii must be positive: {radii}")
        if len(set(canonicalize(radii))) != len(radii):
            raise ConstellationError(f"Ring radii must be distinct: {radii}")
        if int(self.n_phases) != self.n_phases or self.n_phases < 1:
            raise ConstellationError(
                f"n_phases must be a positive integer, got {self.n_phases}"
            )
        object.__setattr__(self, "radii", tuple(sorted(radii)))
        object.__setattr__(self, "n_phases", int(self.n_phases))

    @property
    def n_rings(self) -> int:
        return len(self.radii)

    @property
    def size(self) -> int:
        return self.n_rings * self.n_phases

    @property
    def parallel_edges(self) -> int:
        """``ceil((n_p + 1) / 2)``, the size of each psi set."""
        return phase_count_classes(self.n_phases)

    @property
    def radii_array(self) -> FloatArray:
        return np.asarray(self.radii, dtype=float)

    @property
    def phases(self) -> ComplexArray:
        """The unit phasors ``exp(i 2 pi m / n_p)``."""
        return np.exp(2j * np.pi * np.arange(self.n_phases) / self.n_phases)

    def ring(self, j: int) -> ComplexArray:
        """All points on ring ``j`` (the set D_j)."""
        if not 0 <= j < self.n_rings:
            raise IndexError(f"Ring index {j} out of range [0, {self.n_rings})")
        return self.radii[j] * self.phases

    def points(self) -> ComplexArray:
        """All ``n_r * n_p`` points, ring-major."""
        return (self.radii_array[:, np.newaxis] * self.phases).ravel()

    def indices(self, x: ComplexArray) -> tuple[IntArray, IntArray]:
        """
        Nearest (ring, phase) indices of each entry of ``x``.

        Returns
        -------
        rings, phases : ndarray of int
        """
        x = np.asarray(x, dtype=complex)
        rings = np.argmin(
            np.abs(np.abs(x)[..., np.newaxis] - self.radii_array), axis=-1
        )
        step = 2.0 * np.pi / self.n_phases
        phases = np.rint(np.angle(x) / step).astype(int) % self.n_phases
        return rings, phases

    def snap(self, x: ComplexArray) -> ComplexArray:
        """Replace each entry of ``x`` by its nearest constellation point."""
        rings, phases = self.indices(x)
        return self.radii_array[rings] * self.phases[phases]

    def mean_energy(self) -> float:
        return float(np.mean(self.radii_array ** 2))


@dataclasses.dataclass(frozen=True)
class Signature:
    """
    The observable interval energies of one block.

    Even entries are ``|x_k|^2``; odd entries are ``psi(x_l, x_{l+1})``.
    """
    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) % 2 != 1:
            raise SignatureError(
                f"Signature length must be odd, got {len(values)}"
            )
        if any(v < 0.0 for v in values):
            raise SignatureError(f"Signature entries must be >= 0: {values}")
        for ell in range(len(values) // 2):
            _phi_argument(*values[2 * ell:2 * ell + 3])

    @classmethod
    def from_vector(cls, x: Sequence[complex]) -> Signature:
        return cls(tuple(signature(x)))

    @property
    def n(self) -> int:
        """Block length."""
        return (len(self.values) + 1) // 2

    @property
    def ring_energies(self) -> tuple[float, ...]:
        return self.values[::2]

    @property
    def cross_energies(self) -> tuple[float, ...]:
        return self.values[1::2]

    def as_array(self) -> FloatArray:
        return np.asarray(self.values, dtype=float)

    def isclose(self, other: Signature, atol: float = SIGNATURE_ATOL) -> bool:
        return len(self.values) == len(other.values) and bool(
            np.allclose(self.values, other.values, rtol=0.0, atol=atol)
        )


@dataclasses.dataclass(frozen=True)
class StandardVector:
    """A block whose first symbol is a positive real and whose phase
    increments all lie in [0, pi]."""
    symbols: tuple[complex, ...]

    def __post_init__(self):
        symbols = tuple(complex(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if not is_standard(symbols):
            raise SignatureError(f"Not a standard vector: {symbols}")

    @property
    def n(self) -> int:
        return len(self.symbols)

    def as_array(self) -> ComplexArray:
        return np.asarray(self.symbols, dtype=complex)

    def signature(self) -> Signature:
        return Signature.from_vector(self.symbols)


def psi(a, b):
    """
    Energy of the overlap interval between adjacent symbols ``a`` and ``b``.

    ``psi(a, b) = |a + b|^2 / 4 + |a - b|^2 / 8``, which depends only on the
    magnitudes and the cosine of the phase difference.  Works elementwise on
    arrays.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    value = 0.25 * np.abs(a + b) ** 2 + 0.125 * np.abs(a - b) ** 2
    return float(value) if value.ndim == 0 else value


def psi_from_magnitudes(amp_a, amp_b, cos_phase):
    """``psi`` from magnitudes and the cosine of the phase difference."""
    return 0.375 * (amp_a ** 2 + amp_b ** 2) + 0.25 * amp_a * amp_b * cos_phase


def signatures(x: ComplexArray) -> FloatArray:
    """
    Signatures of a batch of blocks.

    Parameters
    ----------
    x : ndarray, shape (..., n)

    Returns
    -------
    sig : ndarray, shape (..., 2n - 1)
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if n < 2:
        raise SignatureError(f"Signatures need a block length >= 2, got {n}")
    out = np.empty(x.shape[:-1] + (2 * n - 1,), dtype=float)
    out[..., 0::2] = np.abs(x) ** 2
    out[..., 1::2] = psi(x[..., :-1], x[..., 1:])
    return out


def signature(x: Sequence[complex]) -> FloatArray:
    """Signature of a single block of length ``n >= 2``."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1:
        raise SignatureError("signature() takes one block; use signatures()")
    return signatures(x)


def _phi_argument(zeta_a: float, zeta: float, zeta_b: float) -> float:
    """The clamped arccos argument for energies (|a|^2, psi, |b|^2)."""
    amp = 2.0 * math.sqrt(zeta_a * zeta_b)
    if amp == 0.0:
        return 1.0
    argument = (8.0 * zeta - 3.0 * (zeta_a + zeta_b)) / amp
    if abs(argument) > 1.0 + ARCCOS_CLAMP:
        raise SignatureError(
            f"Inconsistent signature triple ({zeta_a}, {zeta}, {zeta_b}): "
            f"cosine {argument} outside [-1, 1]"
        )
    return min(1.0, max(-1.0, argument))


def phi(zeta: float, a: float, b: float) -> float:
    """
    Phase difference in ``[0, pi]`` of two symbols with magnitudes ``a``
    and ``b`` whose overlap energy is ``zeta``.

    Raises
    ------
    SignatureError
        If no phase difference produces ``zeta``.
    """
    if a <= 0.0 or b <= 0.0:
        raise SignatureError(f"phi needs positive magnitudes, got {a}, {b}")
    return math.acos(_phi_argument(a * a, zeta, b * b))


def standard_from_signatures(sig: FloatArray) -> ComplexArray:
    """
    Inverse signature map for a batch.

    The first symbol is ``sqrt(zeta_0)``; each next symbol has magnitude
    ``sqrt(zeta_{2l+2})`` and is rotated from the previous one by
    ``phi(zeta_{2l+1}, |s_l|, |s_{l+1}|)``.

    Parameters
    ----------
    sig : ndarray, shape (..., 2n - 1)

    Returns
    -------
    s : ndarray, shape (..., n)
        The standard member of each signature class.
    """
    sig = np.asarray(sig, dtype=float)
    if sig.shape[-1] % 2 != 1:
        raise SignatureError(f"Signature length must be odd: {sig.shape}")
    energies = sig[..., 0::2]
    if np.any(energies <= 0.0):
        raise SignatureError("Standard vectors need nonzero symbol energies")
    radii = np.sqrt(energies)
    cos_phase = (
        8.0 * sig[..., 1::2] - 3.0 * (energies[..., :-1] + energies[..., 1:])
    ) / (2.0 * radii[..., :-1] * radii[..., 1:])
    if np.any(np.abs(cos_phase) > 1.0 + ARCCOS_CLAMP):
        raise SignatureError("Inconsistent signature: cosine outside [-1, 1]")
    steps = np.arccos(np.clip(cos_phase, -1.0, 1.0))
    theta = np.zeros_like(radii)
    theta[..., 1:] = np.cumsum(steps, axis=-1)
    return radii * np.exp(1j * theta)


def standard_from_signature(sig: Signature | Sequence[float]) -> StandardVector:
    """The unique standard vector with signature ``sig``."""
    if not isinstance(sig, Signature):
        sig = Signature(tuple(sig))
    return StandardVector(tuple(standard_from_signatures(sig.as_array())))


def is_square_law_equivalent(
    x: Sequence[complex],
    other: Sequence[complex],
    atol: float = SIGNATURE_ATOL,
) -> bool:
    """True if the two blocks have the same signature."""
    x = np.asarray(x, dtype=complex)
    other = np.asarray(other, dtype=complex)
    if x.shape != other.shape:
        raise ValueError(
            f"Block lengths differ: {x.shape} vs {other.shape}"
        )
    return bool(
        np.allclose(signature(x), signature(other), rtol=0.0, atol=atol)
    )


def is_standard(x: Sequence[complex], atol: float = SIGNATURE_ATOL) -> bool:
    """True if ``x`` is the standard member of its class."""
    x = np.asarray(x, dtype=complex)
    if x.size == 0 or x[0].real <= 0.0 or abs(x[0].imag) > atol:
        return False
    if np.any(np.abs(x) == 0.0):
        return False
    steps = np.angle(x[1:] * np.conj(x[:-1])) % (2.0 * np.pi)
    # a step of 2 pi - tiny is a zero step seen through rounding
    steps = np.where(steps > 2.0 * np.pi - 1e-7, 0.0, steps)
    return bool(np.all(steps <= np.pi + 1e-7))


def asymptotic_rate(n_rings: int, n_phases: int) -> float:
    """Square-law rate limit ``log2(n_r * ceil((n_p + 1) / 2))`` b/sym."""
    return math.log2(n_rings * phase_count_classes(n_phases))


def coherent_rate(n_rings: int, n_phases: int) -> float:
    """Rate of the same constellation under coherent detection."""
    return math.log2(n_rings * n_phases)


def rate_gap(n_rings: int, n_phases: int) -> float:
    """
    Asymptotic rate lost to square-law detection, in b/sym.

    Zero for ``n_p <= 2``, where ``ceil((n_p + 1) / 2) == n_p`` so square-law
    detection still tells every phase class apart.  Strictly between 0 and
    1 otherwise.
    """
    return coherent_rate(n_rings, n_phases) - asymptotic_rate(
        n_rings, n_phases
    )
