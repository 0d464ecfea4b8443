import collections
import itertools
import math

import numpy as np
import pytest

from ..errors import ConstellationError, SignatureError
from ..sqam import (Signature, SqamConstellation, StandardVector, canonicalize,
                    is_square_law_equivalent, is_standard, phi, psi,
                    psi_from_magnitudes, rate_gap, signature, signatures,
                    standard_from_signature, standard_from_signatures)


@pytest.mark.parametrize(
    ("a", "b", "expected"),
    [
        (1, 1, 1.0),
        (1, -1, 0.5),
        (1, 1j, 0.75),
        (2, 0, 1.5),
        (0, 0, 0.0),
    ],
)
def test_psi_examples(a, b, expected):
    assert psi(a, b) == pytest.approx(expected)


def test_psi_from_magnitudes(rng):
    a = rng.normal(size=50) + 1j * rng.normal(size=50)
    b = rng.normal(size=50) + 1j * rng.normal(size=50)
    cos_phase = np.cos(np.angle(b) - np.angle(a))
    np.testing.assert_allclose(
        psi_from_magnitudes(np.abs(a), np.abs(b), cos_phase), psi(a, b)
    )


@pytest.mark.parametrize("step", [0.0, 0.4, 1.0, 2.5, math.pi])
def test_phi_recovers_phase_step(step):
    a, b = 2.0, 3.0
    zeta = psi(a, b * np.exp(1j * step))
    assert phi(zeta, a, b) == pytest.approx(step, abs=1e-6)
    # the negative step has the same overlap energy
    assert phi(psi(a, b * np.exp(-1j * step)), a, b) == pytest.approx(step, abs=1e-6)


def test_phi_rejects_inconsistent_energy():
    with pytest.raises(SignatureError):
        phi(10.0, 1.0, 1.0)
    with pytest.raises(SignatureError):
        phi(1.0, 0.0, 1.0)


def test_signature_layout():
    x = [1.0, 1j, -2.0]
    sig = signature(x)
    assert sig.shape == (5,)
    np.testing.assert_allclose(sig[0::2], [1.0, 1.0, 4.0])
    np.testing.assert_allclose(sig[1::2], [psi(1.0, 1j), psi(1j, -2.0)])


def test_signatures_need_two_symbols():
    with pytest.raises(SignatureError):
        signatures(np.ones((4, 1)))


def test_signature_invariances(small_constellation, rng):
    points = small_constellation.points()
    x = points[rng.integers(len(points), size=(20, 5))]
    sig = signatures(x)
    np.testing.assert_allclose(signatures(x * np.exp(0.7j)), sig, atol=1e-9)
    np.testing.assert_allclose(signatures(np.conj(x)), sig, atol=1e-9)


def test_inverse_map(small_constellation, rng):
    points = small_constellation.points()
    x = points[rng.integers(len(points), size=(50, 4))]
    sig = signatures(x)
    standard = standard_from_signatures(sig)
    np.testing.assert_allclose(signatures(standard), sig, atol=1e-9)
    assert all(is_standard(row) for row in standard)
    # standard vectors of a constellation stay on the constellation
    np.testing.assert_allclose(
        small_constellation.snap(standard), standard, atol=1e-6
    )


@pytest.mark.parametrize(
    ("n_rings", "n_phases", "n"),
    [(2, 3, 3), (2, 4, 3), (3, 2, 3), (1, 5, 3), (2, 6, 2)],
)
def test_one_standard_vector_per_class(n_rings, n_phases, n):
    constellation = SqamConstellation(
        tuple(1.0 + 0.7 * j for j in range(n_rings)), n_phases
    )
    classes = collections.defaultdict(list)
    for x in itertools.product(constellation.points(), repeat=n):
        classes[tuple(canonicalize(signature(x)))].append(x)

    expected = constellation.parallel_edges ** (n - 1) * n_rings ** n
    assert len(classes) == expected
    for members in classes.values():
        assert sum(is_standard(x) for x in members) == 1


def test_signature_validation():
    Signature((1.0, 1.0, 1.0))
    with pytest.raises(SignatureError):
        Signature((1.0, 1.0))
    with pytest.raises(SignatureError):
        Signature((1.0, -1.0, 1.0))
    with pytest.raises(SignatureError):
        Signature((1.0, 50.0, 1.0))


def test_signature_accessors():
    sig = Signature.from_vector([1.0, 2.0j])
    assert sig.n == 2
    assert sig.ring_energies == pytest.approx((1.0, 4.0))
    assert sig.cross_energies == pytest.approx((psi(1.0, 2.0j),))
    assert sig.isclose(Signature.from_vector([1j, -2.0]))
    assert not sig.isclose(Signature.from_vector([1.0, 2.0]))


def test_standard_from_signature():
    vector = standard_from_signature(Signature.from_vector([-1j, 2.0, 2.0j]))
    assert isinstance(vector, StandardVector)
    assert vector.n == 3
    np.testing.assert_allclose(vector.as_array(), [1.0, 2j, -2.0], atol=1e-9)


def test_standard_vector_validation():
    StandardVector((1.0, 1j))
    with pytest.raises(SignatureError):
        StandardVector((-1.0, 1.0))
    with pytest.raises(SignatureError):
        StandardVector((1.0, -1j))


def test_square_law_equivalence():
    assert is_square_law_equivalent([1.0, 1j], [1j, -1.0])
    assert is_square_law_equivalent([1.0, 1j], [1.0, -1j])
    assert not is_square_law_equivalent([1.0, 1j], [1.0, -1.0])
    with pytest.raises(ValueError):
        is_square_law_equivalent([1.0, 1j], [1.0, 1j, 1.0])


def test_constellation_validation():
    constellation = SqamConstellation((3.0, 1.0), 4)
    assert constellation.radii == (1.0, 3.0)
    assert constellation.size == 8
    assert constellation.parallel_edges == 3
    with pytest.raises(ConstellationError):
        SqamConstellation((1.0, 1.0), 4)
    with pytest.raises(ConstellationError):
        SqamConstellation((0.0, 1.0), 4)
    with pytest.raises(ConstellationError):
        SqamConstellation((1.0,), 0)
    with pytest.raises(IndexError):
        constellation.ring(2)


def test_snap_and_indices():
    constellation = SqamConstellation((1.0, 2.0), 4)
    rings, phases = constellation.indices([1.1 + 0.1j, -0.1 + 1.9j])
    assert rings.tolist() == [0, 1]
    assert phases.tolist() == [0, 1]
    np.testing.assert_allclose(
        constellation.snap([1.1 + 0.1j, -0.1 + 1.9j]), [1.0, 2j], atol=1e-12
    )


@pytest.mark.parametrize("n_phases", range(2, 17))
@pytest.mark.parametrize("n_rings", [1, 2, 5, 16])
def test_rate_gap_bounds(n_rings, n_phases):
    gap = rate_gap(n_rings, n_phases)
    assert 0.0 <= gap < 1.0
    if n_phases >= 3:
        assert gap > 0.0
    else:
        assert gap == 0.0
