from .. import __version__
from ..version import UNKNOWN_VERSION, VersionProxy


def test_first_source_wins():
    calls = []

    def missing():
        calls.append("missing")
        return None

    def found():
        calls.append("found")
        return "1.2.3"

    def never():
        calls.append("never")
        return "9.9.9"

    version = VersionProxy(sources=[missing, found, never])
    assert version == "1.2.3"
    assert str(version) == "1.2.3"
    assert calls == ["missing", "found"]


def test_resolved_once():
    calls = []

    def source():
        calls.append(1)
        return "0.1.0"

    version = VersionProxy(sources=[source])
    assert version.startswith("0.1")
    assert version == "0.1.0"
    assert len(calls) == 1


def test_fallback():
    assert VersionProxy(sources=[]) == UNKNOWN_VERSION


def test_package_version():
    assert len(str(__version__)) > 0
