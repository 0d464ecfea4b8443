"""
Package version, resolved on first use.

Run manifests and table headers record the version, so a development
checkout reports its exact commit rather than the last build.
"""
from __future__ import annotations

import importlib.metadata
from collections import UserString
from pathlib import Path
from typing import Callable, Optional

UNKNOWN_VERSION = "0.0.unknown"
DISTRIBUTION = "tukeysim"


def _from_checkout() -> Optional[str]:
    repo_root = Path(__file__).resolve().parent.parent
    markers = (repo_root / ".git", repo_root / ".git_archival.txt")
    if not any(marker.exists() for marker in markers):
        return None
    try:
        from setuptools_scm import get_version
    except ImportError:
        return None
    try:
        return get_version(root=str(repo_root))
    except LookupError:
        return None


def _from_build() -> Optional[str]:
    try:
        from ._version import version
    except ImportError:
        return None
    return version


def _from_metadata() -> Optional[str]:
    try:
        return importlib.metadata.version(DISTRIBUTION)
    except importlib.metadata.PackageNotFoundError:
        return None


#: Tried in order; the first non-empty answer wins.
VERSION_SOURCES: tuple[Callable[[], Optional[str]], ...] = (
    _from_checkout,
    _from_build,
    _from_metadata,
)


class VersionProxy(UserString):
    """
    A string that looks up the tukeysim version the first time it is read.

    Sources are a git checkout (through setuptools-scm), the ``_version.py``
    written at build time, then installed distribution metadata.  Falls back
    to ``0.0.unknown``.
    """

    def __init__(self, sources=VERSION_SOURCES):
        self._sources = tuple(sources)
        self._version: Optional[str] = None

    @property
    def data(self) -> str:
        if self._version is None:
            found = (source() for source in self._sources)
            self._version = next((v for v in found if v), UNKNOWN_VERSION)
        return self._version


__version__ = version = VersionProxy()
