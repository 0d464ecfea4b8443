from __future__ import annotations

import enum
from typing import Iterable, Optional, Union

EnumId = Union[enum.Enum, int, str]


def _by_name(members: Iterable[enum.Enum], key: str) -> Optional[enum.Enum]:
    """Member whose name matches ``key`` ignoring case and dashes."""
    wanted = key.replace("-", "_").lower()
    for item in members:
        if item.name.lower() == wanted:
            return item
    return None


class LabelEnumMeta(enum.EnumMeta):
    """Member lookup by name ignores case, and dashes stand for underscores."""

    def __getattr__(self, key: EnumId) -> enum.Enum:
        if isinstance(key, str) and not key.startswith("_"):
            item = _by_name(self, key)
            if item is not None:
                return item
        return super().__getattr__(key)

    def __getitem__(self, key: EnumId) -> enum.Enum:
        if isinstance(key, str):
            item = _by_name(self, key)
            if item is not None:
                return item
        return super().__getitem__(key)


class LabelEnum(enum.IntEnum, metaclass=LabelEnumMeta):
    """
    Option enum read from configuration files and the command line.

    Members are spelled with underscores in code and with dashes in files.
    """

    @classmethod
    def from_any(cls, identifier: EnumId) -> LabelEnum:
        """
        Member named, numbered or given by ``identifier``.

        Raises
        ------
        ValueError
            If no member matches.
        """
        try:
            return cls[identifier]
        except KeyError:
            return cls(identifier)

    @classmethod
    def exclude(cls, identifiers: Iterable[EnumId]) -> set[LabelEnum]:
        """Every member except the ones identified."""
        dropped = {cls.from_any(ident) for ident in identifiers}
        return set(cls) - dropped

    @property
    def label(self) -> str:
        """The external (dashed) spelling of the member name."""
        return self.name.replace("_", "-")


class Band(LabelEnum):
    """Optical transmission band."""
    C = 1
    O = 2  # noqa: E741


class Fidelity(LabelEnum):
    """Channel simulation fidelity."""
    waveform = 1
    fast = 2


class SectionKind(LabelEnum):
    """Trellis section type, matching the integrate-and-dump interval."""
    isi_free = 1
    isi_present = 2


class ExperimentKind(LabelEnum):
    """Experiments runnable from a configuration file."""
    ber = 1
    rate = 2
    imdd = 3
    ring_search = 4
    oband = 5
    bandwidth = 6
    codebook_export = 7
    laser_power = 8
