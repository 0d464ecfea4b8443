"""
Exception hierarchy for tukeysim.

Errors that describe bad input also derive from ``ValueError``.
"""
from __future__ import annotations


class TukeySimError(Exception):
    """Base class for all tukeysim errors."""


class ConstellationError(TukeySimError, ValueError):
    """Invalid constellation geometry."""


class SignatureError(TukeySimError, ValueError):
    """A signature that no symbol sequence can produce."""


class TrellisBudgetError(TukeySimError):
    """Path enumeration would exceed the configured budget."""

    def __init__(self, path_count: int, budget: int):
        self.path_count = path_count
        self.budget = budget
        super().__init__(
            f"Trellis has {path_count} paths, above the enumeration budget "
            f"of {budget}"
        )


class CodebookError(TukeySimError, ValueError):
    """Invalid message or codebook table."""


class LinkConfigError(TukeySimError, ValueError):
    """Invalid physical link parameters."""


class GridError(TukeySimError, ValueError):
    """The waveform grid cannot represent the requested block."""


class InfeasibleLaunchPowerError(TukeySimError):
    """The requested launch power is above the modulator saturation ceiling."""

    def __init__(self, target_dbm: float, ceiling_dbm: float):
        self.target_dbm = target_dbm
        self.ceiling_dbm = ceiling_dbm
        super().__init__(
            f"Launch power {target_dbm:.2f} dBm is infeasible; the modulator "
            f"saturation ceiling is {ceiling_dbm:.2f} dBm"
        )


class ConfigError(TukeySimError, ValueError):
    """Experiment configuration failed validation."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


class CalibrationError(TukeySimError):
    """The drive search could not reach the requested launch power."""

    def __init__(self, target_dbm: float, reason: str):
        self.target_dbm = target_dbm
        super().__init__(
            f"Cannot calibrate the drive to {target_dbm:.2f} dBm: {reason}"
        )
