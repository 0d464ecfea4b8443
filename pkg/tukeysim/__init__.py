from . import log, utils
from .codebook import Codebook, build_codebook, max_rate
from .decoder import (EdgeStatistics, LevelStatistics, brute_force_ml,
                      viterbi_decode)
from .enums import Band, ExperimentKind, Fidelity, LabelEnum
from .errors import TukeySimError
from .phy import LinkConfig, fast_channel, transmit_waveform
from .sqam import SqamConstellation, Signature, StandardVector
from .trellis import Trellis, build_trellis
from .version import __version__  # noqa: F401

__all__ = [
    "Band",
    "Codebook",
    "EdgeStatistics",
    "ExperimentKind",
    "Fidelity",
    "LabelEnum",
    "LevelStatistics",
    "LinkConfig",
    "Signature",
    "SqamConstellation",
    "StandardVector",
    "Trellis",
    "TukeySimError",
    "brute_force_ml",
    "build_codebook",
    "build_trellis",
    "fast_channel",
    "log",
    "max_rate",
    "transmit_waveform",
    "utils",
    "viterbi_decode",
]
