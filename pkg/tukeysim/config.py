"""
Experiment configuration files.

An experiment is described by one YAML document.  Every key is checked
against a fixed schema; problems are collected and reported together as
``"<dotted.key>: <problem>"`` lines.

Example::

    experiment: ber
    seed: 1
    constellation:
      rings: 2
      phases: 2
      delta: 0.2
    block_length: 7
    link:
      symbol_rate: 50.0e+9
      laser_power_dbm: 1.0
    sweep:
      launch_dbm: {start: -16, stop: -10, step: 1}
      blocks: 100000
"""
from __future__ import annotations

import copy
import dataclasses
import logging
import math
import os
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import yaml

from .codebook import ring_spacing_radii
from .enums import Band, ExperimentKind, Fidelity
from .errors import ConfigError, ConstellationError, LinkConfigError
from .harness import SweepSpec
from .phy import LinkConfig
from .sqam import SqamConstellation
from .utils import db_per_km_to_rho, dispersion_to_beta2

logger = logging.getLogger(__name__)

#: Environment variable naming the default output directory.
OUTPUT_DIR_ENV = "TUKEYSIM_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

_MISSING = object()


def _as_int(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ValueError(f"expected an integer, got {value!r}")
    number = float(value)
    if not number.is_integer():
        raise ValueError(f"expected an integer, got {value!r}")
    return int(number)


def _as_float(value: Any) -> float:
    # pyyaml reads exponents without a decimal point (50e9) as strings
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ValueError(f"expected a number, got {value!r}")
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"expected a number, got {value!r}") from None


def _as_bool(value: Any) -> bool:
    if not isinstance(value, bool):
        raise ValueError(f"expected true or false, got {value!r}")
    return value


def _as_str(value: Any) -> str:
    if not isinstance(value, str) or not value:
        raise ValueError(f"expected a non-empty string, got {value!r}")
    return value


def _positive(parse: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def check(value: Any) -> Any:
        value = parse(value)
        if not value > 0:
            raise ValueError(f"must be positive, got {value}")
        return value
    return check


def _nonnegative(parse: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def check(value: Any) -> Any:
        value = parse(value)
        if not value >= 0:
            raise ValueError(f"must be nonnegative, got {value}")
        return value
    return check


def _list_of(parse: Callable[[Any], Any]) -> Callable[[Any], list]:
    def check(value: Any) -> list:
        if not isinstance(value, (list, tuple)) or not value:
            raise ValueError(f"expected a non-empty list, got {value!r}")
        return [parse(item) for item in value]
    return check


def _enum(enum_cls) -> Callable[[Any], Any]:
    def check(value: Any):
        try:
            return enum_cls.from_any(value)
        except (KeyError, TypeError, ValueError):
            choices = ", ".join(item.label for item in enum_cls)
            raise ValueError(
                f"unknown value {value!r}, expected one of: {choices}"
            ) from None
    return check


def launch_grid(value: Any) -> list[float]:
    """
    A list of launch powers, or ``{start, stop, step}`` with ``stop``
    included.
    """
    if isinstance(value, dict):
        unknown = set(value) - {"start", "stop", "step"}
        if unknown:
            raise ValueError(f"unknown keys {sorted(unknown)}")
        try:
            start = _as_float(value["start"])
            stop = _as_float(value["stop"])
            step = _as_float(value["step"])
        except KeyError as ex:
            raise ValueError(f"missing {ex.args[0]!r}") from None
        if not step > 0 or stop < start:
            raise ValueError("needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    powers = _list_of(_as_float)(value)
    if powers != sorted(powers):
        raise ValueError("launch powers must be ascending")
    return powers


@dataclasses.dataclass(frozen=True)
class Field:
    """One schema entry: a parser and an optional default."""
    parse: Callable[[Any], Any]
    default: Any = _MISSING

    @property
    def required(self) -> bool:
        return self.default is _MISSING


_LINK_FIELDS = {
    "band": Field(_enum(Band), Band.C),
    "length_km": Field(_nonnegative(_as_float), 10.0),
    "rho": Field(_nonnegative(_as_float), None),
    "loss_db_per_km": Field(_nonnegative(_as_float), None),
    "beta2": Field(_as_float, None),
    "dispersion_ps_nm_km": Field(_as_float, None),
    "beta0": Field(_as_float, 0.0),
    "beta1": Field(_as_float, 0.0),
    "symbol_rate": Field(_positive(_as_float), 50e9),
    "rolloff": Field(_as_float, 0.5),
    "laser_power_dbm": Field(_as_float, 1.0),
    "kappa": Field(_positive(_as_float), 1.0),
    "responsivity": Field(_positive(_as_float), 0.75),
    "temperature_k": Field(_positive(_as_float), 300.0),
    "load_resistance": Field(_positive(_as_float), 300.0),
    "precompensate": Field(_as_bool, None),
    "noise_scale": Field(_nonnegative(_as_float), 1.0),
    "wavelength_nm": Field(_positive(_as_float), None),
}

SCHEMA: dict[str, Any] = {
    "experiment": Field(_enum(ExperimentKind)),
    "seed": Field(_nonnegative(_as_int), 0),
    "block_length": Field(_positive(_as_int), None),
    "constellation": {
        "rings": Field(_positive(_as_int), None),
        "phases": Field(_positive(_as_int), None),
        "delta": Field(_positive(_as_float), None),
        "radii": Field(_list_of(_positive(_as_float)), None),
    },
    "link": _LINK_FIELDS,
    "sweep": {
        "launch_dbm": Field(launch_grid, None),
        "blocks": Field(_positive(_as_int), 100_000),
        "min_error_events": Field(_nonnegative(_as_int), 100),
        "batch_size": Field(_positive(_as_int), 1000),
        "fidelity": Field(_enum(Fidelity), Fidelity.waveform),
        "threads": Field(_positive(_as_int), 1),
        "calibration_blocks": Field(_positive(_as_int), 1000),
        "per_sample_noise": Field(_as_bool, False),
    },
    "imdd": {
        "levels": Field(_list_of(_positive(_as_int)), [4, 8]),
        "block_length": Field(_positive(_as_int), 8),
    },
    "ring_search": {
        "deltas": Field(_list_of(_positive(_as_float)), None),
    },
    "oband": {
        "dispersions": Field(_list_of(_as_float), [-1.0, 1.0]),
    },
    "laser_power": {
        "laser_dbm": Field(_list_of(_as_float), None),
    },
    "bandwidth": {
        "betas": Field(_list_of(_as_float), [0.5, 0.9]),
        "fraction": Field(_as_float, 0.95),
    },
    "output": {
        "name": Field(_as_str, None),
        "directory": Field(_as_str, None),
    },
}

#: Experiments that need a constellation and a block length.
NEEDS_CODEBOOK = ExperimentKind.exclude(
    [ExperimentKind.imdd, ExperimentKind.bandwidth]
)
#: Experiments that sweep launch power.
NEEDS_SWEEP = ExperimentKind.exclude(
    [ExperimentKind.bandwidth, ExperimentKind.codebook_export]
)


def _validate_section(
    data: Any,
    schema: dict[str, Any],
    prefix: str,
    problems: list[str],
) -> dict[str, Any]:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        problems.append(f"{prefix or '<root>'}: expected a mapping")
        data = {}
    result = {}
    for key in data:
        if key not in schema:
            problems.append(f"{prefix}{key}: unknown key")
    for key, entry in schema.items():
        dotted = f"{prefix}{key}"
        if isinstance(entry, dict):
            result[key] = _validate_section(
                data.get(key), entry, f"{dotted}.", problems
            )
            continue
        if key not in data or data[key] is None:
            if entry.required:
                problems.append(f"{dotted}: required")
            result[key] = None if entry.required else entry.default
            continue
        try:
            result[key] = entry.parse(data[key])
        except ValueError as ex:
            problems.append(f"{dotted}: {ex}")
            result[key] = None if entry.required else entry.default
    return result


def apply_overrides(data: dict, overrides: Sequence[str]) -> list[str]:
    """
    Apply ``dotted.key=value`` overrides in place.

    Values are parsed as YAML scalars.  Returns the problems found.
    """
    problems = []
    for override in overrides:
        key, sep, text = override.partition("=")
        if not sep or not key:
            problems.append(f"{override}: override must look like key=value")
            continue
        parts = key.strip().split(".")
        target = data
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                problems.append(f"{key}: {part} is not a mapping")
                break
            target = node
        else:
            try:
                target[parts[-1]] = yaml.safe_load(text)
            except yaml.YAMLError as ex:
                problems.append(f"{key}: cannot parse {text!r} ({ex})")
    return problems


def _plain(value: Any) -> Any:
    """Resolved config values as YAML-safe builtins."""
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if hasattr(value, "label"):
        return value.label
    return value


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """
    A validated experiment description.

    Attributes
    ----------
    kind : ExperimentKind
    seed : int
    settings : dict
        The fully resolved configuration, defaults filled in.
    source : Path or None
        File the configuration came from.
    """
    kind: ExperimentKind
    seed: int
    settings: dict[str, Any]
    source: Optional[Path] = None

    @classmethod
    def from_dict(
        cls,
        data: Any,
        overrides: Sequence[str] = (),
        source: Optional[Path] = None,
    ) -> ExperimentConfig:
        """
        Validate a configuration mapping.

        Raises
        ------
        ConfigError
            With one diagnostic per problem.
        """
        data = copy.deepcopy(data)
        problems = []
        if isinstance(data, dict):
            problems.extend(apply_overrides(data, overrides))
        settings = _validate_section(data, SCHEMA, "", problems)
        if not problems:
            _check_consistency(settings, problems)
        if problems:
            raise ConfigError(problems)
        config = cls(
            kind=settings["experiment"],
            seed=settings["seed"],
            settings=settings,
            source=source,
        )
        # build everything once so that physical errors surface here
        try:
            if config.kind == ExperimentKind.ring_search:
                for delta in settings["ring_search"]["deltas"]:
                    config.constellation(delta=delta)
            elif config.kind in NEEDS_CODEBOOK:
                config.constellation()
            config.link_config()
        except (ConstellationError, LinkConfigError, ValueError) as ex:
            section = (
                "link" if isinstance(ex, LinkConfigError) else "constellation"
            )
            raise ConfigError([f"{section}: {ex}"]) from ex
        return config

    @classmethod
    def from_file(
        cls,
        path: str | Path,
        overrides: Sequence[str] = (),
    ) -> ExperimentConfig:
        """
        Load and validate a YAML experiment file.

        Raises
        ------
        ConfigError
            If the file cannot be read or parsed, or fails validation.
        """
        path = Path(path)
        try:
            with open(path) as fp:
                data = yaml.safe_load(fp)
        except OSError as ex:
            raise ConfigError([f"{path}: {ex.strerror}"]) from ex
        except yaml.YAMLError as ex:
            raise ConfigError([f"{path}: not valid YAML ({ex})"]) from ex
        logger.debug("Loaded experiment configuration %s", path)
        return cls.from_dict(data, overrides=overrides, source=path)

    def section(self, name: str) -> dict[str, Any]:
        return self.settings[name]

    @property
    def block_length(self) -> Optional[int]:
        return self.settings["block_length"]

    @property
    def name(self) -> str:
        """Base name of the output files."""
        name = self.settings["output"]["name"]
        if name:
            return name
        if self.source is not None:
            return self.source.stem
        return self.kind.label

    def output_directory(self, override: Optional[str | Path] = None) -> Path:
        """
        Output directory: ``override``, else ``$TUKEYSIM_OUTPUT_DIR``, else
        ``output.directory``, else ``results``.
        """
        if override is not None:
            return Path(override)
        env = os.environ.get(OUTPUT_DIR_ENV)
        if env:
            return Path(env)
        return Path(self.settings["output"]["directory"] or DEFAULT_OUTPUT_DIR)

    def constellation(self, delta: Optional[float] = None) -> SqamConstellation:
        """The SQAM constellation; ``delta`` overrides the ring spacing."""
        section = self.settings["constellation"]
        if delta is None and section["radii"] is not None:
            radii = section["radii"]
            if section["rings"] is not None and section["rings"] != len(radii):
                raise ConstellationError(
                    f"rings={section['rings']} does not match {len(radii)} radii"
                )
            return SqamConstellation(tuple(radii), section["phases"])
        return SqamConstellation(
            ring_spacing_radii(section["rings"], delta or section["delta"]),
            section["phases"],
        )

    def link_config(self) -> LinkConfig:
        """Link parameters with band-dependent defaults filled in."""
        link = dict(self.settings["link"])
        loss = link.pop("loss_db_per_km")
        dispersion = link.pop("dispersion_ps_nm_km")
        kwargs = {key: value for key, value in link.items() if value is not None}
        band = kwargs.pop("band")
        if loss is not None:
            kwargs["rho"] = db_per_km_to_rho(loss)
        if band == Band.O:
            return LinkConfig.o_band(
                dispersion_ps_nm_km=1.0 if dispersion is None else dispersion,
                **kwargs,
            )
        if dispersion is not None:
            kwargs["beta2"] = dispersion_to_beta2(
                dispersion, kwargs.get("wavelength_nm", 1550.0)
            )
        return LinkConfig.c_band(**kwargs)

    def sweep_spec(self, codebook=None, **changes) -> SweepSpec:
        sweep = self.settings["sweep"]
        spec = SweepSpec(
            codebook=codebook,
            link=self.link_config(),
            launch_powers_dbm=tuple(sweep["launch_dbm"]),
            blocks_per_point=sweep["blocks"],
            min_error_events=sweep["min_error_events"] or None,
            batch_size=sweep["batch_size"],
            fidelity=sweep["fidelity"],
            seed=self.seed,
            threads=sweep["threads"],
            calibration_blocks=sweep["calibration_blocks"],
            per_sample_noise=sweep["per_sample_noise"],
        )
        return dataclasses.replace(spec, **changes) if changes else spec

    def resolved(self) -> dict[str, Any]:
        """Settings as plain YAML-safe data, for provenance."""
        return _plain(self.settings)


def _check_consistency(settings: dict[str, Any], problems: list[str]) -> None:
    kind = settings["experiment"]
    constellation = settings["constellation"]
    if kind in NEEDS_CODEBOOK:
        if settings["block_length"] is None:
            problems.append("block_length: required")
        elif settings["block_length"] < 2:
            problems.append("block_length: must be at least 2")
        if constellation["phases"] is None:
            problems.append("constellation.phases: required")
        if kind == ExperimentKind.ring_search:
            if constellation["rings"] is None:
                problems.append("constellation.rings: required")
            if settings["ring_search"]["deltas"] is None:
                problems.append("ring_search.deltas: required")
        elif constellation["radii"] is None:
            if constellation["rings"] is None:
                problems.append("constellation.rings: required without radii")
            if constellation["delta"] is None:
                problems.append("constellation.delta: required without radii")
        elif constellation["delta"] is not None:
            problems.append("constellation: give either delta or radii, not both")
    if kind in NEEDS_SWEEP and settings["sweep"]["launch_dbm"] is None:
        problems.append("sweep.launch_dbm: required")
    if kind == ExperimentKind.laser_power and settings["laser_power"]["laser_dbm"] is None:
        problems.append("laser_power.laser_dbm: required")
    if kind == ExperimentKind.imdd:
        for levels in settings["imdd"]["levels"]:
            if levels < 2 or levels & (levels - 1):
                problems.append(
                    f"imdd.levels: {levels} is not a power of two >= 2"
                )
    if kind == ExperimentKind.bandwidth:
        bandwidth = settings["bandwidth"]
        if any(not 0.0 <= beta <= 1.0 for beta in bandwidth["betas"]):
            problems.append("bandwidth.betas: roll-offs must lie in [0, 1]")
        if not 0.0 < bandwidth["fraction"] < 1.0:
            problems.append("bandwidth.fraction: must lie in (0, 1)")
    if settings["link"]["band"] == Band.O and settings["link"]["precompensate"]:
        problems.append("link.precompensate: not available in the O band")
    rolloff = settings["link"]["rolloff"]
    if kind in NEEDS_SWEEP and not 0.0 < rolloff < 1.0:
        problems.append(
            f"link.rolloff: detection needs a roll-off inside (0, 1), got {rolloff}"
        )
    elif not 0.0 <= rolloff <= 1.0:
        problems.append(f"link.rolloff: must lie in [0, 1], got {rolloff}")
