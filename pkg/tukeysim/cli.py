#!/usr/bin/env python3
"""
Run tukeysim experiments from YAML configuration files.

    tukeysim run experiments/ring-search-2x2-n7.yml --seed 7
    tukeysim validate experiments/ring-search-8x4-n3.yml
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence, cast

import prettytable
import yaml

from . import harness, tables
from .codebook import build_codebook, max_rate, write_codebook_table
from .config import NEEDS_CODEBOOK, NEEDS_SWEEP, ExperimentConfig
from .enums import ExperimentKind, Fidelity
from .errors import ConfigError, InfeasibleLaunchPowerError, TukeySimError
from .log import configure_logging, standard_warnings_config
from .phy import DEFAULT_OVERSAMPLING, DEFAULT_PAD_SYMBOLS, occupied_bandwidth
from .trellis import ENUMERATION_BUDGET, build_trellis, expected_path_count
from .utils import floor_log2
from .version import __version__

logger = logging.getLogger(__name__)

EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_FAILURE = 3

# rough per-block costs used by the runtime estimate
SECONDS_PER_EDGE = 4e-8
SECONDS_PER_SAMPLE = 6e-8


@dataclasses.dataclass
class ProgramArguments:
    """Argparse arguments for tukeysim."""
    command: str
    config: str
    seed: Optional[int] = None
    threads: Optional[int] = None
    output_dir: Optional[str] = None
    fidelity: Optional[str] = None
    overrides: list[str] = dataclasses.field(default_factory=list)
    verbose: bool = False
    log_file: Optional[str] = None


def _flag_overrides(
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    fidelity: Optional[str] = None,
) -> list[str]:
    """Dedicated flags, expressed as ``--set`` overrides applied last."""
    result = list(overrides)
    if seed is not None:
        result.append(f"seed={seed}")
    if threads is not None:
        result.append(f"sweep.threads={threads}")
    if fidelity is not None:
        result.append(f"sweep.fidelity={fidelity}")
    return result


def _labelled(label: str, value: Any, points) -> list[dict[str, Any]]:
    return [{label: value, **dataclasses.asdict(point)} for point in points]


def _labelled_curves(label: str, curves: dict) -> list[dict[str, Any]]:
    rows = []
    for value, points in curves.items():
        rows.extend(_labelled(label, value, points))
    return rows


def execute(config: ExperimentConfig) -> dict[str, Any]:
    """
    Run the experiment of ``config``.

    Returns
    -------
    tables : dict
        Output file suffix to ``(rows, columns)``; the main table has the
        suffix ``""``.  A codebook export returns ``{"codebook": Codebook}``.
    """
    kind = config.kind
    curve_columns = list(harness.CURVE_COLUMNS)
    logger.info("Running %s experiment %r", kind.label, config.name)

    if kind == ExperimentKind.bandwidth:
        section = config.section("bandwidth")
        rows = []
        for beta in section["betas"]:
            bandwidth = occupied_bandwidth(beta, fraction=section["fraction"])
            rows.append({
                "rolloff": beta,
                "bandwidth": bandwidth,
                "overhead_percent": 100.0 * (bandwidth - 1.0),
            })
            logger.info(
                "beta %.2f: %.2f%% overhead", beta, 100.0 * (bandwidth - 1.0)
            )
        return {"": (rows, ["rolloff", "bandwidth", "overhead_percent"])}

    if kind == ExperimentKind.imdd:
        section = config.section("imdd")
        spec = config.sweep_spec()
        rows = []
        for levels in section["levels"]:
            points = harness.run_imdd_baseline(
                levels, spec, block_length=section["block_length"]
            )
            rows.extend(_labelled("levels", levels, points))
        return {"": (rows, ["levels"] + curve_columns)}

    if kind == ExperimentKind.ring_search:
        constellation = config.section("constellation")
        result = harness.run_ring_spacing_search(
            constellation["rings"],
            constellation["phases"],
            config.block_length,
            config.section("ring_search")["deltas"],
            config.sweep_spec(),
        )
        logger.info("Best ring spacing: %s", result.best_delta)
        return {
            "": (result.rows(), ["delta", "threshold_dbm", "best"]),
            "-curves": (
                _labelled_curves("delta", result.curves),
                ["delta"] + curve_columns,
            ),
        }

    codebook = build_codebook(config.constellation(), config.block_length)
    logger.info(
        "Codebook: %d of %d classes, %d bits per block",
        codebook.size, codebook.path_count, codebook.bits_per_block,
    )
    if kind == ExperimentKind.codebook_export:
        return {"codebook": codebook}

    spec = config.sweep_spec(codebook)
    if kind == ExperimentKind.ber:
        return {"": (harness.run_ber_sweep(spec), curve_columns)}
    if kind == ExperimentKind.rate:
        return {"": (harness.run_rate_sweep(spec), curve_columns)}
    if kind == ExperimentKind.oband:
        curves = harness.run_oband(spec, config.section("oband")["dispersions"])
        return {"": (_labelled_curves("dispersion", curves), ["dispersion"] + curve_columns)}
    if kind == ExperimentKind.laser_power:
        curves = harness.run_laser_power_study(
            spec, config.section("laser_power")["laser_dbm"]
        )
        return {"": (_labelled_curves("laser_dbm", curves), ["laser_dbm"] + curve_columns)}
    raise TukeySimError(f"Unsupported experiment kind: {kind}")


def write_manifest(
    config: ExperimentConfig,
    outputs: Sequence[Path],
    path: Path,
) -> Path:
    """Resolved configuration, seed, version and output files, as YAML."""
    manifest = {
        "experiment": config.kind.label,
        "name": config.name,
        "seed": config.seed,
        "version": str(__version__),
        "config": config.resolved(),
        "outputs": [Path(output).name for output in outputs],
    }
    with open(path, "w") as fp:
        yaml.safe_dump(manifest, fp, sort_keys=True, default_flow_style=False)
    return path


def run(
    path: str | Path,
    overrides: Sequence[str] = (),
    output_dir: Optional[str | Path] = None,
) -> list[Path]:
    """
    Execute the experiment described by ``path``.

    Parameters
    ----------
    path : str or Path
        YAML experiment configuration.
    overrides : sequence of str, optional
        ``dotted.key=value`` settings applied on top of the file.
    output_dir : str or Path, optional
        Overrides ``$TUKEYSIM_OUTPUT_DIR`` and the file's output directory.

    Returns
    -------
    written : list of Path
        Result tables followed by the run manifest.
    """
    config = ExperimentConfig.from_file(path, overrides=overrides)
    directory = config.output_directory(output_dir)
    settings = {"version": str(__version__), **config.resolved()}

    written = []
    for suffix, result in execute(config).items():
        if suffix == "codebook":
            target = directory / f"{config.name}.tsv"
            written.append(write_codebook_table(result, target))
            continue
        rows, columns = result
        target = directory / f"{config.name}{suffix}.tsv"
        written.append(
            harness.write_curve_table(rows, target, settings=settings, columns=columns)
        )
    written.append(
        write_manifest(config, written, directory / f"{config.name}.manifest.yml")
    )
    for output in written:
        logger.info("Wrote %s", output)
    return written


def estimate_runtime(config: ExperimentConfig, edges: int, n: int) -> float:
    """Very rough wall time in seconds of a full run, for planning only."""
    sweep = config.section("sweep")
    blocks = sweep["blocks"] * len(sweep["launch_dbm"])
    per_block = edges * SECONDS_PER_EDGE
    if sweep["fidelity"] == Fidelity.waveform:
        samples = (n + 2 * DEFAULT_PAD_SYMBOLS) * DEFAULT_OVERSAMPLING
        per_block += samples * SECONDS_PER_SAMPLE
    repeats = 1
    if config.kind == ExperimentKind.ring_search:
        repeats = len(config.section("ring_search")["deltas"])
    elif config.kind == ExperimentKind.oband:
        repeats = len(config.section("oband")["dispersions"])
    elif config.kind == ExperimentKind.laser_power:
        repeats = len(config.section("laser_power")["laser_dbm"])
    return blocks * per_block * repeats / sweep["threads"]


def validate(
    path: str | Path,
    overrides: Sequence[str] = (),
) -> prettytable.PrettyTable:
    """
    Check a configuration and size its codebook without simulating.

    Returns
    -------
    report : prettytable.PrettyTable
        Quantity / value rows.

    Raises
    ------
    ConfigError
        With the same diagnostics ``run`` would give.
    """
    config = ExperimentConfig.from_file(path, overrides=overrides)
    rows = [
        ("experiment", config.kind.label),
        ("name", config.name),
        ("seed", config.seed),
    ]
    if config.kind in NEEDS_CODEBOOK:
        n = config.block_length
        if config.kind == ExperimentKind.ring_search:
            deltas = config.section("ring_search")["deltas"]
            constellation = config.constellation(delta=deltas[0])
        else:
            constellation = config.constellation()
        path_count = expected_path_count(constellation, n)
        trellis = build_trellis(constellation, n)
        edges = sum(section.n_edges for section in trellis.sections)
        rows += [
            ("radii", ", ".join(format(r, ".6g") for r in constellation.radii)),
            ("phases", constellation.n_phases),
            ("block length", n),
            ("trellis paths", path_count),
            ("trellis edges", edges),
            ("codebook size", 1 << floor_log2(path_count)),
            ("bits per block", floor_log2(path_count)),
            ("max rate (b/sym)", max_rate(constellation, n)),
            ("enumeration budget", ENUMERATION_BUDGET),
            ("within budget", path_count <= ENUMERATION_BUDGET),
        ]
        if config.kind in NEEDS_SWEEP:
            rows.append((
                "estimated runtime (s)",
                estimate_runtime(config, edges, n),
            ))
    elif config.kind in NEEDS_SWEEP:
        rows.append((
            "estimated runtime (s)",
            estimate_runtime(config, 0, config.section("imdd")["block_length"]),
        ))
    table = prettytable.PrettyTable()
    table.field_names = ["quantity", "value"]
    table.align = "l"
    for name, value in rows:
        table.add_row([name, tables.string_for_table(value)])
    return table


def main(args: ProgramArguments) -> int:
    overrides = _flag_overrides(
        args.overrides, seed=args.seed, threads=args.threads,
        fidelity=args.fidelity,
    )
    try:
        if args.command == "validate":
            logger.info("%s", validate(args.config, overrides))
        else:
            run(args.config, overrides, output_dir=args.output_dir)
    except ConfigError as ex:
        logger.error("Invalid configuration %s:", args.config)
        for problem in ex.problems:
            logger.error("  %s", problem)
        return EXIT_CONFIG
    except InfeasibleLaunchPowerError as ex:
        logger.error("%s", ex)
        return EXIT_INFEASIBLE
    except TukeySimError as ex:
        logger.error("%s: %s", type(ex).__name__, ex)
        return EXIT_FAILURE
    return 0


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", type=str, help="Experiment YAML file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a setting by dotted key, e.g. sweep.blocks=1000",
    )
    parser.add_argument("--seed", type=int, help="Override the seed")
    parser.add_argument(
        "--threads", type=int, help="Maximum number of worker threads"
    )
    parser.add_argument(
        "--fidelity",
        type=str,
        choices=[item.label for item in Fidelity],
        help="Channel model",
    )


def _create_argparser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tukeysim")
    parser.description = (
        "Tukey-signalling direct-detection link experiments"
    )
    parser.add_argument(
        "--verbose", "-v", action="store_true",
        help="Show debug messages",
    )
    parser.add_argument(
        "--log-file", type=str, help="Also log to this (rotating) file"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run an experiment")
    _add_common_arguments(run_parser)
    run_parser.add_argument(
        "--output-dir",
        type=str,
        help="Output directory (default: $TUKEYSIM_OUTPUT_DIR or the config)",
    )

    validate_parser = subparsers.add_parser(
        "validate", help="Check a configuration without simulating"
    )
    _add_common_arguments(validate_parser)
    validate_parser.set_defaults(output_dir=None)
    return parser


def _entrypoint(argv: Optional[Sequence[str]] = None) -> int:
    parser = _create_argparser()
    args = cast(
        ProgramArguments,
        parser.parse_args(args=sys.argv[1:] if argv is None else argv),
    )
    level = "DEBUG" if args.verbose else "INFO"
    configure_logging(level=level, log_file=args.log_file)
    standard_warnings_config()
    return main(args)


if __name__ == "__main__":
    sys.exit(_entrypoint())
