import math
from pathlib import Path

import pytest
import yaml

from ..config import (DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV, ExperimentConfig,
                      apply_overrides, launch_grid)
from ..enums import Band, ExperimentKind, Fidelity
from ..errors import ConfigError


def ber_config(**sections) -> dict:
    data = {
        "experiment": "ber",
        "seed": 3,
        "block_length": 3,
        "constellation": {"rings": 3, "phases": 3, "delta": 1.0},
        "sweep": {"launch_dbm": [-20, -15], "fidelity": "fast"},
    }
    data.update(sections)
    return data


def problems_of(data, overrides=()) -> list[str]:
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict(data, overrides=overrides)
    return info.value.problems


def test_valid_config():
    config = ExperimentConfig.from_dict(ber_config())
    assert config.kind == ExperimentKind.ber
    assert config.seed == 3
    assert config.block_length == 3
    assert config.constellation().radii == (1.0, 2.0, 3.0)
    assert config.name == "ber"

    spec = config.sweep_spec()
    assert spec.launch_powers_dbm == (-20.0, -15.0)
    assert spec.fidelity == Fidelity.fast
    assert spec.min_error_events == 100
    assert spec.seed == 3

    resolved = config.resolved()
    assert resolved["experiment"] == "ber"
    assert resolved["link"]["band"] == "C"
    yaml.safe_dump(resolved)


def test_input_is_not_modified():
    data = ber_config()
    ExperimentConfig.from_dict(data, overrides=["sweep.blocks=10"])
    assert "blocks" not in data["sweep"]


@pytest.mark.parametrize(
    ("changes", "expected"),
    [
        ({"colour": "red"}, "colour: unknown key"),
        ({"constellation": {"rings": 3, "phases": 3, "delta": -1.0}},
         "constellation.delta: must be positive"),
        ({"experiment": "tea"}, "experiment: unknown value 'tea'"),
        ({"experiment": None}, "experiment: required"),
        ({"sweep": {"launch_dbm": [-10, -20]}}, "sweep.launch_dbm: launch powers must be ascending"),
        ({"sweep": {"launch_dbm": [-10], "fidelity": "slow"}}, "sweep.fidelity: unknown value"),
        ({"link": {"symbol_rate": "fast"}}, "link.symbol_rate: expected a number"),
        ({"seed": 1.5}, "seed: expected an integer"),
        ({"block_length": 1}, "block_length: must be at least 2"),
    ],
)
def test_diagnostics(changes, expected):
    problems = problems_of(ber_config(**changes))
    assert any(problem.startswith(expected) for problem in problems), problems


def test_all_problems_reported_together():
    data = ber_config(colour="red", seed=-1)
    problems = problems_of(data)
    assert "colour: unknown key" in problems
    assert any(problem.startswith("seed:") for problem in problems)


def test_radii_and_delta_are_exclusive():
    data = ber_config(constellation={"radii": [1, 2], "phases": 2, "delta": 0.5})
    assert problems_of(data) == [
        "constellation: give either delta or radii, not both"
    ]
    config = ExperimentConfig.from_dict(
        ber_config(constellation={"radii": [1, 1.4], "phases": 2})
    )
    assert config.constellation().radii == (1.0, 1.4)


def test_overrides():
    config = ExperimentConfig.from_dict(
        ber_config(),
        overrides=["seed=9", "sweep.threads=4", "link.laser_power_dbm=-2.5"],
    )
    assert config.seed == 9
    assert config.sweep_spec().threads == 4
    assert config.link_config().laser_power_dbm == -2.5


def test_bad_overrides():
    problems = apply_overrides({"seed": 1}, ["seed", "seed.inner=2", "=3"])
    assert len(problems) == 3
    assert problems_of(ber_config(), overrides=["sweep.nothing=1"]) == [
        "sweep.nothing: unknown key"
    ]


def test_launch_grid():
    assert launch_grid({"start": -16, "stop": -10, "step": 2}) == [-16.0, -14.0, -12.0, -10.0]
    assert launch_grid({"start": -1, "stop": 0, "step": 0.1})[-1] == 0.0
    assert launch_grid([-3, "-2.5"]) == [-3.0, -2.5]
    with pytest.raises(ValueError):
        launch_grid({"start": 0, "stop": -1, "step": 1})
    with pytest.raises(ValueError):
        launch_grid({"start": 0, "stop": 1})


def test_string_floats():
    config = ExperimentConfig.from_dict(ber_config(link={"symbol_rate": "25e9"}))
    assert config.link_config().symbol_rate == 25e9


def test_link_config_bands():
    config = ExperimentConfig.from_dict(
        ber_config(link={"loss_db_per_km": 0.2, "dispersion_ps_nm_km": 17.0})
    )
    link = config.link_config()
    assert link.band == Band.C
    assert link.rho == pytest.approx(0.2 * math.log(10.0) / 10.0)
    assert link.beta2 < 0.0

    config = ExperimentConfig.from_dict(
        ber_config(experiment="oband", link={"band": "o"})
    )
    link = config.link_config()
    assert link.band == Band.O
    assert not link.precompensate


def test_oband_rejects_precompensation():
    problems = problems_of(
        ber_config(link={"band": "O", "precompensate": True})
    )
    assert problems == ["link.precompensate: not available in the O band"]


def test_rolloff_limits():
    problems = problems_of(ber_config(link={"rolloff": 0.0}))
    assert problems[0].startswith("link.rolloff:")
    ExperimentConfig.from_dict({"experiment": "bandwidth"})


def test_experiment_requirements():
    assert problems_of({"experiment": "ring-search", "block_length": 3,
                        "constellation": {"rings": 2, "phases": 2},
                        "sweep": {"launch_dbm": [-10]}}) == [
        "ring_search.deltas: required"
    ]
    assert problems_of({"experiment": "imdd", "imdd": {"levels": [3]},
                        "sweep": {"launch_dbm": [-10]}}) == [
        "imdd.levels: 3 is not a power of two >= 2"
    ]
    assert "laser_power.laser_dbm: required" in problems_of(
        ber_config(experiment="laser-power")
    )
    assert "sweep.launch_dbm: required" in problems_of(
        ber_config(sweep={})
    )


def test_ring_search_builds_every_spacing():
    config = ExperimentConfig.from_dict({
        "experiment": "ring_search",
        "block_length": 3,
        "constellation": {"rings": 2, "phases": 2},
        "ring_search": {"deltas": [0.25, 0.5]},
        "sweep": {"launch_dbm": [-10]},
    })
    assert config.constellation(delta=0.5).radii == (1.0, 1.5)


def test_output_directory(monkeypatch, tmp_path):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    config = ExperimentConfig.from_dict(ber_config())
    assert str(config.output_directory()) == DEFAULT_OUTPUT_DIR

    config = ExperimentConfig.from_dict(ber_config(output={"directory": "out"}))
    assert str(config.output_directory()) == "out"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert config.output_directory() == tmp_path
    assert config.output_directory(tmp_path / "flag") == tmp_path / "flag"


def test_from_file(tmp_path):
    path = tmp_path / "my-run.yml"
    path.write_text(yaml.safe_dump(ber_config()))
    config = ExperimentConfig.from_file(path)
    assert config.name == "my-run"
    assert config.source == path

    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_file(tmp_path / "missing.yml")
    assert "missing.yml" in info.value.problems[0]

    bad = tmp_path / "bad.yml"
    bad.write_text("experiment: [ber\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(bad)


def test_root_must_be_mapping():
    assert problems_of(["ber"])[0] == "<root>: expected a mapping"


EXPERIMENTS = Path(__file__).resolve().parents[2] / "experiments"


@pytest.mark.skipif(not EXPERIMENTS.is_dir(), reason="experiments not shipped")
@pytest.mark.parametrize(
    "path",
    sorted(EXPERIMENTS.glob("*.yml")) if EXPERIMENTS.is_dir() else [],
    ids=lambda path: path.stem,
)
def test_shipped_experiments_validate(path):
    config = ExperimentConfig.from_file(path)
    assert config.name == path.stem
