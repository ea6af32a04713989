"""Tests for experiment configuration and validators."""

import json

import pytest
import voluptuous as vol

from aux_consensus.const import CONF_OUTPUT_FORMAT
from aux_consensus.core.config import ExperimentConfig, default_t
from aux_consensus.core.exceptions import ConfigError
from aux_consensus.utils.validators import (
    assign_faults,
    fault_entries,
    parse_n_values,
    validate_config_data,
)


def test_defaults_are_valid():
    config = ExperimentConfig()
    assert config.validate() == []
    assert config.n_values == [4, 7, 10]
    assert config.include_proofs and config.lazy_stop and not config.combine_messages


@pytest.mark.parametrize(("n", "t"), [(1, 0), (4, 1), (7, 2), (10, 3), (40, 13)])
def test_default_t(n, t):
    assert default_t(n) == t
    assert ExperimentConfig().t_for(n) == t


@pytest.mark.parametrize(
    ("value", "expected"),
    [(7, [7]), ("4,7,10", [4, 7, 10]), ("4, 7", [4, 7]), ([10, 20], [10, 20])],
)
def test_parse_n_values(value, expected):
    assert parse_n_values(value) == expected


@pytest.mark.parametrize("value", [True, "4,x", [0], "", None])
def test_parse_n_values_rejects(value):
    with pytest.raises(vol.Invalid):
        parse_n_values(value)


def test_fault_entries():
    assert fault_entries("3:crash@0, 2:equivocate") == [
        (3, "crash", 0),
        (2, "equivocate", None),
    ]
    assert fault_entries("none") == []


def test_assign_faults_limits_to_t():
    assert assign_faults("garbage", 10, 3) == {
        7: ("garbage", None),
        8: ("garbage", None),
        9: ("garbage", None),
    }
    with pytest.raises(vol.Invalid):
        assign_faults("0:silent,1:silent", 4, 1)


def test_from_dict_coerces_loose_values():
    config = ExperimentConfig.from_dict(
        {
            "n": "4,7",
            "instances": "12",
            "combine_messages": "yes",
            "include_proofs": 0,
            "proposals": "RANDOM",
            "log_level": "INFO",
        }
    )
    assert config.n_values == [4, 7]
    assert config.instances == 12
    assert config.combine_messages is True
    assert config.include_proofs is False
    assert config.proposals == "random"
    assert config.log_level == "info"


@pytest.mark.parametrize(
    ("overrides", "fragment"),
    [
        ({"n": [4], "t": 2}, "3t+1"),
        ({"instances": 0}, "instances"),
        ({"proposals": "012"}, "proposals"),
        ({"proposals": "010"}, "needs 1 or"),
        ({"adversary": "omniscient"}, "adversary"),
        ({"faults": "0:silent,1:silent", "n": [4]}, "faults"),
        ({CONF_OUTPUT_FORMAT: "xml"}, "format"),
        ({"max_workers": 0}, "max_workers"),
    ],
)
def test_validate_reports_problems(overrides, fragment):
    config = ExperimentConfig.from_dict(overrides)
    errors = config.validate()
    assert any(fragment in error for error in errors), errors
    with pytest.raises(ConfigError) as err:
        config.ensure_valid()
    assert err.value.errors == errors


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict({"output_format": "xml", "seed": 2})
    assert err.value.errors == ["output_format"]


def test_schema_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        validate_config_data({"n": 4, "verbose": True})
    with pytest.raises(ConfigError):
        validate_config_data([4, 7])


def test_from_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"n": [4], "instances": 3, "adversary": "random"}))
    config = ExperimentConfig.from_file(path)
    assert config.n_values == [4]
    assert config.instances == 3
    assert config.adversary == "random"


@pytest.mark.parametrize("content", ["{not json", '{"coin": "loaded"}'])
def test_from_file_errors(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


def test_missing_file():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file("/nonexistent/experiment.json")


def test_merge_overrides_ignores_absent_flags():
    base = ExperimentConfig(instances=9, seed=4)
    merged = base.merge_overrides({"instances": None, "seed": 11, "lazy_stop": False})
    assert merged.instances == 9
    assert merged.seed == 11
    assert merged.lazy_stop is False
    assert base.seed == 4


def test_merge_overrides_validates():
    with pytest.raises(ConfigError):
        ExperimentConfig().merge_overrides({"coin": "loaded"})


def test_with_mode_copies():
    base = ExperimentConfig(include_proofs=False)
    combined = base.with_mode(combine_messages=True)
    assert combined.combine_messages is True
    assert combined.include_proofs is False
    assert base.combine_messages is False
    assert combined.n_values is not base.n_values


def test_to_dict_round_trips_through_from_dict():
    config = ExperimentConfig(n_values=[7], t=1, faults="6:garbage", trace_dir="out")
    assert ExperimentConfig.from_dict(config.to_dict()) == config
