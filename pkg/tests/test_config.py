import importlib
import json

import pytest

from core.config import ConfigManager, load_scenario, scenario_from_dict
from core.config.config_manager import OUTPUT_DIR_ENV, get_config_manager, initialize_config_manager
from core.strategies import StrategyKind
from core.utils.errors import ConfigurationError

config_module = importlib.import_module("core.config.config_manager")


@pytest.fixture
def app_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"monte_carlo": {"workers": 2}, "output_dir": "results"}))
    return ConfigManager(config_file_path=path)


def test_file_values_merge_over_defaults(app_config):
    assert app_config.get("monte_carlo.workers") == 2
    assert app_config.get("monte_carlo.block_size") == 4096
    assert app_config.get("defaults.strategy.fast_mult") == 4.0
    assert app_config.get("missing.key", "fallback") == "fallback"


def test_set_save_and_reload(app_config):
    app_config.set("defaults.var.percentile", 0.01)
    app_config.save()
    app_config.set("defaults.var.percentile", 0.32)
    app_config.reload()
    assert app_config.get("defaults.var.percentile") == 0.01


def test_update_requires_a_dict(app_config):
    app_config.update({"monte_carlo": {"block_size": 128}})
    assert app_config.get("monte_carlo.block_size") == 128
    assert app_config.get("monte_carlo.workers") == 2
    with pytest.raises(ValueError):
        app_config.update(["not", "a", "dict"])


def test_invalid_json_is_a_configuration_error(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(ConfigurationError):
        ConfigManager(config_file_path=path)


def test_output_dir_env_override(app_config, tmp_path, monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert app_config.output_dir() == tmp_path / "results"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
    assert app_config.output_dir() == tmp_path / "env_out"


def test_bundled_scenarios_load(data_dir):
    adaptive = load_scenario(data_dir / "scenarios" / "adaptive_gbm.json")
    assert adaptive.strategy.kind == StrategyKind.ADAPTIVE_BROKER
    assert adaptive.market.master_seed == 7
    assert adaptive.taxes.stamp_bps == 50.0
    assert adaptive.risk["z"] == 1.0

    front = load_scenario(data_dir / "scenarios" / "front_loaded.json")
    assert front.path_csv.is_file()

    audit = load_scenario(data_dir / "audit" / "example1.json")
    assert audit.strategy is None
    assert audit.resolve(audit.audit["tape"]).is_file()


@pytest.mark.parametrize("document, field", [
    ({"market": {"sigma": 0.3}}, "market.sigma"),
    ({"market": {"sigma_annual": -0.3}}, "market.sigma_annual"),
    ({"limits": {"max_participation": 2.0}}, "limits.max_participation"),
    ({"strategy": {"kind": "TWAP", "target_value": -1.0}}, "strategy.target_value"),
    ({"risk": {"alpha": 0.05}}, "risk.alpha"),
    ({"extras": {}}, "extras"),
])
def test_bad_scenarios_name_the_field(document, field):
    with pytest.raises(ConfigurationError) as info:
        scenario_from_dict(document)
    assert info.value.field == field


def test_missing_scenario_file_names_the_path(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(ConfigurationError) as info:
        load_scenario(missing)
    assert str(missing) in str(info.value)
    assert info.value.exit_code == 2


@pytest.fixture
def fresh_global_config(monkeypatch):
    monkeypatch.setattr(config_module, "config_manager", None)


def _config_dir(root, workers):
    root.mkdir()
    (root / "config.json").write_text(json.dumps({"monte_carlo": {"workers": workers}}))
    return root


def test_global_config_rebinds_to_a_new_base_dir(tmp_path, fresh_global_config):
    first = initialize_config_manager(base_dir=_config_dir(tmp_path / "a", 3))
    assert first.get("monte_carlo.workers") == 3
    assert initialize_config_manager(base_dir=tmp_path / "a") is first

    second = initialize_config_manager(base_dir=_config_dir(tmp_path / "b", 5))
    assert second is not first
    assert second.get("monte_carlo.workers") == 5
    assert initialize_config_manager() is second
    assert get_config_manager() is second
