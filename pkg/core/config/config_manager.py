"""
Config Manager

Application-level settings (defaults, output directory, Monte Carlo sizing)
stored in the root ``config.json``. Scenario files are handled by
``core.config.scenario_loader``.
"""

import json
import os
from pathlib import Path
from core.utils.logger import debug, warning, exception
from core.utils.errors import ConfigurationError

OUTPUT_DIR_ENV = "BUYBACK_LAB_OUT"

DEFAULT_CONFIG = {
    "app_name": "Buy-back Execution Lab",
    "app_version": "1.0.0",
    "output_dir": "output",
    "monte_carlo": {"block_size": 4096, "workers": 4},
    "defaults": {
        "strategy": {"fast_mult": 4.0, "trickle_mult": 0.15},
        "var": {"percentile": 0.05},
    },
    "tape_schema_version": "1.0",
}


class ConfigManager:
    """Simple config manager class"""

    def __init__(self, config_file_path=None, base_dir=None):
        """Initialize config manager"""
        if config_file_path:
            self.config_file = Path(config_file_path)
        elif base_dir:
            self.config_file = Path(base_dir) / "config.json"
        else:
            # Default fallback
            self.config_file = Path(__file__).parent.parent.parent / "config.json"

        self._config = None
        self.load()

    def load(self):
        """Load configuration from file, falling back to built-in defaults."""
        self._config = json.loads(json.dumps(DEFAULT_CONFIG))
        if not self.config_file.exists():
            warning(f"Config file not found: {self.config_file}, using defaults")
            return
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                _deep_update(self._config, json.load(f))
        except json.JSONDecodeError as e:
            exception(e, "Error loading config")
            raise ConfigurationError(str(self.config_file), f"invalid JSON: {e}") from e

    def save(self):
        """Save configuration to file"""
        self.config_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.config_file, 'w', encoding='utf-8') as f:
            json.dump(self._config, f, indent=4, ensure_ascii=False)
        debug(f"Config saved to {self.config_file}")

    def get(self, key, default=None):
        """Get configuration value; nested keys use dot notation."""
        if self._config is None:
            self.load()

        value = self._config
        try:
            for k in key.split('.'):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key, value):
        """Set configuration value"""
        if self._config is None:
            self.load()

        keys = key.split('.')
        config = self._config
        for k in keys[:-1]:
            config = config.setdefault(k, {})
        config[keys[-1]] = value

    def get_all(self):
        """Get all configuration data"""
        if self._config is None:
            self.load()
        return self._config

    def update(self, data):
        """Update configuration with new data"""
        if not isinstance(data, dict):
            raise ValueError("Data must be a dictionary")
        _deep_update(self.get_all(), data)

    def reload(self):
        """Reload configuration from file"""
        self.load()

    def output_dir(self):
        """Default output directory; the environment variable wins over config.json."""
        env_dir = os.environ.get(OUTPUT_DIR_ENV)
        if env_dir:
            return Path(env_dir)
        out = Path(self.get("output_dir", "output"))
        if not out.is_absolute():
            out = self.config_file.parent / out
        return out


def _deep_update(target, source):
    for key, value in source.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            _deep_update(target[key], value)
        else:
            target[key] = value


# Global instance, created on first use
config_manager = None


def _requested_file(base_dir, config_file_path):
    if config_file_path:
        return Path(config_file_path)
    if base_dir:
        return Path(base_dir) / "config.json"
    return None


def initialize_config_manager(base_dir=None, config_file_path=None):
    """
    Initialize the global config manager.

    Called again with a different ``base_dir`` or file, it rebinds the global
    to that file; called with neither, it returns the current instance.
    """
    global config_manager
    requested = _requested_file(base_dir, config_file_path)
    if config_manager is None or (requested is not None
                                  and requested.resolve() != config_manager.config_file.resolve()):
        config_manager = ConfigManager(config_file_path=config_file_path, base_dir=base_dir)
        debug(f"Config bound to {config_manager.config_file}")
    return config_manager


def get_config_manager():
    """Get the global config manager instance, creating a default one if needed."""
    return config_manager or initialize_config_manager()
