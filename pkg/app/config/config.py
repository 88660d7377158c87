import logging
import os
import yaml
from typing import Dict, Any, Optional

STATE_CAP_ENV = "DTLAB_STATE_CAP"

# Used when config.yaml is missing or a key is absent from it
DEFAULTS: Dict[str, Any] = {
    "engine": {
        "tolerance": 1e-9,
        "state_cap": 10_000_000,
        "rule_cap": 16,
    },
    "simulation": {
        "episodes": 100_000,
        "seed": 0,
        "chunk_size": 8192,
        "workers": 1,
        "acceptance_warning": 0.01,
    },
    "cli": {
        "table_workers": 4,
    },
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s - %(levelname)s - %(message)s",
    },
    "server": {
        "host": "0.0.0.0",
        "port": 8000,
        "cors_origins": ["http://localhost", "http://localhost:8000", "http://127.0.0.1:8000"],
    },
}


class Config:
    """
    Configuration loader for the application.

    Loads configuration from app/config/config.yaml and provides
    easy access to configuration values. Keys missing from the file
    fall back to DEFAULTS.
    """

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration loader.

        Args:
            config_path: Optional path to configuration file.
                         Defaults to app/config/config.yaml.
        """
        if config_path is None:
            current_dir = os.path.dirname(os.path.abspath(__file__))
            config_path = os.path.join(current_dir, "config.yaml")

        self.config_path = config_path
        self.config: Dict[str, Any] = {}

        self.load_config()

    def load_config(self) -> None:
        """Load configuration from YAML file."""
        try:
            with open(self.config_path, 'r') as config_file:
                self.config = yaml.safe_load(config_file) or {}
        except FileNotFoundError:
            logging.warning(f"Configuration file not found at {self.config_path}, using defaults")
            self.config = {}
        except yaml.YAMLError as e:
            logging.error(f"Error parsing YAML configuration: {e}")
            self.config = {}

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value by key.

        Uses dot notation for nested keys (e.g., "engine.state_cap").

        Args:
            key: Configuration key in dot notation.
            default: Default value if key is found neither in the file nor in DEFAULTS.

        Returns:
            Configuration value if found, default otherwise.
        """
        for source in (self.config, DEFAULTS):
            value = source
            found = True
            for k in key.split('.'):
                if isinstance(value, dict) and k in value:
                    value = value[k]
                else:
                    found = False
                    break
            if found:
                return value
        return default

    def get_tolerance(self) -> float:
        """Probability tolerance for normalisation checks, equality and argmax."""
        return float(self.get("engine.tolerance"))

    def get_state_cap(self) -> int:
        """
        Get the joint enumeration cap.

        The DTLAB_STATE_CAP environment variable takes precedence over the file.

        Returns:
            Maximum number of full assignments a joint may enumerate.
        """
        override = os.environ.get(STATE_CAP_ENV)
        if override:
            try:
                return int(float(override))
            except ValueError:
                logging.warning(f"Ignoring malformed {STATE_CAP_ENV}={override!r}")
        return int(self.get("engine.state_cap"))

    def get_rule_cap(self) -> int:
        """Cap on the number of joint observation assignments of a decision."""
        return int(self.get("engine.rule_cap"))

    def get_simulation_config(self) -> Dict[str, Any]:
        """
        Get simulation configuration section merged over its defaults.

        Returns:
            Simulation configuration dictionary.
        """
        merged = dict(DEFAULTS["simulation"])
        merged.update(self.get("simulation", {}) or {})
        return merged

    def get_logging_level(self) -> str:
        return str(self.get("logging.level"))

    def get_logging_format(self) -> str:
        return str(self.get("logging.format"))

    def get_server_config(self) -> Dict[str, Any]:
        """Host, port and allowed CORS origins of the HTTP service."""
        merged = dict(DEFAULTS["server"])
        merged.update(self.get("server", {}) or {})
        return merged


# Create global configuration instance
config = Config()
