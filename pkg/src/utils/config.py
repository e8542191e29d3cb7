"""Configuration management for the segment bug locator."""

from pathlib import Path
from typing import Any, Dict, Optional
import yaml
from dotenv import load_dotenv
import os


class Config:
    """Centralized configuration management.

    Loads settings from:
    - .env file (environment variables: seed, log level, database URL)
    - config/settings.yaml (search thresholds, harness defaults)

    Usage:
        >>> config = Config()
        >>> print(config.search_defaults['sig'])
        >>> print(config.default_seed)
    """

    _instance = None

    def __new__(cls):
        """Singleton pattern to ensure one config instance."""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        """Initialize configuration."""
        if self._initialized:
            return

        # Load environment variables from .env file
        load_dotenv()

        # Load YAML settings
        self.settings = self._load_yaml()

        self._initialized = True

    def _load_yaml(self) -> Dict[str, Any]:
        """Load settings from YAML file.

        Returns:
            Dictionary of settings

        Raises:
            FileNotFoundError: If settings.yaml doesn't exist
        """
        # Get path relative to this file
        config_path = Path(__file__).parent.parent.parent / "config" / "settings.yaml"

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        with open(config_path, 'r') as f:
            return yaml.safe_load(f)

    # Environment Variables (from .env)

    @property
    def database_url(self) -> str:
        """Get database URL for experiment records."""
        return os.getenv("DATABASE_URL", "sqlite:///data/experiments.db")

    @property
    def debug(self) -> bool:
        """Get debug flag."""
        return os.getenv("DEBUG", "false").lower() == "true"

    @property
    def log_level(self) -> str:
        """Get logging level."""
        return os.getenv("LOG_LEVEL", "INFO")

    @property
    def default_seed(self) -> Optional[int]:
        """Get default seed from LOCATOR_SEED (None when unset or malformed)."""
        raw = os.getenv("LOCATOR_SEED", "").strip()
        if not raw:
            return None
        try:
            return int(raw)
        except ValueError:
            return None

    # YAML Settings

    @property
    def search_defaults(self) -> Dict[str, Any]:
        """Get default thresholds and measurement budget."""
        return self.settings.get('search', {})

    @property
    def threshold_presets(self) -> Dict[str, Dict[str, float]]:
        """Get early-determination threshold variants."""
        return self.settings.get('threshold_presets', {})

    @property
    def measurement_presets(self) -> Dict[str, Dict[str, int]]:
        """Get measurement budget variants."""
        return self.settings.get('measurement_presets', {})

    @property
    def generation_defaults(self) -> Dict[str, int]:
        """Get random program generation defaults."""
        return self.settings.get('generation', {})

    @property
    def experiment_settings(self) -> Dict[str, Any]:
        """Get experiment harness settings."""
        return self.settings.get('experiment', {})

    @property
    def simulator_settings(self) -> Dict[str, Any]:
        """Get statevector simulator settings."""
        return self.settings.get('simulator', {})

    @property
    def max_qubits(self) -> int:
        """Get the desk-scale qubit cap."""
        return int(self.simulator_settings.get('max_qubits', 16))

    # Convenience methods

    def resolve_seed(self, seed: Optional[int]) -> int:
        """Pick the explicit seed, else LOCATOR_SEED, else 0.

        Args:
            seed: Seed passed on the command line (may be None)

        Returns:
            Seed to use
        """
        if seed is not None:
            return seed
        env_seed = self.default_seed
        return env_seed if env_seed is not None else 0

    def is_valid_threshold_preset(self, name: str) -> bool:
        """Check if a threshold preset name exists."""
        return name in self.threshold_presets

    def is_valid_measurement_preset(self, name: str) -> bool:
        """Check if a measurement preset name exists."""
        return name in self.measurement_presets


# Global config instance
config = Config()
