"""
Configuration parser for flat run configuration files
"""

import yaml
from pathlib import Path
from typing import Dict, Any
from ..utils.helpers import substitute_variables

YAML_SUFFIXES = (".yaml", ".yml")


class ConfigParser:
    """Parse flat `key = value` files and flat YAML mappings"""

    def __init__(self):
        self.config: Dict[str, Any] = {}

    def parse(self, config_path: str) -> Dict[str, Any]:
        """
        Parse a configuration file into a flat mapping

        Args:
            config_path: Path to a `.cfg` (key = value) or `.yaml` file

        Returns:
            Flat configuration dictionary with environment variables substituted
        """
        config_file = Path(config_path)

        if not config_file.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        text = config_file.read_text(encoding="utf-8")
        if config_file.suffix.lower() in YAML_SUFFIXES:
            raw_config = self._parse_yaml(text)
        else:
            raw_config = self.parse_flat(text)

        self.config = substitute_variables(raw_config)
        return self.config

    @staticmethod
    def _parse_yaml(text: str) -> Dict[str, Any]:
        """Load a YAML document that must be a flat mapping"""
        try:
            raw_config = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ValueError(f"Invalid YAML syntax in config file: {e}")

        if raw_config is None:
            return {}
        if not isinstance(raw_config, dict):
            raise ValueError("YAML configuration must be a mapping of key: value pairs")
        nested = [key for key, value in raw_config.items() if isinstance(value, dict)]
        if nested:
            raise ValueError(f"Configuration must be flat; nested sections found: {', '.join(nested)}")
        return {str(key): value for key, value in raw_config.items()}

    @staticmethod
    def parse_flat(text: str) -> Dict[str, Any]:
        """
        Parse `key = value` lines

        Blank lines and text after '#' are ignored. A repeated key keeps the last value.
        """
        config: Dict[str, Any] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            content = line.split("#", 1)[0].strip()
            if not content:
                continue
            if "=" not in content:
                raise ValueError(f"Line {lineno}: expected 'key = value', got {line.strip()!r}")
            key, value = content.split("=", 1)
            key = key.strip()
            if not key:
                raise ValueError(f"Line {lineno}: missing key")
            config[key] = value.strip()
        return config

    def get_config(self) -> Dict[str, Any]:
        """Get the parsed configuration"""
        return self.config
