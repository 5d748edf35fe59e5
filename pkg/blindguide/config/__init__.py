"""
Configuration management module for blindguide
"""

from .parser import ConfigParser
from .validator import ConfigValidator, ValidationResult
from .settings import RunConfig, LAMBDA_PRESETS, load_config

__all__ = ["ConfigParser", "ConfigValidator", "ValidationResult", "RunConfig", "LAMBDA_PRESETS", "load_config"]
