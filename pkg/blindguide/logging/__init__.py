"""
Logging module for blindguide
"""

from .logger import Logger, get_logger, format_event

__all__ = ["Logger", "get_logger", "format_event"]
