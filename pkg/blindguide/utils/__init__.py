"""
Utility functions for blindguide
"""

from .helpers import substitute_variables, format_duration, atomic_write, derive_seed

__all__ = ["substitute_variables", "format_duration", "atomic_write", "derive_seed"]
