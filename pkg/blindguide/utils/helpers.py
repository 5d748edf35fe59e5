"""
Helper utility functions
"""

import os
import re
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Union, IO


def substitute_variables(obj: Any) -> Any:
    """
    Recursively substitute environment variables in configuration values

    Supports ${ENV_VAR}; unknown variables are left untouched.

    Args:
        obj: Configuration object (dict, list, string, etc.)

    Returns:
        Object with variables substituted
    """
    if isinstance(obj, dict):
        return {key: substitute_variables(value) for key, value in obj.items()}
    elif isinstance(obj, list):
        return [substitute_variables(item) for item in obj]
    elif isinstance(obj, str):
        return _substitute_string_variables(obj)
    else:
        return obj


def _substitute_string_variables(text: str) -> str:
    """Substitute variables in a string"""
    env_pattern = r'\$\{([^}]+)\}'

    def replace_env_var(match):
        var_name = match.group(1)
        return os.getenv(var_name, match.group(0))  # Return original if not found

    return re.sub(env_pattern, replace_env_var, text)


def format_duration(seconds: float) -> str:
    """Format duration in seconds to human-readable string"""
    if seconds < 60:
        return f"{seconds:.2f}s"
    elif seconds < 3600:
        minutes = int(seconds // 60)
        secs = seconds % 60
        return f"{minutes}m {secs:.1f}s"
    else:
        hours = int(seconds // 3600)
        minutes = int((seconds % 3600) // 60)
        secs = seconds % 60
        return f"{hours}h {minutes}m {secs:.1f}s"


@contextmanager
def atomic_write(path: Union[str, Path], mode: str = "wb") -> Iterator[IO]:
    """
    Write to a temporary file next to `path` and rename it into place on success

    Readers never observe a half-written file.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    encoding = None if "b" in mode else "utf-8"
    try:
        with os.fdopen(fd, mode, encoding=encoding) as handle:
            yield handle
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def derive_seed(seed: int, index: int) -> int:
    """Per-item seed for batch work"""
    return int(seed) + int(index)
