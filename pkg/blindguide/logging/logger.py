"""
Structured logging for blindguide
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, Dict, Any, Sequence

ROOT_LOGGER_NAME = "blindguide"


def get_logger(name: str) -> logging.Logger:
    """Child logger under the package namespace, for library modules"""
    if name == ROOT_LOGGER_NAME or name.startswith(ROOT_LOGGER_NAME + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")


class Logger:
    """Structured logger for blindguide runs"""

    def __init__(self, log_level: str = "INFO", log_dir: Optional[str] = "logs"):
        self.log_level = log_level.upper()
        self.log_dir = Path(log_dir) if log_dir else None
        self.log_file: Optional[Path] = None
        self.logger = None
        self._setup_logger()

    def _setup_logger(self):
        """Setup the logging configuration"""
        self.logger = logging.getLogger(ROOT_LOGGER_NAME)
        self.logger.setLevel(logging.DEBUG)
        self.logger.handlers.clear()

        detailed_formatter = logging.Formatter(
            '%(asctime)s | %(levelname)-8s | %(name)s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        console_formatter = logging.Formatter(
            '%(asctime)s | %(levelname)-8s | %(message)s',
            datefmt='%H:%M:%S'
        )

        # Console goes to stderr so that stdout stays clean for reports
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(getattr(logging, self.log_level))
        console_handler.setFormatter(console_formatter)
        self.logger.addHandler(console_handler)

        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            log_filename = f"blindguide_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
            self.log_file = self.log_dir / log_filename
            file_handler = logging.FileHandler(self.log_file, encoding='utf-8')
            file_handler.setLevel(logging.DEBUG)  # Always log everything to file
            file_handler.setFormatter(detailed_formatter)
            self.logger.addHandler(file_handler)

        self.debug(f"Logger initialized - Level: {self.log_level}, Log file: {self.log_file}")

    def debug(self, message: str, extra: Optional[Dict[str, Any]] = None):
        """Log debug message"""
        self._log(logging.DEBUG, message, extra)

    def info(self, message: str, extra: Optional[Dict[str, Any]] = None):
        """Log info message"""
        self._log(logging.INFO, message, extra)

    def warning(self, message: str, extra: Optional[Dict[str, Any]] = None):
        """Log warning message"""
        self._log(logging.WARNING, message, extra)

    def error(self, message: str, extra: Optional[Dict[str, Any]] = None):
        """Log error message"""
        self._log(logging.ERROR, message, extra)

    def _log(self, level: int, message: str, extra: Optional[Dict[str, Any]] = None):
        """Internal logging method"""
        self.logger.log(level, format_event(message, extra))

    def log_run_start(self, command: str, settings: Dict[str, Any]):
        """Log the start of a CLI command"""
        self.info(
            f"Run started: {command}",
            {"event_type": "run_start", "command": command, **settings}
        )

    def log_run_end(self, command: str, success: bool, duration: float):
        """Log the end of a CLI command"""
        status = "success" if success else "failure"
        self.info(
            f"Run {status}: {command} (duration: {duration:.2f}s)",
            {"event_type": "run_end", "command": command, "status": status, "duration": round(duration, 3)}
        )

    def log_stage_start(self, stage: str, image: str = ""):
        """Log a restoration stage starting"""
        self.debug(
            f"Stage started: {stage}",
            {"event_type": "stage_start", "stage": stage, "image": image}
        )

    def log_stage_end(self, stage: str, image: str = "", **values: Any):
        """Log a restoration stage finishing, with its headline values"""
        self.info(
            f"Stage done: {stage}",
            {"event_type": "stage_end", "stage": stage, "image": image, **values}
        )

    def log_step(self, t: int, residual: float, stds: Sequence[float], mean_scale: float):
        """Log one sampler step"""
        self.debug(
            f"Step t={t}",
            {
                "event_type": "sampler_step",
                "residual": f"{residual:.6g}",
                "stds": ",".join(f"{s:.3f}" for s in stds),
                "mean_scale": f"{mean_scale:.4f}",
            }
        )

    def log_training_progress(self, name: str, iteration: int, loss: float, stage: int = 1):
        """Log a training checkpoint"""
        self.info(
            f"{name} iteration {iteration}: loss={loss:.6g}",
            {"event_type": "training", "model": name, "iteration": iteration, "stage": stage}
        )


def format_event(message: str, extra: Optional[Dict[str, Any]] = None) -> str:
    """Render a message and its key=value context on one line"""
    if not extra:
        return message
    extra_str = " | ".join([f"{k}={v}" for k, v in extra.items()])
    return f"{message} | {extra_str}"
