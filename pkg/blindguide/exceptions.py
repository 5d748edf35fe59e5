"""
Exception hierarchy for blindguide
"""

from typing import Any, List, Optional


class BlindGuideError(Exception):
    """Base class for every error raised by blindguide"""


class ParameterError(BlindGuideError, ValueError):
    """An argument is outside its admissible range"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DimensionError(BlindGuideError, ValueError):
    """Two images (or an image and a kernel) have incompatible shapes"""


class ConfigurationError(BlindGuideError, ValueError):
    """Configuration is invalid or a required artifact is missing"""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        self.errors = list(errors or [])
        if self.errors:
            message = message + ": " + "; ".join(self.errors)
        super().__init__(message)


class EstimationError(BlindGuideError, RuntimeError):
    """Blur-level estimation could not produce an answer"""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"[{code}] {message}")


class TableBuildError(BlindGuideError, RuntimeError):
    """The starting-step table could not be built from the corpus"""


class ContractViolation(BlindGuideError, RuntimeError):
    """A caller broke the documented pre-condition of an operation"""


class StageError(BlindGuideError, RuntimeError):
    """A restoration stage failed; carries the stage name"""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")


class TrainingDiverged(BlindGuideError, RuntimeError):
    """Training produced a non-finite loss"""

    def __init__(self, iteration: int, checkpoint: Any = None):
        self.iteration = iteration
        self.checkpoint = checkpoint
        super().__init__(f"loss became non-finite at iteration {iteration}")


class CorpusIOError(BlindGuideError, OSError):
    """Images in an ingest directory could not be read"""

    def __init__(self, path: str, files: List[str]):
        self.path = path
        self.files = list(files)
        super().__init__(f"unreadable images in {path}: {', '.join(self.files)}")
