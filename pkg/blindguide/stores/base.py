"""
Base image store interface and factory
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..logging.logger import Logger, get_logger


class BaseImageStore(ABC):
    """Abstract base class for directories of images"""

    suffix = ""

    def __init__(self, path: Union[str, Path], logger: Optional[Logger] = None):
        self.base_path = Path(path)
        self.logger = logger or get_logger("stores")

    @abstractmethod
    def read_image(self, name: str) -> np.ndarray:
        """
        Read one image

        Args:
            name: Image name without suffix

        Returns:
            Unit-range float64 array of shape (H, W, C)
        """

    @abstractmethod
    def write_image(self, name: str, image: np.ndarray) -> Path:
        """
        Write one image atomically

        Returns:
            Path of the written file
        """

    def list_images(self) -> List[str]:
        """Names of all images in this store, sorted"""
        if not self.base_path.exists():
            return []
        return sorted(p.stem for p in self.base_path.glob(f"*{self.suffix}"))

    def image_exists(self, name: str) -> bool:
        return self.path_for(name).exists()

    def path_for(self, name: str) -> Path:
        """Full path of an image; a name that already carries the suffix is kept as is"""
        if name.endswith(self.suffix):
            return self.base_path / name
        return self.base_path / f"{name}{self.suffix}"

    def read_all(self) -> np.ndarray:
        """Stack every image into an (N, H, W, C) array"""
        names = self.list_images()
        if not names:
            raise ValueError(f"no {self.suffix} images in {self.base_path}")
        return np.stack([self.read_image(name) for name in names])


class StoreFactory:
    """Factory for creating image store instances"""

    def __init__(self, logger: Optional[Logger] = None):
        self.logger = logger

    def create_store(self, path: Union[str, Path], image_format: Optional[str] = None) -> BaseImageStore:
        """
        Create an image store for a directory

        Args:
            path: Directory of images
            image_format: "png" or "bgt"; inferred from the directory contents when omitted

        Raises:
            ValueError: If the format is not supported
        """
        image_format = image_format or self._infer_format(Path(path))
        if image_format == "png":
            from .filesystem import PngImageStore
            return PngImageStore(path, self.logger)
        elif image_format == "bgt":
            from .filesystem import RawTensorStore
            return RawTensorStore(path, self.logger)
        else:
            raise ValueError(f"Unsupported image format: {image_format}")

    @staticmethod
    def _infer_format(path: Path) -> str:
        if path.exists() and any(path.glob("*.bgt")) and not any(path.glob("*.png")):
            return "bgt"
        return "png"
