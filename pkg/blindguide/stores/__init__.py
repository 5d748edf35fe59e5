"""
Image and tensor stores for blindguide
"""

from .base import BaseImageStore, StoreFactory
from .filesystem import PngImageStore, RawTensorStore, load_image, save_image

__all__ = ["BaseImageStore", "StoreFactory", "PngImageStore", "RawTensorStore", "load_image", "save_image"]
