"""
Image conventions, Gaussian kernels and the std* search
"""

from .image import Image, as_image, to_model, from_model, export_image
from .gaussian import (
    GaussianKernel,
    make_kernel,
    gaussian_taps,
    convolve,
    convolve_adjoint,
    kernel_std_derivative,
    blur,
)
from .std_search import StdGrid, StdSearchResult, find_std_star

__all__ = [
    "Image", "as_image", "to_model", "from_model", "export_image",
    "GaussianKernel", "make_kernel", "gaussian_taps", "convolve", "convolve_adjoint",
    "kernel_std_derivative", "blur",
    "StdGrid", "StdSearchResult", "find_std_star",
]
