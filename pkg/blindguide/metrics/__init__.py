"""
Quality metrics
"""

from .quality import MetricReport, consistency, evaluate_pair, psnr, sharpness, ssim

__all__ = ["MetricReport", "consistency", "evaluate_pair", "psnr", "sharpness", "ssim"]
