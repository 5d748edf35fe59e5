"""
Synthetic degradation pipeline
"""

from .base import BaseDegradation, DegradationFactory
from .pipeline import DegradationParams, DegradationPipeline, degrade, degrade_corpus

__all__ = ["BaseDegradation", "DegradationFactory", "DegradationParams", "DegradationPipeline",
           "degrade", "degrade_corpus"]
