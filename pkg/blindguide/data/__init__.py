"""
Toy datasets
"""

from .synth import synth_corpus, ingest_directory

__all__ = ["synth_corpus", "ingest_directory"]
