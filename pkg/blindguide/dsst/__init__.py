"""
Starting-step lookup table
"""

from .table import DSSTable, DsstLookup, build_table, lookup, corpus_second_moment, statistic_gap, starting_step

__all__ = ["DSSTable", "DsstLookup", "build_table", "lookup", "corpus_second_moment", "statistic_gap",
           "starting_step"]
