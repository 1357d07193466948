"""Figure rendering for ehcap CSV artifacts.

Reads the CSV files written by the `ehcap` command line (ratio curves,
throughput sweeps, gap branches) and renders publication-style PNG and SVG
figures. All numbers are taken from the CSV as-is; nothing is recomputed.
"""

__version__ = "0.1.0"
