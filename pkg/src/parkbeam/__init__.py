"""parkbeam: assign antenna-level mobile traffic to urban zones and
profile those zones by app usage, temporal patterns, and clustering."""

__version__ = "0.1.0"
