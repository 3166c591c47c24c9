"""Minimum-cardinality constant-modulus beamforming: exact branch-and-bound and a swap heuristic."""

__version__ = "0.1.0"
