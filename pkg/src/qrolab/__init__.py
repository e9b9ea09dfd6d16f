"""qrolab: desk-scale simulation and verification of extractable RO-simulation."""

__version__ = "0.1.0"
