"""Polaron master-equation and correlation-expansion spectra for a quantum dot in structured photonic reservoirs."""

__version__ = "0.1.0"
