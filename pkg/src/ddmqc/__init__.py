"""Quantum computing with double-dot molecules coupled to a stripline resonator."""

__version__ = "0.1.0"
