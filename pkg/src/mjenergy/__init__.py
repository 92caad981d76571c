"""Operation-level energy modelling and energy-guided refactoring for MJ programs."""

__version__ = "0.1.0"
