"""Parameter, FLOP and memory accounting, scaling-law fits and runtime models."""

__version__ = '0.1.0'
