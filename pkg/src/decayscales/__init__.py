"""Decay rates of semigroups from resolvent growth at regularly varying scales."""

__version__ = "0.1.0"
