"""Fractional Bergman operators on the upper half-plane: dyadic models,
weighted maximal functions, Bekolle-Bonami weight constants, and a harness
that checks the associated weighted inequalities numerically."""

__version__ = "0.1.0"
