"""Low-order H(div)-conforming symmetric stress elements and a robust mixed
method for linear elasticity."""

__version__ = "0.1.0"
