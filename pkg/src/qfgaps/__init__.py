"""Gap certificates for values of binary quadratic forms, coprime harmonic
sums with explicit error terms, and exhaustive character-sum checks."""

__version__ = "0.1.0"
