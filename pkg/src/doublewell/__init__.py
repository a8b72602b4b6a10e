"""Mean-field and two-mode numerics for bosons in a symmetric double well."""

__version__ = "0.1.0"
