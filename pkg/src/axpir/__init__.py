"""Asymmetric X-secure PIR: grouping, schemes, audits and trade-off regions."""

__version__ = "0.1.0"
