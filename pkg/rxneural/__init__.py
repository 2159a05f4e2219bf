"""Rotational-XOR neural distinguishers and key recovery for Simon32/64 and Simeck32/64."""

__version__ = "0.1.0"
