"""Multiplicative orders of rationals modulo primes: certificates, densities, censuses."""

__version__ = "0.1.0"
