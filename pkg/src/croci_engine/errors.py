"""Shared exception base for the croci engine."""


class CrociError(Exception):
    """Base class for all errors raised by this package."""
