"""Adapter that encodes labeled text datasets into the advfilter
interchange format."""

__version__ = "0.1.0"
