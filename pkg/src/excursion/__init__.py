"""Excursions of integer-valued random walks: exact oracle, asymptotics and simulation."""

__version__ = "0.1.0"
