"""Dona: a conversational agent for student course registration."""

__version__ = "0.1.0"
