"""Clue-guided cross-lingual summarization toolkit."""

__version__ = "0.1.0"
