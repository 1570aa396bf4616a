"""Localize an AC-carrying straight conductor with two magnetometers and plan the grab."""

__version__ = "0.1.0"
