"""Desk-scale simulator of 5G EAP-AKA' / 5G-AKA authentication flows."""

__version__ = "0.1.0"
