"""Exact finite-resolution checks for ball-expanding maps and their chain dynamics."""

__version__ = "0.1.0"
