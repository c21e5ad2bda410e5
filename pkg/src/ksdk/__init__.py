# src/ksdk/__init__.py
"""Pseudospectral lab for the Keller–Segel equation with conservative noise and its particle system."""

__version__ = "0.1.0"
