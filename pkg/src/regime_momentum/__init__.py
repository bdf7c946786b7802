"""Regime-switching momentum portfolios and regime-aware dynamic allocation."""

__version__ = "0.1.0"
