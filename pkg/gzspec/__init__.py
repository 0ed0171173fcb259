"""Spectral calculus for Drazin, generalized Drazin and g_z-inverses."""

from gzspec.config import settings

__version__ = settings.VERSION
