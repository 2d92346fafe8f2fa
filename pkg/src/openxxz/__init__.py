"""Scalar products of Bethe vectors for the open XXZ chain, computed several independent ways."""

__version__ = "0.1.0"

from .numkernel import ModelParams, SpectralSets  # noqa: E402,F401
