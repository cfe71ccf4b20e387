"""DynAcq - dynamic feature acquisition driven by conditional mutual information."""

__version__ = "1.0.0"
