"""Coupled-dipole simulator and evaluation pipeline for self-adaptive RIS in rich-scattering rooms."""

__version__ = "0.1.0"

from richris.kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND"]
