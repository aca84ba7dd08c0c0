"""Event-triggered intermittent attitude tracking: simulation and certificate checks."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
