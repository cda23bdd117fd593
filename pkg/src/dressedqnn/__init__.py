"""Dressed variational quantum classifiers on a built-in statevector simulator."""
from .qstate import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
