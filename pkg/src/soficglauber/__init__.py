"""Glauber dynamics and good models on sofic approximations of free groups."""
from ._backend import BACKEND
from .errors import InvalidInputError, ResourceLimitError

__version__ = "0.1.0"
__all__ = ["BACKEND", "InvalidInputError", "ResourceLimitError", "__version__"]
