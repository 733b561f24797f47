"""Information-theoretic maps of what drives a network's decisions on generated faces."""
from . import errors

__version__ = "0.1.0"
__all__ = ["errors", "__version__"]
