"""East-model simulation, hierarchical coalescence, and exact numerics."""

__version__ = "0.1.0"

from .domain_classes import class_of, class_range

__all__ = ["class_of", "class_range", "__version__"]
