"""Numerical checks for affine Poisson groupoids, loop-group holonomy and the AMM groupoid."""

from .lie import INSTANCE_NAMES, LieInstance, get_instance

__version__ = "0.1.0"

__all__ = ["INSTANCE_NAMES", "LieInstance", "get_instance", "__version__"]
