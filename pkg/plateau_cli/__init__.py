"""plateau-cli - Minimal discs in hyperbolic space bounded by knots"""

__version__ = "0.1.0"
