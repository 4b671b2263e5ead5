"""k-Hessian symmetric-function laboratory."""
__version__ = "0.1.0"
