"""Desk-scale Dirichlet solvers for sigma_k(D^2 u) = f and Pogorelov/rigidity diagnostics."""
from .radial import RadialProfile, radial_closed_form, radial_solve, radial_residual
