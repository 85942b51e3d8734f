"""Numerical laboratory for sectorial operators: contour functional calculus,
s-power norms, R_s-bound estimation and Triebel-Lizorkin experiments on finite grids.
"""

__version__ = "0.1.0"
