"""Weighted orbit sums Theta_k, their asymptotic expansions and restriction checks."""

__version__ = "0.1.0"
