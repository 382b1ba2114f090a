"""
BNSL - Exact Bayesian Network Structure Learner
Branch-and-cut over parent-set family variables with BDeu scoring.
"""

__version__ = "1.0.0"
