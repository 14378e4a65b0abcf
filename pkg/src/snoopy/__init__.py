"""Feasibility studies for ML datasets.

Estimates the Bayes error rate of a classification dataset from precomputed
feature transformations using streaming 1NN lower-bound estimators scheduled
by a successive-halving bandit, and reports whether a target accuracy is
REALISTIC or UNREALISTIC.
"""

from snoopy.errors import SnoopyError

__version__ = "0.1.0"

__all__ = ["SnoopyError", "__version__"]
