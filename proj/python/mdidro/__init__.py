"""Minimum-discriminating-information distributionally robust optimization.

Thin python surface over the C++ core: discrete distributions, moment sets,
entropy projection with convergence certificates, KL-ball worst-case risk,
finite-sample bounds, tabular-MDP off-policy evaluation and the synthetic
dataset generators.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
