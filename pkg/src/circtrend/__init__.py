"""Kernel estimation of circular trend surfaces under spatial correlation.

Nadaraya-Watson and local-linear smoothers for angular responses observed
at spatial locations, bandwidth selection by cross-validation and its
neighbourhood-excluding variant, simulators for wrapped and projected
Gaussian error fields, and the asymptotic error formulas.
"""

from .circular import *  # noqa: F401,F403
from .kernels import *  # noqa: F401,F403
from .estimators import *  # noqa: F401,F403
from .bandwidth import *  # noqa: F401,F403
from .simplex import *  # noqa: F401,F403
from .spatial import *  # noqa: F401,F403
from .theory import *  # noqa: F401,F403
from .evaluation import *  # noqa: F401,F403
from . import bandwidth, circular, estimators, evaluation, kernels, simplex, spatial, theory

__version__ = "0.1.0"

__all__ = [name for mod in (circular, kernels, estimators, bandwidth, simplex, spatial, theory,
                            evaluation) for name in mod.__all__]
