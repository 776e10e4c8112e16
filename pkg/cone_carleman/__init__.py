"""Numerical laboratory for backward uniqueness of the heat equation in cones.

The package evaluates the Carleman weights used to prove backward uniqueness outside a
cone, certifies the convexity condition that fixes the critical opening angle, checks
the weighted Carleman inequalities by quadrature on compactly supported test functions,
evaluates the explicit counterexample in a narrow sector and runs finite-difference
heat experiments (ball decay, sector cross-check, boundary control).

Modules:
    geometry: cones, boundary distance and seeded sampling of the space-time domain.
    weights: the weight functions and the operator decomposition of the conjugated
        heat operator.
    positivity: the convexity certificate, the minimal exponent and positivity scans.
    counterexample: the explicit solution that vanishes at the final time.
    verify: quadrature checks of the Carleman inequalities and the energy identity.
    heatfd: radial and polar-sector heat solvers.
    cli: the `cone-carleman` command.
"""

import logging

from . import models
from .errors import ConfigError, NumericalError, NumericalErrorReason, ParameterError

# The publicly accessible classes for this module
__all__ = [
    "ConfigError",
    "NumericalError",
    "NumericalErrorReason",
    "ParameterError",
    "models",
]

# Tells pdoc how to parse the doc strings in this module
__docformat__ = "google"

# Allows for consuming applications to look at log messages if they'd like
_LOGGER = logging.getLogger(__name__)
_LOGGER.addHandler(logging.NullHandler())
