"""Desk-scale numerical laboratory for supercritical branching fronts.

The package is organized around one object, a branching mechanism, and the
family of numerical experiments that probe its front behavior:

* ``mechanism``: mechanism algebra, hypothesis checks, normalization.
* ``csbp``: the total-mass ordinary differential equation and extinction.
* ``kpp``: reaction-diffusion solver, centering, and median tracking.
* ``feynman_kac``: path-integral representations and barrier diagnostics.
* ``fronts``: traveling waves and the front limit constants.
* ``particles``: branching-particle approximation of the measure process.
* ``extremal``: decorated Poisson point process sampling and identities.
* ``barriers``: blow-up profiles and strip confinement bounds.
"""

from .mechanism import (
    BranchingMechanism,
    LevyMeasure,
    MechanismError,
    NormalizedMechanism,
    check_hypotheses,
    k,
    lambda_star,
    mechanism_from_json,
    mechanism_to_json,
    normalize,
    psi,
)

__all__ = [
    "BranchingMechanism",
    "LevyMeasure",
    "MechanismError",
    "NormalizedMechanism",
    "check_hypotheses",
    "k",
    "lambda_star",
    "mechanism_from_json",
    "mechanism_to_json",
    "normalize",
    "psi",
]

__version__ = "0.1.0"
