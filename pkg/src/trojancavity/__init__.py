"""Classical and quantum analysis of an electron on a Rydberg orbit coupled to two cavity modes."""

__version__ = "0.1.0"

from .cavity import CavityConfig, ModeConstants, REFERENCE_CAVITY, derive_mode_constants  # noqa: E402
from .classical import Branch, PhaseState, SystemParams, equilibrium_state  # noqa: E402
from .gaussian import AMatrix, QuadraticParams, solve_ground_state  # noqa: E402
from .observables import CovarianceMatrix, covariance_from_a  # noqa: E402
from .stability import eigenfrequencies, linearize, stability_map  # noqa: E402

__all__ = [
    "AMatrix", "Branch", "CavityConfig", "CovarianceMatrix", "ModeConstants", "PhaseState",
    "QuadraticParams", "REFERENCE_CAVITY", "SystemParams", "covariance_from_a",
    "derive_mode_constants", "eigenfrequencies", "equilibrium_state", "linearize",
    "solve_ground_state", "stability_map",
]
