"""Virtual gear generation (hobbing, Fellows shaping) and flank surface metrology."""

from .accuracy import ToothSet, deviation_report
from .areal import Heightmap, areal_parameters
from .errors import NOT_REACHED, UNDEFINED, GearFlankError, Missing
from .generation import FlankGrid, GenerationParams, extract_profile, simulate, simulate_fellows, simulate_hobbing
from .geometry import GearSpec, HobSpec, ShaperSpec, kinematic_deviation_estimate
from .profile import Profile, gaussian_filter, profile_parameters

__all__ = [
    "FlankGrid", "GearFlankError", "GearSpec", "GenerationParams", "Heightmap", "HobSpec", "Missing",
    "NOT_REACHED", "Profile", "ShaperSpec", "ToothSet", "UNDEFINED", "areal_parameters", "deviation_report",
    "extract_profile", "gaussian_filter", "kinematic_deviation_estimate", "profile_parameters", "simulate",
    "simulate_fellows", "simulate_hobbing",
]
