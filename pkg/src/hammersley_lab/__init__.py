"""Simulation and verification toolkit for Hammersley's process and the stick process."""

from .burgers import PiecewisePoly, entropy_solution, hopf_lax
from .hammersley import (ParticleConfig, WindowExhausted, WindowPolicy, evolve_event_driven,
                         evolve_variational)
from .increasing_seq import gamma, lis_length
from .poisson_plane import PlanarPoint, PointSet, PointStore, Rectangle
from .sticks import PerturbationProfile, StickConfig

__version__ = "0.1.0"

__all__ = [
    "PiecewisePoly", "entropy_solution", "hopf_lax",
    "ParticleConfig", "WindowExhausted", "WindowPolicy", "evolve_event_driven",
    "evolve_variational", "gamma", "lis_length",
    "PlanarPoint", "PointSet", "PointStore", "Rectangle",
    "PerturbationProfile", "StickConfig",
]
