"""Exact interface-condition analysis and a mapped-grid free-boundary solver."""

from .exact_linalg import Matrix, Poly
from .interface_model import InterfaceSystem, classify, normal_form
from .kernels import BACKEND
from .porous_case import PorousParams, build_porous_system, flat_base_state
from .stability import SpectralMode, VelocityChoice, rank_velocities, stiffness, wellposedness_form

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "InterfaceSystem",
    "Matrix",
    "Poly",
    "PorousParams",
    "SpectralMode",
    "VelocityChoice",
    "build_porous_system",
    "classify",
    "flat_base_state",
    "normal_form",
    "rank_velocities",
    "stiffness",
    "wellposedness_form",
]
