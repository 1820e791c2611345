"""Director fields on thin curved wires: geometry, reduced energies and minimisers."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .cross_section import CrossSection, DemagMatrix, demag_matrix, disk, polygon, square
from .errors import (ConfigError, ConstraintError, CurvemagError, GeometryError,
                     GridMismatchError, NormalizationError, ValidityError)
from .geometry import Curve, TubeChart, helix, line, ring
from .optimizer import MinimizeOptions, MinimizeReport, hessian_probe, minimize
from .perturbation import DMI, Ado, Custom, Linear
from .reduced_energy import BoundaryCondition, DirectorField, EnergyBreakdown, energy, gradient

__all__ = [
    "BACKEND", "Ado", "BoundaryCondition", "ConfigError", "ConstraintError", "CrossSection",
    "Curve", "CurvemagError", "Custom", "DMI", "DemagMatrix", "DirectorField",
    "EnergyBreakdown", "GeometryError", "GridMismatchError", "Linear", "MinimizeOptions",
    "MinimizeReport", "NormalizationError", "TubeChart", "ValidityError", "demag_matrix",
    "disk", "energy", "gradient", "helix", "hessian_probe", "line", "minimize", "polygon",
    "ring", "square",
]
