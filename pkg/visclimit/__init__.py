"""
visclimit - numerical lab for the vanishing-viscosity limit of (-1)-homogeneous
axisymmetric no-swirl Navier-Stokes solutions.
"""
from .errors import VisclimitError
from .polyparams import Coeffs, classify, in_J
from .riccati import Branch, SolutionProfile, solve
from .settings import LabSettings

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "Coeffs",
    "LabSettings",
    "SolutionProfile",
    "VisclimitError",
    "classify",
    "in_J",
    "solve",
]
