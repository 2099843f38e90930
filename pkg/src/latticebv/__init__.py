"""Exact BV-formalism and anomaly identities on finite lattice models."""

from .deform import Deformation, FreeModel, twist
from .galg import FormalSeries, GradedPoly, Scalar, antifield, eta, field
from .rg import RenMap
from .sym import GroupElement, LieSymmetry

__version__ = "0.1.0"

__all__ = ["Deformation", "FreeModel", "twist", "FormalSeries", "GradedPoly", "Scalar", "antifield", "eta",
           "field", "RenMap", "GroupElement", "LieSymmetry", "__version__"]
