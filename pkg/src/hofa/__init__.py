"""Computational higher-order Fourier analysis on finite abelian groups and finite nilspaces."""

__version__ = "0.1.0"

from ._config import BudgetExceeded, HofaError, InvariantFailure, StructuralError  # noqa: E402
from .abelian import Character, GroupElement, GroupFunction, GroupSpec, dft, inverse_dft  # noqa: E402
from .gowers import FunctionSystem, gowers_norm, gowers_power  # noqa: E402

__all__ = [
    "__version__", "BudgetExceeded", "HofaError", "InvariantFailure", "StructuralError",
    "Character", "GroupElement", "GroupFunction", "GroupSpec", "dft", "inverse_dft",
    "FunctionSystem", "gowers_norm", "gowers_power",
]
