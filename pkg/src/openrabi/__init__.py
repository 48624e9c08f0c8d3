"""Dissipative anisotropic quantum Rabi model with the A^2 term.

Mean-field phase diagrams, stability, Gaussian fluctuations, semiclassical
trajectories and exact truncated-Fock steady states.
"""

from openrabi.params import ModelParams
from openrabi.errors import OpenRabiError

__version__ = "0.1.0"

__all__ = ["ModelParams", "OpenRabiError", "__version__"]
