"""Adiabatic gauge fields for bipartite three-level quantum control.

The package builds a pair of driven three-level atoms (system + environment),
diagonalizes the composite Hamiltonian over a lattice of Rabi-frequency
control parameters, and evaluates the differential-geometric objects that
diagnose adiabatic control quality under entanglement: Berry curvature,
the operator-valued connection of the reduced system, its curving and fake
curvature, statistical field averages, eigenstate entanglement entropy, and
holonomies.  A leapfrog propagator integrates the composite Schrodinger
equation along Gaussian pulse paths so chart features can be matched against
actual population transfer.
"""

from .model import ControlPoint, ModelParams, PulseParams
from .spectral import Grid, SpectralField, SpectralFrame

__all__ = [
    "ControlPoint",
    "ModelParams",
    "PulseParams",
    "Grid",
    "SpectralField",
    "SpectralFrame",
]

__version__ = "0.1.0"
