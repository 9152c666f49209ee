"""Hamiltonians, couplings and pulse path for the two-atom control model.

System and environment are three-level atoms driven by the same pump/Stokes
pulse pair in the rotating wave approximation; the environment sees the Rabi
frequencies divided by an attenuation factor.  The composite ("universe")
Hamiltonian adds an inter-atom coupling, either static in the bare product
basis or built dynamically from the dressed states.  Atomic units with
hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

COUPLING_KINDS = ("none", "static", "dynamical")

# Default laser detunings (au).  Nonzero values give the pulse path real
# level crossings (rapid adiabatic passages) and let the dynamical coupling
# actually disturb the transfer; exact resonance would leave the dark
# channel exactly decoupled.
DEFAULT_DELTA_P = -0.25
DEFAULT_DELTA_S = 0.75


class ControlPoint(NamedTuple):
    """Point (Omega_P, Omega_S) on the control manifold, both >= 0."""

    omega_p: float
    omega_s: float


@dataclass
class ModelParams:
    delta_p: float = DEFAULT_DELTA_P
    delta_s: float = DEFAULT_DELTA_S
    g: float = 0.0
    coupling_kind: str = "none"
    attenuation: float = 2.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"coupling strength must be >= 0, got {self.g}")
        if self.attenuation <= 0:
            raise ValueError(f"attenuation must be > 0, got {self.attenuation}")
        if self.coupling_kind not in COUPLING_KINDS:
            raise ValueError(
                f"coupling_kind must be one of {COUPLING_KINDS}, got {self.coupling_kind!r}"
            )


@dataclass
class PulseParams:
    omega0: float = 3.5
    t_p: float = 70.0
    t_s: float = 20.0
    tau_p: float = 30.0
    tau_s: float = 30.0
    t0: float = -60.0
    t_end: float = 140.0

    def __post_init__(self):
        if self.tau_p <= 0 or self.tau_s <= 0:
            raise ValueError("pulse widths must be > 0")
        if self.t0 >= self.t_end:
            raise ValueError("time window must satisfy t0 < t_end")


def build_h_system(x, p: ModelParams) -> np.ndarray:
    """RWA Hamiltonian of the controlled atom at control point x."""
    op, os_ = float(x[0]), float(x[1])
    h = 0.5 * p.hbar * np.array(
        [
            [0.0, op, 0.0],
            [op, 2.0 * p.delta_p, os_],
            [0.0, os_, 2.0 * (p.delta_p - p.delta_s)],
        ],
        dtype=complex,
    )
    return h


def build_h_env(x, p: ModelParams) -> np.ndarray:
    """Environment atom Hamiltonian: same detunings, attenuated Rabi frequencies."""
    xa = (float(x[0]) / p.attenuation, float(x[1]) / p.attenuation)
    return build_h_system(xa, p)


def product_index(i: int, j: int) -> int:
    """Flat tensor index of |i,j> = |i> (x) |j>, 1-based atomic labels.

    System is the slow (row-major) factor: |i,j> -> 3(i-1) + (j-1).
    """
    return 3 * (i - 1) + (j - 1)


def build_coupling(x, p: ModelParams, frames_s=None, frames_e=None) -> np.ndarray:
    """Inter-atom coupling operator V on the 9-dimensional product space.

    'static' couples the bare products |2,3> and |3,2|; 'dynamical' couples
    the corresponding dressed products built from the supplied gauge-fixed
    eigenframes of the system and environment Hamiltonians at x.
    """
    v = np.zeros((9, 9), dtype=complex)
    if p.coupling_kind == "none" or p.g == 0.0:
        return v
    if p.coupling_kind == "static":
        a, b = product_index(2, 3), product_index(3, 2)
        v[a, b] = p.g
        v[b, a] = p.g
        return v
    if frames_s is None or frames_e is None:
        raise ValueError("dynamical coupling requires gauge-fixed system and environment frames")
    zeta2 = frames_s.vectors[:, 1]
    zeta3 = frames_s.vectors[:, 2]
    xi2 = frames_e.vectors[:, 1]
    xi3 = frames_e.vectors[:, 2]
    ket = np.kron(zeta2, xi3)
    bra = np.kron(zeta3, xi2)
    d = np.outer(ket, bra.conj())
    v += p.g * (d + d.conj().T)
    return v


def build_h_universe(x, p: ModelParams, frames_s=None, frames_e=None) -> np.ndarray:
    """Composite Hamiltonian H_S (x) 1 + 1 (x) H_E + V at control point x."""
    hs = build_h_system(x, p)
    he = build_h_env(x, p)
    eye = np.eye(3)
    h = np.kron(hs, eye) + np.kron(eye, he)
    h += build_coupling(x, p, frames_s=frames_s, frames_e=frames_e)
    return h


def pulse_path(t, pp: PulseParams) -> ControlPoint:
    """Gaussian pump/Stokes pulse pair evaluated at time t (Stokes first)."""
    op = pp.omega0 * np.exp(-((t - pp.t_p) ** 2) / pp.tau_p**2)
    os_ = pp.omega0 * np.exp(-((t - pp.t_s) ** 2) / pp.tau_s**2)
    if np.ndim(t) == 0:
        return ControlPoint(float(op), float(os_))
    return ControlPoint(np.asarray(op), np.asarray(os_))
