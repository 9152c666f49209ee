"""Bipartite reductions and information measures on the 3x3 system space."""

from __future__ import annotations

import numpy as np
from scipy.linalg import logm

PINV_TOL = 1e-10
ENTROPY_CLAMP = 1e-8


def partial_trace_env(m: np.ndarray, dims: tuple[int, int] = (3, 3)) -> np.ndarray:
    """Trace out the environment factor of an operator on S (x) E.

    Tensor convention: flat index = d_E * i + j with the system as the slow
    (row-major) factor.
    """
    ds, de = dims
    m4 = np.asarray(m).reshape(ds, de, ds, de)
    return np.einsum("iaja->ij", m4)


def partial_trace_sys(m: np.ndarray, dims: tuple[int, int] = (3, 3)) -> np.ndarray:
    """Trace out the system factor of an operator on S (x) E."""
    ds, de = dims
    m4 = np.asarray(m).reshape(ds, de, ds, de)
    return np.einsum("aiaj->ij", m4)


def reduced_density(psi: np.ndarray, dims: tuple[int, int] = (3, 3)) -> np.ndarray:
    """System density matrix tr_E |psi><psi| of a composite pure state."""
    ds, de = dims
    a = np.asarray(psi).reshape(ds, de)
    return a @ a.conj().T


def pseudo_inverse(rho: np.ndarray, tol: float = PINV_TOL) -> np.ndarray:
    """Inverse of a PSD matrix on its support, zero on its kernel.

    Eigenvalues above tol * lambda_max are inverted, the rest dropped, so
    rho^-1 rho = 1 - P_ker up to rounding.
    """
    rho = np.asarray(rho, dtype=complex)
    values, vectors = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    vmax = float(values.max())
    if vmax < 1e-300:
        raise ValueError("cannot pseudo-invert a (numerically) zero matrix")
    inv = np.where(values > tol * vmax, 1.0 / np.where(values > tol * vmax, values, 1.0), 0.0)
    out = (vectors * inv) @ vectors.conj().T
    return 0.5 * (out + out.conj().T)


def support_rank(rho: np.ndarray, tol: float = PINV_TOL) -> int:
    """Number of eigenvalues above tol * lambda_max."""
    values = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    vmax = float(values.max())
    if vmax <= 0.0:
        return 0
    return int(np.sum(values > tol * vmax))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-tr(rho ln rho) with 0 ln 0 = 0; eigenvalues in [-1e-8, 0) clamp to 0."""
    values = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    if np.any(values < -ENTROPY_CLAMP):
        raise ValueError(f"density matrix has negative eigenvalue {values.min():.3e}")
    p = np.clip(values, 0.0, None)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def relative_entropy(rho: np.ndarray, tau: np.ndarray, support_tol: float = PINV_TOL) -> float:
    """Relative entropy -tr(rho (ln rho - ln tau)) with a principal matrix log.

    tau may be non-Hermitian (e.g. a parallel-transported density matrix) but
    must have spectrum in the open right half-plane for the principal log to
    exist.  If rho has weight on the kernel of a Hermitian tau the divergence
    is +inf.
    """
    rho = np.asarray(rho, dtype=complex)
    tau = np.asarray(tau, dtype=complex)

    pvals, pvecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    pvals = np.clip(pvals, 0.0, None)
    nz = pvals > 0.0
    tr_rho_lnrho = float(np.sum(pvals[nz] * np.log(pvals[nz])))

    tau_herm = np.max(np.abs(tau - tau.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(tau)))
    if tau_herm:
        tvals, tvecs = np.linalg.eigh(0.5 * (tau + tau.conj().T))
        tmax = float(np.max(np.abs(tvals)))
        ker = tvals <= support_tol * max(tmax, 1e-300)
        if np.any(ker):
            pk = tvecs[:, ker]
            if np.linalg.norm(pk.conj().T @ rho @ pk) > support_tol:
                return float("inf")
        safe = np.where(ker, 1.0, tvals)
        ln_tau = (tvecs * np.where(ker, 0.0, np.log(safe))) @ tvecs.conj().T
        # restrict to the support of tau; rho lives there by the check above
        tr_rho_lntau = np.trace(rho @ ln_tau)
    else:
        ev = np.linalg.eigvals(tau)
        if np.any(ev.real <= 0.0):
            raise ValueError(
                f"tau spectrum not in the right half-plane (min Re = {ev.real.min():.3e}); "
                "principal logarithm undefined"
            )
        ln_tau = logm(tau)
        tr_rho_lntau = np.trace(rho @ ln_tau)

    return float((tr_rho_lnrho - tr_rho_lntau).real)
