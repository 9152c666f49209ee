"""Time propagation along the pulse path and the derived observables.

The Schrodinger equation i hbar dpsi/dt = H(x(t)) psi is integrated with the
second-order difference (leapfrog) scheme, bootstrapped by one exact
exponential of H(t0).  The scheme is explicit and norm-stable for
dt ||H|| < 1; norm drift is recorded as a health signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import DressedPath, UniversePath, hamiltonian_norm_bound, pulse_path
from .model import ModelParams, PulseParams
from .reduction import reduced_density, von_neumann_entropy
from .spectral import eig_hermitian

STABILITY_LIMIT = 0.5
DEFAULT_DT = 1e-3
DEFAULT_STRIDE = 100


@dataclass
class TrajectoryRecord:
    times: np.ndarray          # stored times
    states: np.ndarray         # (n_stored, d) complex
    norms: np.ndarray          # (n_stored,) norms of the raw iterate
    dt: float
    stride: int

    @property
    def norm_drift(self) -> np.ndarray:
        return np.abs(self.norms - 1.0)

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def _expm_hermitian(h: np.ndarray, scale: complex) -> np.ndarray:
    values, vectors = np.linalg.eigh(h)
    return (vectors * np.exp(scale * values)) @ vectors.conj().T


def sod_propagate(
    psi0: np.ndarray,
    hamiltonian_t,
    t0: float,
    t_end: float,
    dt: float = DEFAULT_DT,
    hbar: float = 1.0,
    store_stride: int = DEFAULT_STRIDE,
    norm_bound: float | None = None,
) -> TrajectoryRecord:
    """Leapfrog integration psi_{n+1} = psi_{n-1} - (2 i dt / hbar) H(t_n) psi_n.

    norm_bound, when given, is an upper bound on ||H|| along the path used
    for the stability precondition dt ||H|| < 0.5.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    nrm = np.linalg.norm(psi0)
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError(f"initial state norm {nrm} != 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if norm_bound is not None and dt * norm_bound / hbar >= STABILITY_LIMIT:
        suggested = STABILITY_LIMIT * hbar / norm_bound / 2.0
        raise ValueError(
            f"dt * ||H|| = {dt * norm_bound / hbar:.3f} >= {STABILITY_LIMIT}; "
            f"reduce dt (suggested {suggested:.2e})"
        )

    n_steps = int(round((t_end - t0) / dt))
    times = [t0]
    states = [psi0]
    norms = [float(np.linalg.norm(psi0))]

    h0 = np.asarray(hamiltonian_t(t0), dtype=complex)
    psi_prev = psi0
    psi = _expm_hermitian(h0, -1j * dt / hbar) @ psi0

    coef = -2j * dt / hbar
    for n in range(1, n_steps):
        t_n = t0 + n * dt
        h = np.asarray(hamiltonian_t(t_n), dtype=complex)
        psi_next = psi_prev + coef * (h @ psi)
        psi_prev = psi
        psi = psi_next
        if n % store_stride == 0:
            nn = float(np.linalg.norm(psi))
            if not np.isfinite(nn):
                raise FloatingPointError(f"propagation diverged at step {n} (t = {t_n + dt})")
            times.append(t_n + dt)
            states.append(psi)
            norms.append(nn)
    if times[-1] < t0 + n_steps * dt - 1e-12:
        nn = float(np.linalg.norm(psi))
        if not np.isfinite(nn):
            raise FloatingPointError(f"propagation diverged at final step {n_steps}")
        times.append(t0 + n_steps * dt)
        states.append(psi)
        norms.append(nn)

    return TrajectoryRecord(
        times=np.asarray(times),
        states=np.asarray(states),
        norms=np.asarray(norms),
        dt=dt,
        stride=store_stride,
    )


def propagate_universe(
    weights,
    p: ModelParams,
    pp: PulseParams,
    dt: float = DEFAULT_DT,
    store_stride: int = DEFAULT_STRIDE,
) -> TrajectoryRecord:
    """Propagate the composite state from phi-label initial conditions."""
    from .fields import initial_universe_state, path_hamiltonian

    psi0 = initial_universe_state(weights, p)
    ham = path_hamiltonian(p, pp, "universe")
    bound = hamiltonian_norm_bound(p, pp)
    return sod_propagate(psi0, ham, pp.t0, pp.t_end, dt=dt, hbar=p.hbar,
                         store_stride=store_stride, norm_bound=bound)


def propagate_isolated(
    psi0_bare: np.ndarray,
    p: ModelParams,
    pp: PulseParams,
    dt: float = DEFAULT_DT,
    store_stride: int = DEFAULT_STRIDE,
) -> TrajectoryRecord:
    """Propagate the controlled atom alone (3-dimensional)."""
    from .fields import path_hamiltonian

    ham = path_hamiltonian(p, pp, "system")
    ts = np.linspace(pp.t0, pp.t_end, 201)
    bound = max(
        float(np.max(np.abs(np.linalg.eigvalsh(ham(t))))) for t in ts
    )
    return sod_propagate(np.asarray(psi0_bare, dtype=complex), ham, pp.t0, pp.t_end,
                         dt=dt, hbar=p.hbar, store_stride=store_stride, norm_bound=bound)


def occupations(
    traj: TrajectoryRecord,
    basis: str,
    p: ModelParams,
    pp: PulseParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Occupation probability series in one of three bases.

    bare: populations of the bare system states (diagonal of tr_E rho).
    system_instantaneous: tr_S(rho_psi P_i) with continued dressed projectors.
    universe_instantaneous: |<phi_a|psi>|^2 with continued composite frames.

    Returns (values, flagged); flagged marks times from the first
    continuation break onward.
    """
    nt = traj.times.shape[0]
    flagged = np.zeros(nt, dtype=bool)
    d = traj.dim

    if basis == "bare":
        if d == 3:
            vals = np.abs(traj.states) ** 2
        else:
            a = traj.states.reshape(nt, 3, 3)
            vals = np.einsum("tie,tie->ti", a, a.conj()).real
        return vals, flagged

    if basis == "system_instantaneous":
        walker = DressedPath(p, pp)
        vals = np.empty((nt, 3))
        broken = False
        for k, t in enumerate(traj.times):
            fs, _ = walker.frames_at(t)
            broken = broken or fs.continuation_break
            flagged[k] = broken
            if d == 3:
                amps = fs.vectors.conj().T @ traj.states[k]
                vals[k] = np.abs(amps) ** 2
            else:
                a = traj.states[k].reshape(3, 3)
                rho = a @ a.conj().T
                vals[k] = np.einsum("is,st,ti->i", fs.vectors.conj().T, rho, fs.vectors).real
        return vals, flagged

    if basis == "universe_instantaneous":
        if d != 9:
            raise ValueError("universe occupations need a composite trajectory")
        walker = UniversePath(p, pp)
        vals = np.empty((nt, 9))
        broken = False
        for k, t in enumerate(traj.times):
            fu = walker.frame_at(t)
            broken = broken or fu.continuation_break
            flagged[k] = broken
            amps = fu.vectors.conj().T @ traj.states[k]
            vals[k] = np.abs(amps) ** 2
        return vals, flagged

    raise ValueError(f"unknown basis {basis!r}")


def entropy_series(traj: TrajectoryRecord) -> np.ndarray:
    """Entanglement entropy of the reduced system state at stored times."""
    nt = traj.times.shape[0]
    out = np.zeros(nt)
    if traj.dim == 3:
        return out
    for k in range(nt):
        psi = traj.states[k]
        psi = psi / np.linalg.norm(psi)
        out[k] = von_neumann_entropy(reduced_density(psi))
    return out


@dataclass
class CrossingEvent:
    t: float
    x: tuple[float, float]
    labels: tuple[int, int]
    min_gap: float


def detect_events(
    pp: PulseParams,
    p: ModelParams,
    which: str = "system",
    gap_threshold: float = 0.05,
    dt_scan: float = 0.1,
) -> list[CrossingEvent]:
    """Locate avoided/real level crossings along the pulse path.

    Scans eigenvalue gaps between adjacent levels (in sorted order) on a
    time grid; strict interior local minima below the threshold are refined
    parabolically and reported with the continuation labels of the pair.
    """
    if gap_threshold < 0:
        raise ValueError("gap_threshold must be >= 0")
    ts = np.arange(pp.t0, pp.t_end + 0.5 * dt_scan, dt_scan)
    nt = ts.shape[0]

    if which == "system":
        from .fields import path_hamiltonian, system_seed

        ham = path_hamiltonian(p, pp, "system")
        seed = system_seed(p)
        d = 3
    elif which == "universe":
        from .fields import path_hamiltonian, universe_seed

        ham = path_hamiltonian(p, pp, "universe")
        seed = universe_seed(p)
        d = 9
    else:
        raise ValueError(f"unknown spectrum selector {which!r}")

    from .spectral import align_frame

    values = np.empty((nt, d))
    labels = np.empty((nt, d), dtype=int)
    ref = seed
    for k, t in enumerate(ts):
        fr = align_frame(eig_hermitian(ham(t)), ref)
        values[k] = fr.values
        labels[k] = fr.labels
        ref = fr

    order = np.argsort(values, axis=1, kind="stable")
    svals = np.take_along_axis(values, order, axis=1)
    gaps = np.diff(svals, axis=1)  # (nt, d-1)

    events: list[CrossingEvent] = []
    for m in range(d - 1):
        g = gaps[:, m]
        for k in range(1, nt - 1):
            if g[k] < gap_threshold and g[k] < g[k - 1] and g[k] <= g[k + 1]:
                denom = g[k + 1] - 2.0 * g[k] + g[k - 1]
                if denom > 0:
                    shift = 0.5 * (g[k - 1] - g[k + 1]) / denom
                    shift = float(np.clip(shift, -1.0, 1.0))
                else:
                    shift = 0.0
                t_star = ts[k] + shift * dt_scan
                g_star = g[k] - 0.25 * (g[k - 1] - g[k + 1]) * shift
                la = int(labels[k, order[k, m]])
                lb = int(labels[k, order[k, m + 1]])
                x = pulse_path(t_star, pp)
                events.append(CrossingEvent(
                    t=float(t_star),
                    x=(float(x[0]), float(x[1])),
                    labels=(min(la, lb), max(la, lb)),
                    min_gap=float(max(g_star, 0.0)),
                ))
    events.sort(key=lambda e: e.t)
    return events


def transfer_summary(traj: TrajectoryRecord) -> dict:
    """Final-state figures of merit: bare populations and entanglement entropy."""
    psi = traj.states[-1]
    psi = psi / np.linalg.norm(psi)
    if traj.dim == 3:
        pops = np.abs(psi) ** 2
        ent = 0.0
    else:
        a = psi.reshape(3, 3)
        rho = a @ a.conj().T
        pops = np.diag(rho).real
        ent = von_neumann_entropy(rho)
    return {
        "final_bare_populations": [float(v) for v in pops],
        "final_entropy": float(ent),
        "max_norm_drift": float(np.max(np.abs(traj.norms - 1.0))),
    }
