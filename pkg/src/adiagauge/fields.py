"""Spectral fields and labeled frames for the two-atom control model.

Labeling convention: the composite eigenvectors phi_a continue from the
dressed products, phi_{3(alpha-1)+i} -> zeta_i (x) xi_alpha in the
weak-coupling limit, with zeta_i(0) = |i> and xi_alpha(0) = |alpha> at the
lasers-off corner of the manifold.  At x = 0 the product energies are
pairwise symmetric (both atoms carry the same detunings), so degenerate
clusters there are resolved by continuation from a short diagonal ray into
the interior of the manifold.
"""

from __future__ import annotations

import numpy as np

from .model import (
    ControlPoint,
    ModelParams,
    PulseParams,
    build_coupling,
    build_h_env,
    build_h_system,
    build_h_universe,
    product_index,
    pulse_path,
)
from .spectral import (
    Grid,
    SpectralField,
    SpectralFrame,
    align_frame,
    basis_reference_frame,
    eig_hermitian,
    spectral_field,
)

SEED_EPS = 1e-4
SEED_RAY_FAR = 2.0
SEED_RAY_STEPS = 60


def universe_label(i: int, alpha: int) -> int:
    """Continuation label a of the dressed product zeta_i (x) xi_alpha (1-based)."""
    return 3 * (alpha - 1) + i


def label_factors(a: int) -> tuple[int, int]:
    """Inverse of universe_label: a -> (i, alpha), all 1-based."""
    i = (a - 1) % 3 + 1
    alpha = (a - 1) // 3 + 1
    return i, alpha


def system_seed(p: ModelParams) -> SpectralFrame:
    """Gauge-fixed system frame at x = 0, labels pinned to the bare basis."""
    h0 = build_h_system((0.0, 0.0), p)
    ref = basis_reference_frame(np.diag(h0).real, point=(0.0, 0.0))
    return align_frame(eig_hermitian(h0, point=(0.0, 0.0)), ref)


def env_seed(p: ModelParams) -> SpectralFrame:
    h0 = build_h_env((0.0, 0.0), p)
    ref = basis_reference_frame(np.diag(h0).real, point=(0.0, 0.0))
    return align_frame(eig_hermitian(h0, point=(0.0, 0.0)), ref)


def system_field(grid: Grid, p: ModelParams, **kw) -> SpectralField:
    return spectral_field(grid, lambda x: build_h_system(x, p), system_seed(p), **kw)


def env_field(grid: Grid, p: ModelParams, **kw) -> SpectralField:
    return spectral_field(grid, lambda x: build_h_env(x, p), env_seed(p), **kw)


def _product_reference(frame_s: SpectralFrame, frame_e: SpectralFrame, point) -> SpectralFrame:
    """Frame of dressed products zeta_i (x) xi_alpha in universe label order."""
    vectors = np.empty((9, 9), dtype=complex)
    values = np.empty(9)
    for alpha in range(1, 4):
        for i in range(1, 4):
            slot = universe_label(i, alpha) - 1
            vectors[:, slot] = np.kron(frame_s.vectors[:, i - 1], frame_e.vectors[:, alpha - 1])
            values[slot] = frame_s.values[i - 1] + frame_e.values[alpha - 1]
    return SpectralFrame(values=values, vectors=vectors, labels=np.arange(1, 10), point=point)


def _ray_points(far: float, eps: float, steps: int) -> np.ndarray:
    return np.geomspace(far, eps, steps)


def universe_seed(
    p: ModelParams,
    eps: float = SEED_EPS,
    ray_far: float = SEED_RAY_FAR,
    ray_steps: int = SEED_RAY_STEPS,
) -> SpectralFrame:
    """Universe frame at x = 0 under the continuation labeling convention.

    Uncoupled slots carry exact bare products.  With a nonzero coupling the
    |2,3>/|3,2> pair is degenerate at the origin and hybridizes; the two
    combinations get labels 6 and 8 by continuation from a point eps into
    the interior along the diagonal.
    """
    h_s0 = build_h_system((0.0, 0.0), p)
    d0 = np.diag(h_s0).real
    vectors = np.zeros((9, 9), dtype=complex)
    values = np.empty(9)
    for alpha in range(1, 4):
        for i in range(1, 4):
            slot = universe_label(i, alpha) - 1
            vectors[product_index(i, alpha), slot] = 1.0
            values[slot] = d0[i - 1] + d0[alpha - 1]

    coupled = p.coupling_kind != "none" and p.g > 0.0
    if not coupled:
        return SpectralFrame(values=values, vectors=vectors, labels=np.arange(1, 10), point=(0.0, 0.0))

    # continue dressed frames up the diagonal, then walk the universe frame
    # back down to eps to find which hybridized combination owns which label
    ray = _ray_points(ray_far, eps, ray_steps)
    fs = system_seed(p)
    fe = env_seed(p)
    frames_up = []
    for w in ray[::-1]:
        x = (w, w)
        fs = align_frame(eig_hermitian(build_h_system(x, p), point=x), fs)
        fe = align_frame(eig_hermitian(build_h_env(x, p), point=x), fe)
        frames_up.append((fs, fe))
    frames_down = frames_up[::-1]

    uref = None
    for w, (fs_w, fe_w) in zip(ray, frames_down):
        x = (w, w)
        hu = build_h_universe(x, p, frames_s=fs_w, frames_e=fe_w)
        raw = eig_hermitian(hu, point=x)
        if uref is None:
            uref = align_frame(raw, _product_reference(fs_w, fe_w, x))
        else:
            uref = align_frame(raw, uref)

    slot6, slot8 = 5, 7
    fa, fb = product_index(2, 3), product_index(3, 2)
    sym = np.zeros(9, dtype=complex)
    anti = np.zeros(9, dtype=complex)
    sym[fa] = sym[fb] = 1.0 / np.sqrt(2.0)
    anti[fa], anti[fb] = 1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0)
    e_mid = d0[1] + d0[2]
    for slot in (slot6, slot8):
        ref_vec = uref.vectors[:, slot]
        o_sym = np.vdot(ref_vec, sym)
        o_anti = np.vdot(ref_vec, anti)
        if abs(o_sym) >= abs(o_anti):
            vec, ov, val = sym, o_sym, e_mid + p.g
        else:
            vec, ov, val = anti, o_anti, e_mid - p.g
        phase = ov / abs(ov)
        vectors[:, slot] = vec * phase
        values[slot] = val
    return SpectralFrame(values=values, vectors=vectors, labels=np.arange(1, 10), point=(0.0, 0.0))


def universe_field(grid: Grid, p: ModelParams, seed: SpectralFrame | None = None, **kw):
    """Spectral field of the composite Hamiltonian over a lattice.

    For the dynamical coupling the per-node V uses the sweep-fixed dressed
    frames of both atoms on the same grid.  Returns (field, field_s, field_e).
    """
    fs = system_field(grid, p, **kw)
    fe = env_field(grid, p, **kw)
    if seed is None:
        seed = universe_seed(p)

    if p.coupling_kind == "dynamical" and p.g > 0.0:
        def node_of(x):
            i = int(round((x[0] - grid.origin[0]) / grid.spacing[0]))
            j = int(round((x[1] - grid.origin[1]) / grid.spacing[1]))
            return i, j

        def ham(x):
            i, j = node_of(x)
            return build_h_universe(x, p, frames_s=fs.frame(i, j), frames_e=fe.frame(i, j))
    else:
        def ham(x):
            return build_h_universe(x, p)

    fu = spectral_field(grid, ham, seed, **kw)
    return fu, fs, fe


def initial_universe_state(weights, p: ModelParams) -> np.ndarray:
    """Composite state sum_a c_a phi_a(0), normalized.

    weights: either a single 1-based label or a sequence of (label, coeff).
    """
    seed = universe_seed(p)
    if np.isscalar(weights):
        weights = [(int(weights), 1.0)]
    psi = np.zeros(9, dtype=complex)
    for label, c in weights:
        psi += complex(c) * seed.vectors[:, int(label) - 1]
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValueError("initial state has zero norm")
    return psi / n


class DressedPath:
    """Sequential continuation of the dressed one-atom frames along the pulse path.

    Calls must be time-ordered; calling with an earlier time restarts the
    walk from the anchor at t0.
    """

    def __init__(self, p: ModelParams, pp: PulseParams):
        self.p = p
        self.pp = pp
        self._reset()

    def _reset(self):
        x0 = pulse_path(self.pp.t0, self.pp)
        self._fs = align_frame(eig_hermitian(build_h_system(x0, self.p), point=x0), system_seed(self.p))
        self._fe = align_frame(eig_hermitian(build_h_env(x0, self.p), point=x0), env_seed(self.p))
        self._t = self.pp.t0

    def frames_at(self, t: float) -> tuple[SpectralFrame, SpectralFrame]:
        if t < self._t - 1e-12:
            self._reset()
        x = pulse_path(t, self.pp)
        self._fs = align_frame(eig_hermitian(build_h_system(x, self.p), point=x), self._fs)
        self._fe = align_frame(eig_hermitian(build_h_env(x, self.p), point=x), self._fe)
        self._t = t
        return self._fs, self._fe


class UniversePath:
    """Sequential continuation of the composite frame along the pulse path."""

    def __init__(self, p: ModelParams, pp: PulseParams):
        self.p = p
        self.pp = pp
        self._dressed = DressedPath(p, pp) if p.coupling_kind == "dynamical" else None
        self._reset()

    def _reset(self):
        if self._dressed is not None:
            self._dressed._reset()
        self._fu = universe_seed(self.p)
        self._t = None

    def hamiltonian_at(self, t: float) -> np.ndarray:
        x = pulse_path(t, self.pp)
        if self._dressed is not None:
            fs, fe = self._dressed.frames_at(t)
            return build_h_universe(x, self.p, frames_s=fs, frames_e=fe)
        return build_h_universe(x, self.p)

    def frame_at(self, t: float) -> SpectralFrame:
        if self._t is not None and t < self._t - 1e-12:
            self._reset()
        x = pulse_path(t, self.pp)
        self._fu = align_frame(eig_hermitian(self.hamiltonian_at(t), point=x), self._fu)
        self._t = t
        return self._fu


def path_hamiltonian(p: ModelParams, pp: PulseParams, which: str = "universe"):
    """Callable t -> H(x(t)) for propagation.

    For the dynamical coupling the returned callable is stateful and must be
    driven with non-decreasing times (it restarts from t0 otherwise).
    """
    if which == "system":
        return lambda t: build_h_system(pulse_path(t, pp), p)
    if which == "env":
        return lambda t: build_h_env(pulse_path(t, pp), p)
    if which != "universe":
        raise ValueError(f"unknown hamiltonian selector {which!r}")
    if p.coupling_kind == "dynamical" and p.g > 0.0:
        walker = DressedPath(p, pp)

        def ham(t):
            fs, fe = walker.frames_at(t)
            return build_h_universe(pulse_path(t, pp), p, frames_s=fs, frames_e=fe)

        return ham
    return lambda t: build_h_universe(pulse_path(t, pp), p)


def hamiltonian_norm_bound(p: ModelParams, pp: PulseParams, samples: int = 201) -> float:
    """Upper bound on ||H_U|| along the path (triangle inequality over parts)."""
    ts = np.linspace(pp.t0, pp.t_end, samples)
    peak = 0.0
    for t in ts:
        x = pulse_path(t, pp)
        ns = float(np.max(np.abs(np.linalg.eigvalsh(build_h_system(x, p)))))
        ne = float(np.max(np.abs(np.linalg.eigvalsh(build_h_env(x, p)))))
        peak = max(peak, ns + ne + p.g)
    return peak
