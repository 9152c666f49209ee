"""Hermitian eigenframes with deterministic ordering and phase gauge fixing.

Eigenvector fields over the control manifold must be continuous for finite
differencing to mean anything.  The raw eigensolver output carries arbitrary
column order and phases, so frames are aligned to a reference (the previous
node of a sweep, or a seed at the anchor point): columns are permuted by
greedy maximum overlap and rotated so the overlap with the reference column
is real positive.  The same rule applied twice is the identity, which makes
the lattice gauge exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_OVERLAP_FLOOR = 0.5
HERMITICITY_RTOL = 1e-10


@dataclass
class Grid:
    """Uniform rectangular lattice on the control manifold."""

    origin: tuple[float, float]
    spacing: tuple[float, float]
    shape: tuple[int, int]

    @classmethod
    def square(cls, extent: float, n: int, origin: tuple[float, float] = (0.0, 0.0)) -> "Grid":
        if n < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        h = (extent - 0.0) / (n - 1)
        return cls(origin=origin, spacing=(h, h), shape=(n, n))

    @classmethod
    def rectangle(cls, lo: tuple[float, float], hi: tuple[float, float], shape: tuple[int, int]) -> "Grid":
        n1, n2 = shape
        return cls(
            origin=(lo[0], lo[1]),
            spacing=((hi[0] - lo[0]) / (n1 - 1), (hi[1] - lo[1]) / (n2 - 1)),
            shape=shape,
        )

    def point(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + i * self.spacing[0], self.origin[1] + j * self.spacing[1])

    def axis(self, mu: int) -> np.ndarray:
        return self.origin[mu] + self.spacing[mu] * np.arange(self.shape[mu])


@dataclass
class SpectralFrame:
    """Eigenpairs of one Hermitian matrix, slot k <-> continuation label labels[k].

    values follow the label order, not the magnitude order, once the frame
    has been aligned to a reference.
    """

    values: np.ndarray
    vectors: np.ndarray
    labels: np.ndarray
    point: tuple[float, float] | None = None
    continuation_break: bool = False
    min_overlap: float = np.nan

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def _fix_column_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    v = vectors.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        idx = int(np.argmax(np.abs(col)))
        entry = col[idx]
        mag = abs(entry)
        if mag == 0.0:
            continue
        phase = entry / mag
        if phase != 1.0:
            v[:, k] = col * np.conj(phase)
    return v


def eig_hermitian(h: np.ndarray, point: tuple[float, float] | None = None) -> SpectralFrame:
    """Eigendecompose a Hermitian matrix into a phase-fixed frame.

    Columns come out in ascending eigenvalue order with labels 1..d; each
    column's largest-magnitude entry is made real positive.
    """
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    if h.shape != (d, d):
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    scale = float(np.max(np.abs(h))) if h.size else 0.0
    dev = float(np.max(np.abs(h - h.conj().T)))
    if dev > HERMITICITY_RTOL * max(scale, 1e-300) and dev > 0.0:
        raise ValueError(
            f"matrix is not Hermitian: max |H - H^dag| = {dev:.3e} "
            f"exceeds {HERMITICITY_RTOL:.0e} * |H| = {HERMITICITY_RTOL * scale:.3e}"
        )
    values, vectors = np.linalg.eigh(0.5 * (h + h.conj().T))
    vectors = _fix_column_phases(vectors)
    return SpectralFrame(
        values=values.astype(float),
        vectors=vectors,
        labels=np.arange(1, d + 1),
        point=point,
    )


def basis_reference_frame(diag_values, point=None) -> SpectralFrame:
    """Reference frame whose columns are the canonical basis vectors.

    Used as the alignment anchor where the labeling convention pins
    eigenvectors to bare basis states.
    """
    values = np.asarray(diag_values, dtype=float)
    d = values.shape[0]
    return SpectralFrame(
        values=values,
        vectors=np.eye(d, dtype=complex),
        labels=np.arange(1, d + 1),
        point=point,
    )


def align_frame(
    frame: SpectralFrame,
    reference: SpectralFrame,
    overlap_floor: float = DEFAULT_OVERLAP_FLOOR,
) -> SpectralFrame:
    """Match a frame to a reference by greedy max-overlap column assignment.

    Slots below the overlap floor mark a continuation break; they fall back
    to matching by ascending eigenvalue among the leftover columns rather
    than trusting near-zero overlaps.
    """
    if frame.dim != reference.dim:
        raise ValueError("frame dimensions differ")
    d = frame.dim
    overlap = reference.vectors.conj().T @ frame.vectors
    absov = np.abs(overlap)

    perm = np.full(d, -1, dtype=int)
    taken_slot = np.zeros(d, dtype=bool)
    taken_col = np.zeros(d, dtype=bool)
    work = absov.copy()
    for _ in range(d):
        slot, col = np.unravel_index(int(np.argmax(work)), work.shape)
        perm[slot] = col
        taken_slot[slot] = True
        taken_col[col] = True
        work[slot, :] = -1.0
        work[:, col] = -1.0

    matched = absov[np.arange(d), perm]
    min_overlap = float(np.min(matched))
    broken = matched < overlap_floor
    is_break = bool(np.any(broken))
    if is_break:
        # eigenvalue-order fallback for broken slots only
        bad_slots = np.where(broken)[0]
        bad_cols = perm[bad_slots]
        order_slots = bad_slots[np.argsort(reference.values[bad_slots], kind="stable")]
        order_cols = bad_cols[np.argsort(frame.values[bad_cols], kind="stable")]
        perm[order_slots] = order_cols

    vectors = frame.vectors[:, perm].copy()
    values = frame.values[perm].copy()
    for slot in range(d):
        o = overlap[slot, perm[slot]]
        mag = abs(o)
        if mag > 0.0:
            phase = o / mag
            if phase != 1.0:
                vectors[:, slot] *= np.conj(phase)
    return SpectralFrame(
        values=values,
        vectors=vectors,
        labels=reference.labels.copy(),
        point=frame.point,
        continuation_break=is_break,
        min_overlap=min_overlap,
    )


def continue_frames(
    hamiltonians,
    points,
    seed: SpectralFrame,
    overlap_floor: float = DEFAULT_OVERLAP_FLOOR,
) -> list[SpectralFrame]:
    """Continue a seed frame along a sequence of points.

    hamiltonians is a callable point -> Hermitian matrix; the first frame is
    aligned to the seed, each subsequent frame to its predecessor.
    """
    frames = []
    ref = seed
    for pt in points:
        fr = align_frame(eig_hermitian(hamiltonians(pt), point=tuple(pt)), ref, overlap_floor)
        frames.append(fr)
        ref = fr
    return frames


@dataclass
class SpectralField:
    """Gauge-fixed eigenframes on every node of a rectangular lattice."""

    grid: Grid
    values: np.ndarray      # (n1, n2, d) real, slot order = label order
    vectors: np.ndarray     # (n1, n2, d, d) complex, column k = label labels[..., k]
    labels: np.ndarray      # (n1, n2, d) int
    break_mask: np.ndarray  # (n1, n2) bool, continuation break at this node
    min_overlaps: np.ndarray  # (n1, n2) float

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    def frame(self, i: int, j: int) -> SpectralFrame:
        return SpectralFrame(
            values=self.values[i, j],
            vectors=self.vectors[i, j],
            labels=self.labels[i, j],
            point=self.grid.point(i, j),
            continuation_break=bool(self.break_mask[i, j]),
            min_overlap=float(self.min_overlaps[i, j]),
        )

    def slot_of_label(self, label: int) -> int:
        """Slot index of a continuation label (uniform across the field)."""
        slots = np.where(self.labels[0, 0] == label)[0]
        if slots.size != 1:
            raise ValueError(f"label {label} not present exactly once")
        return int(slots[0])

    def min_gap(self, slot: int) -> np.ndarray:
        """Per-node minimal spectral gap between this slot and all others."""
        vals = self.values
        diff = np.abs(vals - vals[..., slot : slot + 1])
        diff[..., slot] = np.inf
        return diff.min(axis=-1)

    def min_pairwise_gap(self) -> np.ndarray:
        """Per-node minimal gap over all eigenvalue pairs."""
        vals = np.sort(self.values, axis=-1)
        return np.diff(vals, axis=-1).min(axis=-1)


def spectral_field(
    grid: Grid,
    hamiltonian,
    seed: SpectralFrame,
    overlap_floor: float = DEFAULT_OVERLAP_FLOOR,
) -> SpectralField:
    """Sweep the lattice row-major, aligning each node to its sweep neighbor.

    Node (i, j) aligns to (i-1, j) when i > 0, else to (i, j-1); the origin
    aligns to the seed.  The sweep is sequential and deterministic.
    """
    n1, n2 = grid.shape
    d = seed.dim
    values = np.empty((n1, n2, d), dtype=float)
    vectors = np.empty((n1, n2, d, d), dtype=complex)
    labels = np.empty((n1, n2, d), dtype=int)
    break_mask = np.zeros((n1, n2), dtype=bool)
    min_overlaps = np.ones((n1, n2), dtype=float)

    frames: list[list[SpectralFrame]] = [[None] * n2 for _ in range(n1)]
    for i in range(n1):
        for j in range(n2):
            pt = grid.point(i, j)
            try:
                raw = eig_hermitian(hamiltonian(pt), point=pt)
            except Exception as exc:
                raise RuntimeError(f"hamiltonian evaluation failed at node ({i}, {j}), x = {pt}") from exc
            if i > 0:
                ref = frames[i - 1][j]
            elif j > 0:
                ref = frames[0][j - 1]
            else:
                ref = seed
            fr = align_frame(raw, ref, overlap_floor)
            frames[i][j] = fr
            values[i, j] = fr.values
            vectors[i, j] = fr.vectors
            labels[i, j] = fr.labels
            break_mask[i, j] = fr.continuation_break
            min_overlaps[i, j] = fr.min_overlap

    return SpectralField(
        grid=grid,
        values=values,
        vectors=vectors,
        labels=labels,
        break_mask=break_mask,
        min_overlaps=min_overlaps,
    )
