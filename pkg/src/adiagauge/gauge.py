"""Discrete differential geometry of adiabatic fields on the control lattice.

All two-forms are represented by their (1,2) component on the rectangular
lattice: exterior derivatives use central differences, wedge products use
matrix commutators.  Sign conventions are fixed as

    curving          B = dA_op - A_op ^ A_op      (operator connection A_op)
    fake curvature   F = dA_red - A_red ^ A_red - B   (reduced potential)
    non-abelian      F_I = dA_I + A_I ^ A_I       (overlap-matrix connection)

and the abelian curvature is purely imaginary, 2i Im<d1 phi|d2 phi>.

Unreliable cells are masked, never interpolated: boundaries, continuation
breaks, near-degeneracies, rank changes of the reduced density matrix, and
links where the eigenvector field jumps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .reduction import (
    PINV_TOL,
    partial_trace_env,
    relative_entropy,
)
from .spectral import Grid, SpectralField

GAP_FLOOR = 1e-8
LINK_FLOOR = 0.7


# -- lattice calculus -------------------------------------------------------

def central_diff(arr: np.ndarray, grid: Grid, mu: int) -> tuple[np.ndarray, np.ndarray]:
    """Differentiate a node array along lattice direction mu.

    Central differences in the interior, one-sided at the boundary; the
    returned order array is 2 where the stencil is central, 1 elsewhere.
    """
    h = grid.spacing[mu]
    d = np.empty_like(arr)
    order = np.full(arr.shape[:2], 2, dtype=int)
    sl = (slice(None),) * mu

    def ax(s):
        return sl + (s,)

    d[ax(slice(1, -1))] = (arr[ax(slice(2, None))] - arr[ax(slice(0, -2))]) / (2.0 * h)
    d[ax(slice(0, 1))] = (arr[ax(slice(1, 2))] - arr[ax(slice(0, 1))]) / h
    d[ax(slice(-1, None))] = (arr[ax(slice(-1, None))] - arr[ax(slice(-2, -1))]) / h
    order[ax(slice(0, 1))] = 1
    order[ax(slice(-1, None))] = 1
    return d, order


def dilate_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Grow a boolean mask by `radius` 4-neighbor steps."""
    out = mask.copy()
    for _ in range(radius):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown
    return out


def boundary_mask(shape: tuple[int, int], depth: int) -> np.ndarray:
    """Mask of nodes within `depth` of the lattice boundary."""
    m = np.zeros(shape, dtype=bool)
    if depth > 0:
        m[:depth, :] = True
        m[-depth:, :] = True
        m[:, :depth] = True
        m[:, -depth:] = True
    return m


def two_form_12(comp1: np.ndarray, comp2: np.ndarray, grid: Grid, wedge_sign: int) -> np.ndarray:
    """(1,2) component of d(comp) + wedge_sign * comp ^ comp for matrix fields."""
    d1c2, _ = central_diff(comp2, grid, 0)
    d2c1, _ = central_diff(comp1, grid, 1)
    comm = comp1 @ comp2 - comp2 @ comp1
    return d1c2 - d2c1 + wedge_sign * comm


# -- per-label gauge data ---------------------------------------------------

@dataclass
class GaugeSample:
    """Matrix-valued one-form at a grid node: one component per direction."""

    point: tuple[float, float]
    comp: tuple[np.ndarray, np.ndarray]
    order: int = 2
    flagged: bool = False


@dataclass
class LabelGaugeData:
    """Everything derived from one eigenstate label over the whole lattice."""

    field: SpectralField
    label: int
    slot: int
    phi: np.ndarray        # (n1, n2, d) state vectors
    rho: np.ndarray        # (n1, n2, ds, ds) reduced densities
    rho_inv: np.ndarray    # (n1, n2, ds, ds) pseudo-inverses
    p_supp: np.ndarray     # (n1, n2, ds, ds) support projectors rho rho^-1
    rank: np.ndarray       # (n1, n2) support ranks
    gap: np.ndarray        # (n1, n2) min gap from this label
    entropy: np.ndarray    # (n1, n2) eigenstate entanglement entropy
    bad_node: np.ndarray   # (n1, n2) break / degeneracy / bad-link core mask


def label_gauge_data(
    field: SpectralField,
    label: int,
    pinv_tol: float = PINV_TOL,
    gap_floor: float = GAP_FLOOR,
    link_floor: float = LINK_FLOOR,
    dims: tuple[int, int] = (3, 3),
) -> LabelGaugeData:
    slot = field.slot_of_label(label)
    ds, de = dims
    phi = field.vectors[:, :, :, slot]
    n1, n2, d = phi.shape

    phi4 = phi.reshape(n1, n2, ds, de)
    rho = np.einsum("ijse,ijte->ijst", phi4, phi4.conj())

    evals, evecs = np.linalg.eigh(rho)
    vmax = evals[..., -1:]
    keep = evals > pinv_tol * np.maximum(vmax, 1e-300)
    inv = np.where(keep, 1.0 / np.where(keep, evals, 1.0), 0.0)
    rho_inv = np.einsum("ijsk,ijk,ijtk->ijst", evecs, inv, evecs.conj())
    rank = keep.sum(axis=-1)
    p_supp = rho @ rho_inv

    pclip = np.clip(evals, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        xlx = np.where(pclip > 0.0, pclip * np.log(np.where(pclip > 0.0, pclip, 1.0)), 0.0)
    entropy = -xlx.sum(axis=-1)

    gap = field.min_gap(slot)

    # core of untrustworthy nodes: continuation breaks, near-degeneracy of
    # this label, and links where the gauge-fixed vector field jumps
    bad = field.break_mask.copy()
    bad |= gap < gap_floor
    link1 = np.abs(np.einsum("ijk,ijk->ij", phi[:-1, :].conj(), phi[1:, :]))
    link2 = np.abs(np.einsum("ijk,ijk->ij", phi[:, :-1].conj(), phi[:, 1:]))
    bad[:-1, :] |= link1 < link_floor
    bad[1:, :] |= link1 < link_floor
    bad[:, :-1] |= link2 < link_floor
    bad[:, 1:] |= link2 < link_floor
    # rank changes between difference-stencil neighbors
    rank_jump = np.zeros((n1, n2), dtype=bool)
    rank_jump[:-1, :] |= rank[:-1, :] != rank[1:, :]
    rank_jump[1:, :] |= rank[:-1, :] != rank[1:, :]
    rank_jump[:, :-1] |= rank[:, :-1] != rank[:, 1:]
    rank_jump[:, 1:] |= rank[:, :-1] != rank[:, 1:]
    bad |= rank_jump

    return LabelGaugeData(
        field=field,
        label=label,
        slot=slot,
        phi=phi,
        rho=rho,
        rho_inv=rho_inv,
        p_supp=p_supp,
        rank=rank,
        gap=gap,
        entropy=entropy,
        bad_node=bad,
    )


# -- connections ------------------------------------------------------------

def cstar_connection_field(data: LabelGaugeData, dims: tuple[int, int] = (3, 3)):
    """Operator-valued connection tr_E(|d phi><phi|) rho^-1, both directions.

    Returns (comp1, comp2, order) with comp_mu of shape (n1, n2, ds, ds).
    """
    grid = data.field.grid
    ds, de = dims
    n1, n2, d = data.phi.shape
    phi4 = data.phi.reshape(n1, n2, ds, de)
    comps = []
    orders = []
    for mu in (0, 1):
        dphi, order = central_diff(data.phi, grid, mu)
        dphi4 = dphi.reshape(n1, n2, ds, de)
        m = np.einsum("ijse,ijte->ijst", dphi4, phi4.conj())
        comps.append(m @ data.rho_inv)
        orders.append(order)
    return comps[0], comps[1], np.minimum(orders[0], orders[1])


def reduced_potential_field(data: LabelGaugeData):
    """Reduced potential A = <phi|d phi> (1 - P_ker), plus the raw overlap.

    The projector form tr_E(P_a |d phi><phi|) rho^-1 collapses exactly to
    <phi|d phi> rho rho^-1, which is what is evaluated; the scalar overlap is
    returned separately for the identity check tr_S(rho A_op) = <phi|d phi>.
    """
    grid = data.field.grid
    comps = []
    scalars = []
    orders = []
    for mu in (0, 1):
        dphi, order = central_diff(data.phi, grid, mu)
        u = np.einsum("ijk,ijk->ij", data.phi.conj(), dphi)
        comps.append(u[..., None, None] * data.p_supp)
        scalars.append(u)
        orders.append(order)
    return comps[0], comps[1], scalars[0], scalars[1], np.minimum(orders[0], orders[1])


def cstar_connection(field: SpectralField, label: int, node: tuple[int, int], **kw) -> GaugeSample:
    """Connection sample at one node (grid-level computation, sliced)."""
    data = label_gauge_data(field, label, **kw)
    c1, c2, order = cstar_connection_field(data)
    i, j = node
    return GaugeSample(
        point=field.grid.point(i, j),
        comp=(c1[i, j], c2[i, j]),
        order=int(order[i, j]),
        flagged=bool(data.bad_node[i, j]),
    )


def reduced_potential(field: SpectralField, label: int, node: tuple[int, int], **kw) -> GaugeSample:
    data = label_gauge_data(field, label, **kw)
    a1, a2, u1, u2, order = reduced_potential_field(data)
    i, j = node
    if data.gap[i, j] < GAP_FLOOR:
        flagged = True
    else:
        flagged = bool(data.bad_node[i, j])
    return GaugeSample(
        point=field.grid.point(i, j),
        comp=(a1[i, j], a2[i, j]),
        order=int(order[i, j]),
        flagged=flagged,
    )


# -- curvatures of the reduced theory ---------------------------------------

def curving_field(data: LabelGaugeData) -> np.ndarray:
    """(1,2) component of the curving B = dA_op - A_op ^ A_op, per node."""
    c1, c2, _ = cstar_connection_field(data)
    return two_form_12(c1, c2, data.field.grid, wedge_sign=-1)


def fake_curvature_field(data: LabelGaugeData, b12: np.ndarray | None = None) -> np.ndarray:
    """(1,2) component of F = dA_red - A_red ^ A_red - B, per node."""
    if b12 is None:
        b12 = curving_field(data)
    a1, a2, _, _, _ = reduced_potential_field(data)
    return two_form_12(a1, a2, data.field.grid, wedge_sign=-1) - b12


def curving(field: SpectralField, label: int, node: tuple[int, int], **kw) -> np.ndarray:
    data = label_gauge_data(field, label, **kw)
    i, j = node
    return curving_field(data)[i, j]


def fake_curvature(field: SpectralField, label: int, node: tuple[int, int], **kw) -> np.ndarray:
    data = label_gauge_data(field, label, **kw)
    i, j = node
    return fake_curvature_field(data)[i, j]


def field_average(rho: np.ndarray, field_component: np.ndarray) -> complex:
    """Statistical average tr(rho F) of a matrix field component."""
    return complex(np.trace(np.asarray(rho) @ np.asarray(field_component)))


def field_average_map(data: LabelGaugeData, f12: np.ndarray) -> np.ndarray:
    """tr(rho_a F_12) over the whole lattice."""
    return np.einsum("ijst,ijts->ij", data.rho, f12)


def connection_mask(data: LabelGaugeData, stencil_radius: int = 2) -> np.ndarray:
    """Nodes whose curvature stencil touches untrustworthy data."""
    m = dilate_mask(data.bad_node, stencil_radius)
    m |= boundary_mask(data.bad_node.shape, stencil_radius)
    return m


# -- abelian curvature ------------------------------------------------------

def berry_plaquette_cells(field: SpectralField, label: int) -> np.ndarray:
    """Plaquette phase / area for each lattice cell (anchored at its lower-left node).

    Gauge invariant: the product of the four normalized link overlaps around
    the cell.  Cells with a vanishing link are NaN.
    """
    slot = field.slot_of_label(label)
    phi = field.vectors[:, :, :, slot]
    h1, h2 = field.grid.spacing
    u1 = np.einsum("ijk,ijk->ij", phi[:-1, :].conj(), phi[1:, :])       # (i,j)->(i+1,j)
    u2 = np.einsum("ijk,ijk->ij", phi[:, :-1].conj(), phi[:, 1:])       # (i,j)->(i,j+1)
    prod = u1[:, :-1] * u2[1:, :] * np.conj(u1[:, 1:]) * np.conj(u2[:-1, :])
    mag = np.abs(prod)
    with np.errstate(divide="ignore", invalid="ignore"):
        args = np.where(mag > 1e-12, np.angle(np.where(mag > 0, prod, 1.0)), np.nan)
    return args / (h1 * h2)


def total_plaquette_flux(field: SpectralField, label: int, wrap_axis1: bool = False) -> float:
    """Sum of plaquette phases over all cells; 2 pi x integer on closed manifolds.

    With wrap_axis1 the second lattice direction is periodic (last column of
    links closes onto the first), as for an azimuthal angle.
    """
    slot = field.slot_of_label(label)
    phi = field.vectors[:, :, :, slot]
    u1 = np.einsum("ijk,ijk->ij", phi[:-1, :].conj(), phi[1:, :])       # (n1-1, n2)
    if wrap_axis1:
        phi_next = np.roll(phi, -1, axis=1)
        u2 = np.einsum("ijk,ijk->ij", phi.conj(), phi_next)             # (n1, n2) periodic
        u1_right = np.roll(u1, -1, axis=1)
        plaq = u1 * u2[1:, :] * np.conj(u1_right) * np.conj(u2[:-1, :])
    else:
        u2 = np.einsum("ijk,ijk->ij", phi[:, :-1].conj(), phi[:, 1:])   # (n1, n2-1)
        plaq = u1[:, :-1] * u2[1:, :] * np.conj(u1[:, 1:]) * np.conj(u2[:-1, :])
    return float(np.sum(np.angle(plaq)))


def berry_overlap_diff(field: SpectralField, label: int) -> np.ndarray:
    """Abelian curvature at interior nodes from the four surrounding plaquettes.

    The symmetric average of the four cell fluxes meeting at a node cancels
    the half-cell offset, giving a second-order nodal value.  Purely
    imaginary by convention; boundary nodes are NaN.
    """
    cells = berry_plaquette_cells(field, label)
    n1, n2 = field.grid.shape
    out = np.full((n1, n2), np.nan + 0j, dtype=complex)
    avg = 0.25 * (cells[1:, 1:] + cells[:-1, 1:] + cells[1:, :-1] + cells[:-1, :-1])
    out[1:-1, 1:-1] = 1j * avg
    return out


def reconstructed_hamiltonians(field: SpectralField) -> np.ndarray:
    """Rebuild H at every node from its eigendata (V diag(lambda) V^dag)."""
    return np.einsum("ijak,ijk,ijbk->ijab", field.vectors, field.values, field.vectors.conj())


def berry_sum_over_states(field: SpectralField, label: int, gap_floor: float = GAP_FLOOR) -> np.ndarray:
    """Abelian curvature via sum over states with central-difference dH.

    Nodes where some gap from this label is below gap_floor are NaN.
    """
    slot = field.slot_of_label(label)
    grid = field.grid
    h = reconstructed_hamiltonians(field)
    dh1, _ = central_diff(h, grid, 0)
    dh2, _ = central_diff(h, grid, 1)
    vec_a = field.vectors[:, :, :, slot]
    me1 = np.einsum("ija,ijab,ijbk->ijk", vec_a.conj(), dh1, field.vectors)
    me2 = np.einsum("ija,ijab,ijbk->ijk", vec_a.conj(), dh2, field.vectors)
    dl = field.values - field.values[:, :, slot : slot + 1]
    bad = np.abs(dl) < gap_floor
    dl_safe = np.where(bad, 1.0, dl)
    terms = (me1 * np.conj(me2) - me2 * np.conj(me1)) / dl_safe**2
    terms = np.where(bad, 0.0, terms)
    out = terms.sum(axis=-1)
    # mask nodes where a foreign level is (near-)degenerate with this one
    other_bad = bad.copy()
    other_bad[:, :, slot] = False
    out = np.where(other_bad.any(axis=-1), np.nan + 0j, out)
    out[0, :] = out[-1, :] = np.nan
    out[:, 0] = out[:, -1] = np.nan
    return out


def berry_curvature(field: SpectralField, label: int, node: tuple[int, int], method: str = "overlap_diff"):
    """Abelian adiabatic curvature (1,2) component at a node, purely imaginary."""
    if method == "overlap_diff":
        return complex(berry_overlap_diff(field, label)[node])
    if method == "sum_over_states":
        return complex(berry_sum_over_states(field, label)[node])
    raise ValueError(f"unknown method {method!r}")


# -- non-abelian curvature ---------------------------------------------------

def nonabelian_connection_field(field: SpectralField, labels: list[int]):
    """Overlap-matrix connection A_ab = <phi_a|d phi_b> for a label subset."""
    slots = [field.slot_of_label(a) for a in labels]
    sub = field.vectors[:, :, :, slots]
    grid = field.grid
    comps = []
    for mu in (0, 1):
        dsub, _ = central_diff(sub, grid, mu)
        comps.append(np.einsum("ijka,ijkb->ijab", sub.conj(), dsub))
    return comps[0], comps[1]


def nonabelian_curvature_field(field: SpectralField, labels: list[int]) -> np.ndarray:
    """F_I = dA_I + A_I ^ A_I over the lattice for a label subset."""
    a1, a2 = nonabelian_connection_field(field, labels)
    return two_form_12(a1, a2, field.grid, wedge_sign=+1)


def nonabelian_curvature(field: SpectralField, labels: list[int], node: tuple[int, int]) -> np.ndarray:
    return nonabelian_curvature_field(field, labels)[node]


# -- holonomy ----------------------------------------------------------------

def holonomy(samples: list[GaugeSample], ordering: str = "ordered") -> np.ndarray:
    """Path-(anti-)ordered exponential of a connection along a discrete path.

    Per segment, the midpoint-rule generator is exp(-A_mu dx^mu) with A
    averaged over the segment endpoints.  'ordered' multiplies new factors
    on the left, 'anti_ordered' on the right.
    """
    if ordering not in ("ordered", "anti_ordered"):
        raise ValueError(f"unknown ordering {ordering!r}")
    if not samples:
        return np.eye(3, dtype=complex)
    d = samples[0].comp[0].shape[0]
    w = np.eye(d, dtype=complex)
    for prev, cur in zip(samples[:-1], samples[1:]):
        dx = (cur.point[0] - prev.point[0], cur.point[1] - prev.point[1])
        gen = np.zeros((d, d), dtype=complex)
        for mu in (0, 1):
            amid = 0.5 * (prev.comp[mu] + cur.comp[mu])
            gen -= amid * dx[mu]
        step = expm(gen)
        if ordering == "ordered":
            w = step @ w
        else:
            w = w @ step
    return w


# -- curving vs entropy transport --------------------------------------------

def curving_entropy_check(rho: np.ndarray, b12: np.ndarray, delta: float) -> tuple[float, float]:
    """Compare tr(rho B) Delta with the relative entropy to the transported state.

    lhs is the curving average times the loop area; rhs is
    S(rho || exp(B Delta) rho).  Their difference shrinks as O(Delta^2).
    """
    lhs = float(np.trace(rho @ b12).real) * delta
    tau = expm(b12 * delta) @ rho
    rhs = relative_entropy(rho, tau)
    return lhs, rhs
