"""Backward (collect) pass of the strong junction tree for the speed-profile diagram.

Segment ``i`` owns two cliques: the V-clique over ``{V_{i+1}, A_i, V_i}``
holding ``P(V_{i+1} | V_i, A_i)`` and the segment utility, and the A-clique
over ``{A_i, U_i, V_i}`` holding ``P(A_i | V_i, U_i)``. The pass visits
segments from last to first; each step absorbs the incoming separator
message over ``V_{i+1}`` together with the speed-cap evidence on
``V_{i+1}``, sums out ``V_{i+1}`` and ``A_i``, then maximizes out ``U_i``
under the control limits and records the decision.

Clique absorption follows the usual pair of rules: probability potentials
multiply, utility potentials add the separator quotient ``Psi_S / Phi_S``
(with ``0 / 0 = 0``), and the outgoing separator pair is
``(sum Phi, sum Phi * Psi)``.

Two interchangeable backends compute the same clique operations:
``dense`` materializes full clique tables; ``sparse`` exploits that every
CPT row has at most two non-zero entries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid_model import (
    ADMISSIBLE_TOL,
    Grid,
    Grids,
    SparseCPT,
    UtilityTable,
    build_accel_cpt,
    build_speed_cpt,
    build_utility,
    control_bound,
    control_rank,
    project,
    speed_likelihood,
)
from .policy import Policy
from .track import Track
from .vehicle import F1, VehicleParams, ms_to_kmh

log = logging.getLogger(__name__)

BACKENDS = ("dense", "sparse")
_ALIASES = {"zero_compressed": "sparse", "zero-compressed": "sparse", "standard": "dense"}

# Relative tolerance under which two expected utilities count as tied.
TIE_RTOL = 1e-12


class SolverInvariantError(RuntimeError):
    pass


def canonical_backend(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {', '.join(BACKENDS)}")
    return name


@dataclass(frozen=True)
class Message:
    """Separator potentials over a speed variable (or a speed x other-variable table)."""

    phi: np.ndarray
    psi: np.ndarray

    @classmethod
    def unit(cls, nv: int) -> "Message":
        return cls(np.ones(nv), np.zeros(nv))


@dataclass(frozen=True)
class PolicyEntry:
    """Decision for every speed state of one segment (see :class:`Policy`)."""

    first: np.ndarray
    second: np.ndarray
    weight: np.ndarray


@dataclass(frozen=True)
class DiagramModel:
    """All numeric inputs of the diagram for one track and discretization.

    CPTs and utilities are shared by every segment; ``evidence[i]`` is the
    speed-cap likelihood at point ``i`` and ``bound[i]`` the admissible
    |u| (percent) per speed state at the start of segment ``i``.
    """

    grids: Grids
    params: VehicleParams
    segment_length: float
    accel_cpt: SparseCPT
    speed_cpt: SparseCPT
    utility: UtilityTable
    evidence: np.ndarray
    bound: np.ndarray
    # fault-injection hook: replacement speed CPTs for individual segments
    speed_cpt_overrides: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.bound.shape[0]

    def speed_cpt_for(self, i: int) -> SparseCPT:
        return self.speed_cpt_overrides.get(i, self.speed_cpt)

    def validate(self) -> None:
        nv, na, nu = self.grids.sizes
        checks = [
            (self.accel_cpt.parent_shape == (nv, nu) and self.accel_cpt.child_count == na, "accel CPT"),
            (self.speed_cpt.parent_shape == (nv, na) and self.speed_cpt.child_count == nv, "speed CPT"),
            (self.utility.values.shape == (nv, nv), "utility table"),
            (self.evidence.shape == (self.n + 1, nv), "evidence"),
            (self.bound.shape == (self.n, nv), "control bounds"),
        ]
        for i, cpt in self.speed_cpt_overrides.items():
            checks.append((0 <= i < self.n and cpt.parent_shape == (nv, na), f"speed CPT override {i}"))
        for ok, what in checks:
            if not ok:
                raise ValueError(f"{what} does not match grid sizes {nv, na, nu} / {self.n} segments")


def build_model(
    track: Track,
    grids: Grids,
    params: VehicleParams = F1,
    t_max: float | None = None,
) -> DiagramModel:
    s = track.segment_length
    evidence = np.stack([speed_likelihood(cap, grids.speed) for cap in track.v_cap])
    bound = np.stack([control_bound(grids.speed, cap) for cap in track.v_cap[:-1]])
    model = DiagramModel(
        grids=grids,
        params=params,
        segment_length=s,
        accel_cpt=build_accel_cpt(grids, params),
        speed_cpt=build_speed_cpt(grids, s),
        utility=build_utility(grids.speed, s, t_max),
        evidence=evidence,
        bound=bound,
    )
    model.validate()
    return model


def divide0(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Potential quotient with ``0 / 0 = 0``; ``x / 0`` for ``x != 0`` is an error."""
    zero = den == 0
    if np.any(num[zero] != 0):
        raise SolverInvariantError("non-zero utility over zero probability")
    return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=~zero)


def dense_multiply_marginalize(table: np.ndarray, phi: np.ndarray, psi: np.ndarray):
    """Absorb child potentials into a full clique table and sum the child out.

    ``table`` has shape ``(nv, m, child)``; ``phi`` and ``psi`` broadcast to
    ``(nv, child)``.
    """
    phi = np.broadcast_to(phi, (table.shape[0], table.shape[-1]))
    psi = np.broadcast_to(psi, phi.shape)
    clique_phi = table * phi[:, None, :]
    clique_psi = np.broadcast_to(psi[:, None, :], table.shape)
    return clique_phi.sum(axis=-1), (clique_phi * clique_psi).sum(axis=-1)


def sparse_multiply_marginalize(cpt: SparseCPT, phi: np.ndarray, psi: np.ndarray):
    """Zero-compressed counterpart of :func:`dense_multiply_marginalize`.

    Each parent configuration reads only the two child entries its row
    covers, doing the same products and sum as the dense table row.
    """
    nv = cpt.parent_shape[0]
    width = cpt.child_count + 1
    phi_p = np.zeros((nv, width))
    psi_p = np.zeros((nv, width))
    phi_p[:, :-1] = phi
    psi_p[:, :-1] = psi
    rows = np.arange(nv)[:, None]
    k = cpt.index
    lo = cpt.weight * phi_p[rows, k]
    hi = (1.0 - cpt.weight) * phi_p[rows, k + 1]
    return lo + hi, lo * psi_p[rows, k] + hi * psi_p[rows, k + 1]


def _check_nonnegative(*arrays):
    for a in arrays:
        if np.any(a < 0):
            raise SolverInvariantError("negative potential")


def eliminate_speed(
    speed_table,
    utility: np.ndarray,
    incoming: Message,
    evidence: np.ndarray,
) -> Message:
    """Sum ``V_{i+1}`` out of the V-clique; returns a message over ``(V_i, A_i)``.

    ``speed_table`` is a :class:`SparseCPT` (sparse backend) or the dense
    ``(nv, na, nv)`` array.
    """
    _check_nonnegative(incoming.phi, incoming.psi, evidence)
    phi_child = evidence * incoming.phi
    psi_child = utility + divide0(incoming.psi, incoming.phi)[None, :]
    if isinstance(speed_table, SparseCPT):
        phi, psi = sparse_multiply_marginalize(speed_table, phi_child, psi_child)
    else:
        phi, psi = dense_multiply_marginalize(speed_table, phi_child, psi_child)
    return Message(phi, psi)


def decide(
    xi: np.ndarray,
    phi_u: np.ndarray,
    bound: np.ndarray,
    control: Grid,
    rank: np.ndarray | None = None,
) -> tuple[Message, PolicyEntry]:
    """Maximize out the control for every speed state.

    Args:
        xi: Expected utility per (speed, control), shape ``(nv, nu)``.
        phi_u: Probability potential per (speed, control).
        bound: Admissible |u| in percent per speed state.
        control: Control grid (percent).
        rank: Tie-break rank per control state, from :func:`control_rank`.

    Returns:
        The message over the speed variable and the policy entry.
    """
    if rank is None:
        rank = control_rank(control)
    nv, nu = xi.shape
    u = control.values
    d_u = control.step
    rows = np.arange(nv)
    big = nu + 1

    lo_idx = np.searchsorted(u, -bound - ADMISSIBLE_TOL, side="left")
    hi_idx = np.searchsorted(u, bound + ADMISSIBLE_TOL, side="right") - 1
    empty = lo_idx > hi_idx
    cols = np.arange(nu)[None, :]
    admissible = (cols >= lo_idx[:, None]) & (cols <= hi_idx[:, None])

    masked = np.where(admissible, xi, -np.inf)
    best = masked.max(axis=1)
    tol = TIE_RTOL * np.abs(np.where(empty, 0.0, best))
    tied = admissible & (masked >= (best - tol)[:, None])
    first = np.argmin(np.where(tied, rank[None, :], big), axis=1)
    # no admissible control: fall back to the control nearest zero
    first = np.where(empty, np.argmin(rank), first)

    xi_star = xi[rows, first]
    second = np.full(nv, -1, dtype=np.intp)
    weight = np.ones(nv)
    best_alt = np.full(nv, -np.inf)
    alt_rank = np.full(nv, big)
    for side, edge, nbr, limit in (
        (+1, hi_idx, first + 1, bound),
        (-1, lo_idx, first - 1, -bound),
    ):
        ok = ~empty & (first == edge) & (nbr >= 0) & (nbr < nu)
        nbr_c = np.clip(nbr, 0, nu - 1)
        xi_nbr = xi[rows, nbr_c]
        ok &= xi_nbr >= xi_star - TIE_RTOL * np.abs(xi_star)
        better = ok & (
            (xi_nbr > best_alt + TIE_RTOL * np.abs(xi_nbr))
            | ((np.abs(xi_nbr - best_alt) <= TIE_RTOL * np.abs(xi_nbr)) & (rank[nbr_c] < alt_rank))
        )
        second = np.where(better, nbr_c, second)
        best_alt = np.where(better, xi_nbr, best_alt)
        alt_rank = np.where(better, rank[nbr_c], alt_rank)
        w_star = np.clip(1.0 - np.abs(u[first] - limit) / d_u, 0.0, 1.0)
        w_alt = np.clip(1.0 - np.abs(u[nbr_c] - limit) / d_u, 0.0, 1.0)
        total = w_star + w_alt
        w = np.where(total > 0, w_star / np.where(total > 0, total, 1.0), 1.0)
        weight = np.where(better, w, weight)

    mixed = (second >= 0) & (weight < 1.0)
    second = np.where(mixed, second, -1)
    weight = np.where(mixed, weight, 1.0)
    alt = np.where(mixed, second, first)
    phi_v = weight * phi_u[rows, first] + (1.0 - weight) * phi_u[rows, alt]
    psi_v = weight * xi_star + (1.0 - weight) * xi[rows, alt]
    return Message(phi_v, psi_v), PolicyEntry(first, second, weight)


def eliminate_control(
    accel_table,
    incoming: Message,
    bound: np.ndarray,
    control: Grid,
    rank: np.ndarray | None = None,
) -> tuple[Message, PolicyEntry]:
    """Sum ``A_i`` out of the A-clique and maximize out ``U_i``.

    ``incoming`` is the ``(nv, na)`` message from :func:`eliminate_speed`;
    ``accel_table`` is a :class:`SparseCPT` or the dense ``(nv, nu, na)`` array.
    """
    _check_nonnegative(incoming.phi, incoming.psi)
    quotient = divide0(incoming.psi, incoming.phi)
    if isinstance(accel_table, SparseCPT):
        phi_u, xi = sparse_multiply_marginalize(accel_table, incoming.phi, quotient)
    else:
        phi_u, xi = dense_multiply_marginalize(accel_table, incoming.phi, quotient)
    return decide(xi, phi_u, bound, control, rank)


@dataclass(frozen=True)
class SolveResult:
    """Policies plus the separator potentials of every path point.

    ``phi[i]``/``psi[i]`` are the messages over ``V_i`` before the evidence
    at point ``i`` is applied; ``psi[i]`` is the maximum expected time
    saving from point ``i`` to the end. ``root_phi``/``root_psi`` include
    the point-0 evidence.
    """

    policy: Policy
    phi: np.ndarray
    psi: np.ndarray
    root_phi: np.ndarray
    root_psi: np.ndarray
    backend: str

    def root_utility(self, v0: float) -> float:
        """Maximum expected total time saving conditioned on initial speed ``v0`` (m/s)."""
        k, w = project(ms_to_kmh(v0), self.policy.grids.speed)
        k, w = int(k), float(w)
        value = w * self.root_psi[k]
        if w < 1.0:
            value += (1.0 - w) * self.root_psi[k + 1]
        return float(value)


def solve_model(model: DiagramModel, backend: str = "sparse") -> SolveResult:
    backend = canonical_backend(backend)
    model.validate()
    grids = model.grids
    nv = grids.speed.count
    n = model.n
    rank = control_rank(grids.control)
    if backend == "dense":
        accel_table = model.accel_cpt.to_dense()
        speed_default = model.speed_cpt.to_dense()
        dense_overrides = {i: c.to_dense() for i, c in model.speed_cpt_overrides.items()}
        speed_for = lambda i: dense_overrides.get(i, speed_default)  # noqa: E731
    else:
        accel_table = model.accel_cpt
        speed_for = model.speed_cpt_for

    first = np.empty((n, nv), dtype=np.intp)
    second = np.empty((n, nv), dtype=np.intp)
    weight = np.empty((n, nv))
    phi = np.empty((n + 1, nv))
    psi = np.empty((n + 1, nv))
    msg = Message.unit(nv)
    phi[n], psi[n] = msg.phi, msg.psi
    for i in range(n - 1, -1, -1):
        sep = eliminate_speed(speed_for(i), model.utility.values, msg, model.evidence[i + 1])
        msg, entry = eliminate_control(accel_table, sep, model.bound[i], grids.control, rank)
        first[i], second[i], weight[i] = entry.first, entry.second, entry.weight
        phi[i], psi[i] = msg.phi, msg.psi
    policy = Policy(grids, model.segment_length, model.params, first, second, weight)
    return SolveResult(
        policy=policy,
        phi=phi,
        psi=psi,
        root_phi=model.evidence[0] * phi[0],
        root_psi=model.evidence[0] * psi[0],
        backend=backend,
    )


def solve(
    track: Track,
    grids: Grids,
    params: VehicleParams = F1,
    backend: str = "sparse",
    t_max: float | None = None,
) -> SolveResult:
    """Build the diagram for ``track`` and run the backward pass."""
    return solve_model(build_model(track, grids, params, t_max), backend)
