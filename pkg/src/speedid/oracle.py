"""Brute-force finite-horizon dynamic program over the same discretized model.

Plain nested loops over speed, control, acceleration and next speed with no
potentials, messages or vectorization, so agreement with the solver is
evidence about the message passing rather than a restatement of it. The
CPTs, utility table, evidence and control bounds are shared inputs.

Conventions mirrored from the solver (keep them in step):
  * utility is the expected time saving weighted by the probability of
    meeting every downstream speed cap (zero-probability states are worth 0);
  * argmax ties within a relative 1e-12 go to the smallest |u|, then the
    negative control;
  * an empty admissible set falls back to the control nearest zero, with
    no boundary mixing;
  * a maximizer on the admissible boundary is blended with its outside
    neighbour when the neighbour is at least as good;
  * evidence on point i+1 is applied inside segment i, evidence on point 0
    only at the root.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid_model import ADMISSIBLE_TOL, SNAP_TOL, Grids, SparseCPT
from .policy import RolloutResult, rollout
from .solver import TIE_RTOL, DiagramModel, build_model, solve_model
from .track import Track, synth_track
from .vehicle import F1, VehicleParams, acceleration, ms_to_kmh, segment_time, velocity_update

DEFAULT_BUDGET = 2_000_000


class OracleBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class DPTable:
    """``value[i, k]``: best expected time saving from point ``i`` at speed index ``k``.

    ``prob[i, k]`` is the probability of meeting all caps after point ``i``
    under the chosen controls. The decision arrays use the same layout as
    :class:`speedid.policy.Policy`.
    """

    value: np.ndarray
    prob: np.ndarray
    first: np.ndarray
    second: np.ndarray
    weight: np.ndarray
    grids: Grids
    segment_length: float


def _support(table: np.ndarray) -> list:
    """Non-zero (child, probability) pairs of every row of a dense CPT."""
    nv, m, nc = table.shape
    rows = []
    for v in range(nv):
        per_v = []
        for j in range(m):
            per_v.append([(c, float(table[v, j, c])) for c in range(nc) if table[v, j, c] > 0.0])
        rows.append(per_v)
    return rows


def _key(u: float):
    return (abs(u), u >= 0)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_RTOL * max(abs(a), abs(b))


def dp_solve_model(model: DiagramModel, budget: int = DEFAULT_BUDGET) -> DPTable:
    grids = model.grids
    nv, na, nu = grids.sizes
    n = model.n
    work = nv * na * nu * n
    if work > budget:
        raise OracleBudgetError(
            f"instance size |V|*|A|*|U|*n = {work} exceeds oracle budget {budget}; "
            "use smaller grids or fewer segments"
        )
    u_vals = [float(x) for x in grids.control.values]
    d_u = grids.control.step
    accel = _support(model.accel_cpt.to_dense())
    speed = _support(model.speed_cpt.to_dense())
    f = model.utility.values.tolist()

    value = np.zeros((n + 1, nv))
    prob = np.ones((n + 1, nv))
    first = np.zeros((n, nv), dtype=np.intp)
    second = np.full((n, nv), -1, dtype=np.intp)
    weight = np.ones((n, nv))

    for i in range(n - 1, -1, -1):
        phi_next = model.evidence[i + 1].tolist()
        val_next = value[i + 1].tolist()
        prob_next = prob[i + 1].tolist()
        for v in range(nv):
            ep = [0.0] * nu
            eu = [0.0] * nu
            for u in range(nu):
                for a, pa in accel[v][u]:
                    for w, pw in speed[v][a]:
                        p = pa * pw * phi_next[w]
                        ep[u] += p * prob_next[w]
                        eu[u] += p * (prob_next[w] * f[v][w] + val_next[w])

            b = float(model.bound[i, v])
            adm = [u for u in range(nu) if abs(u_vals[u]) <= b + ADMISSIBLE_TOL]
            if not adm:
                star = min(range(nu), key=lambda j: _key(u_vals[j]))
                value[i, v], prob[i, v] = eu[star], ep[star]
                first[i, v] = star
                continue

            best = max(eu[u] for u in adm)
            ties = [u for u in adm if eu[u] >= best - TIE_RTOL * abs(best)]
            star = min(ties, key=lambda j: _key(u_vals[j]))
            first[i, v] = star

            alt, alt_limit = None, None
            for edge, nbr, limit in ((max(adm), star + 1, b), (min(adm), star - 1, -b)):
                if star != edge or not 0 <= nbr < nu:
                    continue
                if eu[nbr] < eu[star] - TIE_RTOL * abs(eu[star]):
                    continue
                if alt is None or (eu[nbr] > eu[alt] and not _close(eu[nbr], eu[alt])):
                    alt, alt_limit = nbr, limit
                elif _close(eu[nbr], eu[alt]) and _key(u_vals[nbr]) < _key(u_vals[alt]):
                    alt, alt_limit = nbr, limit

            w_star = 1.0
            if alt is not None:
                ws = min(max(1.0 - abs(u_vals[star] - alt_limit) / d_u, 0.0), 1.0)
                wa = min(max(1.0 - abs(u_vals[alt] - alt_limit) / d_u, 0.0), 1.0)
                w_star = ws / (ws + wa) if ws + wa > 0 else 1.0
            if alt is None or w_star >= 1.0:
                value[i, v], prob[i, v] = eu[star], ep[star]
            else:
                second[i, v] = alt
                weight[i, v] = w_star
                value[i, v] = w_star * eu[star] + (1.0 - w_star) * eu[alt]
                prob[i, v] = w_star * ep[star] + (1.0 - w_star) * ep[alt]
    return DPTable(value, prob, first, second, weight, grids, model.segment_length)


def dp_solve(
    track: Track,
    grids: Grids,
    params: VehicleParams = F1,
    t_max: float | None = None,
    budget: int = DEFAULT_BUDGET,
) -> DPTable:
    return dp_solve_model(build_model(track, grids, params, t_max), budget)


def dp_rollout(table: DPTable, track: Track, params: VehicleParams, v0: float) -> RolloutResult:
    """Forward pass following the DP decisions, interpolating between bracketing speeds."""
    speed = table.grids.speed
    u_vals = table.grids.control.values / 100.0
    s = table.segment_length
    n = table.first.shape[0]

    def mean_u(i, k):
        w = table.weight[i, k]
        j2 = table.second[i, k]
        if j2 < 0:
            return u_vals[table.first[i, k]]
        return w * u_vals[table.first[i, k]] + (1.0 - w) * u_vals[j2]

    v = float(v0)
    vs, us, ts = [v], [], []
    for i in range(n):
        x = (ms_to_kmh(v) - speed.lo) / speed.step
        x = min(max(x, 0.0), speed.count - 1.0)
        if abs(x - round(x)) < SNAP_TOL:
            x = float(round(x))
        lo = min(int(x), speed.count - 2)
        # weights 1 - |grid speed - v| / d for the two neighbours
        w_hi = x - lo
        w_lo = 1.0 - w_hi
        u = w_lo * mean_u(i, lo) + w_hi * mean_u(i, lo + 1)
        v_next = velocity_update(v, acceleration(u, v, params), s)
        us.append(u)
        ts.append(segment_time(v, v_next, s))
        vs.append(v_next)
        v = v_next
    total = 0.0
    for t in ts:
        total += t
    return RolloutResult(np.array(vs), np.array(us), np.array(ts), total)


@dataclass(frozen=True)
class OracleReport:
    max_abs_diff: float
    agreement: float
    rollout_time_diff: float
    divergent_segment: int | None
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_abs_diff <= self.tol and self.agreement == 1.0

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_abs_utility_diff_s": self.max_abs_diff,
            "argmax_agreement": self.agreement,
            "rollout_time_diff_s": self.rollout_time_diff,
            "divergent_segment": self.divergent_segment,
            "tol": self.tol,
        }


def corrupt_speed_cpt(cpt):
    """Test hook: move every row's probability mass one speed state up where possible."""
    index = cpt.index.copy()
    weight = cpt.weight.copy()
    split = weight < 1.0
    weight[split] = 1.0 - weight[split]
    movable = ~split & (index + 1 < cpt.child_count)
    index[movable] += 1
    return SparseCPT(index, weight, cpt.child_count)


def check_against_solver(
    model: DiagramModel,
    v0: float,
    backend: str = "sparse",
    corrupt_segment: int | None = None,
    tol: float = 1e-9,
    budget: int = DEFAULT_BUDGET,
) -> OracleReport:
    """Run solver and oracle on ``model`` and compare values, decisions and rollouts.

    With ``corrupt_segment`` set, the solver (only) sees a corrupted speed
    CPT in that segment; the report then localizes the highest segment whose
    results diverge.
    """
    table = dp_solve_model(model, budget)
    solver_model = model
    if corrupt_segment is not None:
        if not 0 <= corrupt_segment < model.n:
            raise ValueError(f"corrupt segment {corrupt_segment} outside 0..{model.n - 1}")
        overrides = {corrupt_segment: corrupt_speed_cpt(model.speed_cpt)}
        solver_model = replace(model, speed_cpt_overrides=overrides)
    result = solve_model(solver_model, backend)

    diff = np.abs(result.psi - table.value)
    same = (
        (result.policy.first == table.first)
        & (result.policy.second == table.second)
    )
    divergent = [i for i in range(model.n) if diff[i].max() > tol or not same[i].all()]
    track = synth_track("straight", model.n, model.segment_length, model.params)
    t_solver = rollout(result.policy, track, model.params, v0).total_time
    t_oracle = dp_rollout(table, track, model.params, v0).total_time
    return OracleReport(
        max_abs_diff=float(diff.max()),
        agreement=float(same.mean()),
        rollout_time_diff=abs(t_solver - t_oracle),
        divergent_segment=max(divergent) if divergent else None,
        tol=tol,
    )
