"""Brute-force ground truth and classical baselines at desk scale.

The grid oracle enumerates every monotone step profile whose jumps sit on
the atom boundaries (both inclusion flags, realized as free point values
between the neighboring segment levels) and whose levels come from a fixed
grid, then maximizes exact revenue subject to the inventory cap. The
search runs vectorized in floating point; on rational markets the
near-optimal candidates are re-evaluated exactly so the reported optimum
is exact. Enumeration order is canonical (lexicographic over per-period
descriptors, earliest period most significant) and ties keep the first
candidate, so oracle runs are reproducible.

Baselines: the static monopoly price over one atom list, and the
non-anonymous benchmark that treats each generation as its own market and
sells at its monopoly price on arrival (defined for unbounded supply
only).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .evaluate import AllocationProfile, evaluate
from .market import Market
from .numeric import RATIONAL, parse_number
from .stepfn import Partition, StepFunction


class InstanceTooLarge(ValueError):
    """The instance exceeds the oracle's enumeration caps."""


class BoundedInventoryUnsupported(ValueError):
    """The non-anonymous benchmark needs unbounded supply."""


@dataclass(frozen=True)
class OracleGrid:
    """Search space: level grid, jumps pinned to atom boundaries, size caps."""

    levels: tuple = ("0", "1/4", "1/2", "3/4", "1")
    max_periods: int = 3
    max_atoms: int = 3
    max_candidates: int = 4_000_000

    def level_values(self, mode: str) -> list:
        vals = sorted({parse_number(x, mode) for x in self.levels})
        if vals[0] != 0 or vals[-1] != 1:
            raise ValueError("the level grid must contain 0 and 1")
        return vals


@dataclass
class OracleResult:
    revenue: object
    profile: AllocationProfile
    candidates: int


def _period_candidates(market: Market, levels: list) -> list[list]:
    """All per-period piece-value vectors, canonically ordered.

    A candidate assigns a non-decreasing level to every open gap and, at
    each atom boundary, any grid level between the neighboring gap levels
    (that freedom is the closed/open flag choice, including the distinct
    point value realized by a closed+open pair). Non-atom boundaries carry
    no mass, so their value is pinned to a neighbor.
    """
    pts = Partition(market.atoms).points
    atoms = set(market.atoms)
    ngaps = len(pts) - 1
    out = []
    for gaps in itertools.combinations_with_replacement(levels, ngaps):
        choice_sets = []
        for k, p in enumerate(pts):
            lo = gaps[k - 1] if k > 0 else None
            hi = gaps[k] if k < ngaps else None
            if p in atoms:
                lo = lo if lo is not None else levels[0]
                hi = hi if hi is not None else levels[-1]
                choice_sets.append([x for x in levels if lo <= x <= hi])
            else:
                choice_sets.append([hi if hi is not None else lo])
        for point_vals in itertools.product(*choice_sets):
            pieces = []
            for k in range(len(pts)):
                pieces.append(point_vals[k])
                if k < ngaps:
                    pieces.append(gaps[k])
            out.append(pieces)
    return out


def _batch_revenue(market: Market, cand: np.ndarray, combos: np.ndarray, candidate_matrix: np.ndarray):
    """Vectorized formula layer over a chunk of candidate profiles."""
    T = market.T
    pts = Partition(market.atoms).points
    widths = np.array([float(b - a) for a, b in zip(pts, pts[1:])])
    atom_point = [pts.index(a) for a in market.atoms]
    atom_piece = [2 * k for k in atom_point]
    atoms = np.array([float(a) for a in market.atoms])
    mass = np.array([[float(x) for x in row] for row in market.mass])
    delta = [float(x) for x in market.discounts.delta]
    lam_s = [float(x) for x in market.discounts.lambda_s]
    lam_b = [float(x) for x in market.discounts.lambda_b]

    R = candidate_matrix[combos]  # (T, chunk, npieces)
    npieces = candidate_matrix.shape[1]
    gap_idx = np.arange(1, npieces, 2)

    u_at = [None] * (T + 1)
    u_at[T] = np.zeros((combos.shape[1], len(atoms)))
    g = np.zeros((combos.shape[1], npieces))
    for t in range(T - 1, -1, -1):
        g = delta[t] * R[t] + (1 - R[t]) * g
        cum = np.cumsum(g[:, gap_idx] * widths, axis=1)
        u_pts = np.concatenate([np.zeros((g.shape[0], 1)), cum], axis=1)
        u_at[t] = u_pts[:, atom_point]

    r_at = R[:, :, atom_piece]  # (T, chunk, natoms)
    fstar = np.broadcast_to(mass[0], r_at[0].shape).copy()
    revenue = np.zeros(combos.shape[1])
    used = np.zeros(combos.shape[1])
    for t in range(T):
        p = (delta[t] * atoms * r_at[t] + (1 - r_at[t]) * u_at[t + 1] - u_at[t]) / lam_b[t]
        revenue += lam_s[t] * (p * fstar).sum(axis=1)
        used += (r_at[t] * fstar).sum(axis=1)
        if t + 1 < T:
            fstar = mass[t + 1] + fstar * (1 - r_at[t])
    return revenue, used


def brute_force_optimal(market: Market, grid: OracleGrid | None = None) -> OracleResult:
    """Exact maximum of revenue over the grid, subject to the inventory cap."""
    grid = grid or OracleGrid()
    if market.T > grid.max_periods:
        raise InstanceTooLarge(f"T={market.T} beyond oracle cap {grid.max_periods}")
    if market.num_atoms > grid.max_atoms:
        raise InstanceTooLarge(f"{market.num_atoms} atoms beyond oracle cap {grid.max_atoms}")
    levels = grid.level_values(market.mode)
    candidates = _period_candidates(market, levels)
    K = len(candidates)
    total = K**market.T
    if total > grid.max_candidates:
        raise InstanceTooLarge(f"{total} profiles beyond oracle cap {grid.max_candidates}")

    candidate_matrix = np.array([[float(x) for x in row] for row in candidates])
    T = market.T
    inv = None if market.unbounded else float(market.inventory)
    ftol = 1e-9

    best_rev = -np.inf
    best_id = None
    near_ids: list[int] = []
    chunk_size = 1 << 16
    strides = [K ** (T - 1 - t) for t in range(T)]
    for lo in range(0, total, chunk_size):
        ids = np.arange(lo, min(lo + chunk_size, total))
        combos = np.stack([(ids // s) % K for s in strides])
        revenue, used = _batch_revenue(market, None, combos, candidate_matrix)
        feasible = np.ones(len(ids), bool) if inv is None else used <= inv + ftol
        if not feasible.any():
            continue
        rev_f = np.where(feasible, revenue, -np.inf)
        top = int(np.argmax(rev_f))
        if rev_f[top] > best_rev:
            best_rev = rev_f[top]
            best_id = int(ids[top])
            near_ids = [int(i) for i in ids[rev_f >= best_rev - 1e-9]]
        elif rev_f[top] >= best_rev - 1e-9:
            near_ids.extend(int(i) for i in ids[rev_f >= best_rev - 1e-9])
    if best_id is None:
        raise AssertionError("no feasible profile; the zero profile is always feasible")

    def rebuild(flat: int) -> AllocationProfile:
        part = Partition(market.atoms)
        steps = []
        for s in strides:
            steps.append(StepFunction.from_values(part, candidates[(flat // s) % K]))
        return AllocationProfile(tuple(steps))

    if market.mode == RATIONAL:
        # exact re-evaluation of the float near-ties keeps the result exact
        pool = sorted(set(near_ids))[:512] or [best_id]
        best_exact = None
        for flat in pool:
            prof = rebuild(flat)
            ev = evaluate(market, prof)
            if not market.unbounded and ev.inventory_used > market.inventory:
                continue
            if best_exact is None or ev.revenue > best_exact[0]:
                best_exact = (ev.revenue, prof)
        assert best_exact is not None
        return OracleResult(best_exact[0], best_exact[1], total)

    profile = rebuild(best_id)
    return OracleResult(evaluate(market, profile).revenue, profile, total)


def static_monopoly(pairs):
    """Best take-it-or-leave-it price over one atom list.

    ``pairs`` is a sequence of (value, mass). The optimal price is always
    one of the atom values; ties go to the lowest such price.
    """
    pairs = sorted(pairs)
    if not pairs:
        raise ValueError("need at least one atom")
    best = None
    for k, (price, _) in enumerate(pairs):
        rev = price * sum(mass for _, mass in pairs[k:])
        if best is None or rev > best[1]:
            best = (price, rev)
    return best


def non_anonymous_benchmark(market: Market):
    """Per-generation monopoly pricing with full arrival-time discrimination.

    Only defined for unbounded supply, where generations decouple and the
    seller simply charges each cohort its monopoly price on arrival; the
    cohort's values are discounted by that period's delta and the cash by
    lambdaS.
    """
    if not market.unbounded:
        raise BoundedInventoryUnsupported("finite inventory couples the generations")
    total = 0
    for t in range(market.T):
        pairs = [(v, m) for v, m in zip(market.atoms, market.mass[t]) if m > 0]
        if not pairs:
            continue
        _, rev = static_monopoly(pairs)
        total += market.discounts.lambda_s[t] * market.discounts.delta[t] * rev
    return total
