"""Closed-form evaluation of an allocation profile on a market.

Given per-period monotone allocation rules ``r_t`` this computes, exactly:

* the presence table ``fstar[t][i]`` (arrivals plus unserved carryover),
  by recursion and cross-checked against its closed-form product;
* the utility curves ``U_t`` as integrals of the effective-discount
  integrand ``g_t(u) = delta_t r_t(u) + (1 - r_t(u)) g_{t+1}(u)`` over the
  value axis (utilities integrate over types, never over atom masses);
* truthful expected payments from the incentive identity
  ``lambdaB_t p_t(v) = delta_t v r_t(v) + (1 - r_t(v)) U_{t+1}(v) - U_t(v)``;
* revenue (seller-discounted), inventory usage (two equivalent forms,
  asserted equal), and social welfare.

Payments are defined only through the incentive identity; nonnegativity is
checked and flagged rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .market import Market
from .numeric import default_tol
from .stepfn import Partition, PiecewiseLinear, StepFunction, segment_refinement


class EvaluatorInternalError(AssertionError):
    """Two routes to the same quantity disagreed; an implementation bug."""


@dataclass(frozen=True)
class AllocationProfile:
    """One monotone allocation rule per period; the decision variable."""

    steps: tuple

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        for r in self.steps:
            if not isinstance(r, StepFunction):
                raise TypeError("profile entries must be StepFunction values")

    @classmethod
    def zero(cls, T: int) -> "AllocationProfile":
        return cls(tuple(StepFunction.zero() for _ in range(T)))

    @classmethod
    def ones(cls, T: int) -> "AllocationProfile":
        return cls(tuple(StepFunction.one() for _ in range(T)))

    @property
    def T(self) -> int:
        return len(self.steps)

    def with_step(self, t: int, f: StepFunction) -> "AllocationProfile":
        steps = list(self.steps)
        steps[t] = f
        return AllocationProfile(tuple(steps))

    def __iter__(self):
        return iter(self.steps)


@dataclass
class Evaluation:
    """Everything the formulas say about one (market, profile) pair."""

    market: Market
    profile: AllocationProfile
    partition: Partition
    fstar: list            # [t][i] mass of value atoms[i] present at t
    utilities: list        # PiecewiseLinear for t = 0..T (index T is the zero tail)
    payments: list         # [t][i] expected payment as charged (lambdaB applied)
    revenue: object
    inventory_used: object
    welfare: object
    base_cash: object      # undiscounted transfer sum: lambdaB_t * p * fstar
    total_buyer_utility: object
    negative_payments: list  # (t, i, value) triples with p < 0 beyond noise

    def utility_at(self, t: int, v):
        return self.utilities[t].eval(v)

    def r_at(self, t: int, i: int):
        return self.profile.steps[t].eval(self.market.atoms[i])

    def report_rows(self):
        """Per atom-period rows: (t, v, fstar, r, U, p, cashflow)."""
        m = self.market
        rows = []
        for t in range(m.T):
            for i, v in enumerate(m.atoms):
                p = self.payments[t][i]
                rows.append(
                    (
                        t + 1,
                        v,
                        self.fstar[t][i],
                        self.r_at(t, i),
                        self.utilities[t].value_at_point(v),
                        p,
                        m.discounts.lambda_s[t] * p * self.fstar[t][i],
                    )
                )
        return rows


def evaluate(market: Market, profile: AllocationProfile, *, partition: Partition | None = None) -> Evaluation:
    """Run the full formula layer; pure and deterministic."""
    T = market.T
    if profile.T != T:
        raise ValueError(f"profile has {profile.T} periods, market has {T}")
    delta = market.discounts.delta
    lam_s = market.discounts.lambda_s
    lam_b = market.discounts.lambda_b
    if partition is None:
        partition = segment_refinement(profile.steps, market.atoms)
    pts = partition.points
    npieces = partition.npieces

    R = [partition.values(r) for r in profile.steps]
    atom_pc = [partition.piece_of_point(a) for a in market.atoms]
    atom_pt = [pc // 2 for pc in atom_pc]
    r_at = [[R[t][pc] for pc in atom_pc] for t in range(T)]

    # Effective discount from t on: g_t = delta_t r_t + (1 - r_t) g_{t+1}.
    g = [None] * (T + 1)
    g[T] = [0] * npieces
    for t in range(T - 1, -1, -1):
        gt1 = g[t + 1]
        rt = R[t]
        d = delta[t]
        g[t] = [d * rt[p] + (1 - rt[p]) * gt1[p] for p in range(npieces)]

    utilities = [PiecewiseLinear(pts, partition.prefix_integrals(g[t])) for t in range(T + 1)]
    u_at = [[utilities[t].values[k] for k in atom_pt] for t in range(T + 1)]

    n = market.num_atoms
    fstar = [[0] * n for _ in range(T)]
    for i in range(n):
        fstar[0][i] = market.mass[0][i]
    for t in range(1, T):
        for i in range(n):
            fstar[t][i] = market.mass[t][i] + fstar[t - 1][i] * (1 - r_at[t - 1][i])
    _check_fstar_closed_form(market, r_at, fstar)

    payments = [
        [
            (delta[t] * market.atoms[i] * r_at[t][i] + (1 - r_at[t][i]) * u_at[t + 1][i] - u_at[t][i])
            / lam_b[t]
            for i in range(n)
        ]
        for t in range(T)
    ]

    revenue = sum(lam_s[t] * sum(payments[t][i] * fstar[t][i] for i in range(n)) for t in range(T))
    base_cash = sum(lam_b[t] * payments[t][i] * fstar[t][i] for t in range(T) for i in range(n))
    welfare = sum(
        delta[t] * market.atoms[i] * r_at[t][i] * fstar[t][i] for t in range(T) for i in range(n)
    )
    total_utility = sum(u_at[t][i] * market.mass[t][i] for t in range(T) for i in range(n))

    used = sum(r_at[t][i] * fstar[t][i] for t in range(T) for i in range(n))
    used_by_cohort = 0
    for t in range(T):
        for i in range(n):
            survive = 1
            for j in range(t, T):
                survive *= 1 - r_at[j][i]
            used_by_cohort += (1 - survive) * market.mass[t][i]
    _require_equal(used, used_by_cohort, market.mode, "inventory accounting")

    noise = 0 if market.mode == "rational" else 1e-12
    negative = [
        (t, i, payments[t][i])
        for t in range(T)
        for i in range(n)
        if payments[t][i] < -noise
    ]

    return Evaluation(
        market=market,
        profile=profile,
        partition=partition,
        fstar=fstar,
        utilities=utilities,
        payments=payments,
        revenue=revenue,
        inventory_used=used,
        welfare=welfare,
        base_cash=base_cash,
        total_buyer_utility=total_utility,
        negative_payments=negative,
    )


def _check_fstar_closed_form(market: Market, r_at, fstar):
    # f*_t(v) must equal sum_j f_j(v) prod_{j <= i < t} (1 - r_i(v)).
    for t in range(market.T):
        for i in range(market.num_atoms):
            total = 0
            for j in range(t + 1):
                term = market.mass[j][i]
                for k in range(j, t):
                    term *= 1 - r_at[k][i]
                total += term
            _require_equal(fstar[t][i], total, market.mode, f"fstar closed form at t={t}")


def _require_equal(a, b, mode, what):
    tol = 0 if mode == "rational" else 1e-9 * max(1.0, abs(a), abs(b))
    if abs(a - b) > tol:
        raise EvaluatorInternalError(f"{what}: {a} != {b}")


# -- spec-facing wrappers ---------------------------------------------------

def compute_fstar(market: Market, profile: AllocationProfile):
    """Presence masses by the arrival recursion (closed-form checked)."""
    return evaluate(market, profile).fstar


def compute_utilities(market: Market, profile: AllocationProfile):
    """Utility curves U_1..U_{T+1} (index 0 is period one; last is zero)."""
    return evaluate(market, profile).utilities


def compute_payments(market: Market, profile: AllocationProfile):
    """Expected truthful payments per atom-period, as charged."""
    return evaluate(market, profile).payments


def revenue(market: Market, profile: AllocationProfile):
    return evaluate(market, profile).revenue


def inventory_used(market: Market, profile: AllocationProfile):
    return evaluate(market, profile).inventory_used


def welfare(market: Market, profile: AllocationProfile):
    return evaluate(market, profile).welfare
