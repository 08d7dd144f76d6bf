"""Numeric cross-checks tying the payoff views together on one instance.

For a pool of positional strategies (the greedy optima of the reach and
total views plus random draws) the checks are, per bias zeta:

- identity: PReach = (1-zeta) * ETotal, state by state, strategy by strategy;
- bounds: every ETotal lies in [0, 1/(1-zeta)];
- equality: ETotal = EDisct per strategy, and for the optimal value vectors
  (one backup serves both views, so these are expected bit-identical);
- prob-1: ETotal hits 1/(1-zeta) exactly where the independent component
  oracle reports Buchi satisfaction with probability 1, and nowhere else;
- tail (optional, Monte Carlo): the empirical probability of n accepting
  steps all surviving the diversion decays at least as fast as zeta^n.
  Diverted steps still earn reward but do not count as survived, which is
  what the zeta^n bound is about.

The reward side uses the solvers, the satisfaction side the component
oracle; they share no numerics, which is the point of the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automata import Nba
from .mdp import Mdp
from .oracle import buchi_value, policy_buchi_probability
from .product import ProductMdp, Strategy, build_product, random_strategy
from .shaping import Mode, PayoffSpec, augment, simulate_batch
from .solvers import evaluate_policy, greedy_policy, solve_optimal


@dataclass(frozen=True)
class TailCheck:
    zeta: float
    n_values: tuple[int, ...]
    episodes: int
    empirical: tuple[float, ...]
    bound: tuple[float, ...]
    stderr: tuple[float, ...]
    ok: bool


@dataclass(frozen=True)
class VerifyReport:
    zetas: tuple[float, ...]
    policies_per_zeta: int
    checked: int
    identity_max_error: float
    bound_max_excess: float
    equality_max_error: float
    prob1_mismatches: int
    identity_ok: bool
    bounds_ok: bool
    equality_ok: bool
    prob1_ok: bool
    tails: tuple[TailCheck, ...]
    lower_bound_only: bool
    passed: bool


def tail_check(
    p: ProductMdp,
    zeta: float,
    f: Strategy,
    episodes: int,
    n_values: tuple[int, ...] = (5, 10, 20),
    seed: int = 0,
) -> TailCheck:
    """Monte Carlo bound check on survived accepting steps under `f`."""
    model = augment(p, PayoffSpec(Mode.TOTAL_REWARD, zeta))
    steps = min(1000, max(50, int(np.ceil(np.log(1e-9) / np.log(zeta)))))
    rng = np.random.default_rng(seed)
    pay, reached = simulate_batch(model, f, rng, episodes, steps)
    survived = pay - reached  # the diverted step earned but did not survive
    emp = []
    bound = []
    se = []
    ok = True
    for n in n_values:
        e = float(np.mean(survived >= n))
        s = float(np.sqrt(e * (1.0 - e) / episodes))
        b = zeta**n
        emp.append(e)
        bound.append(b)
        se.append(s)
        ok = ok and e <= b + 3.0 * s
    return TailCheck(zeta, tuple(n_values), episodes, tuple(emp), tuple(bound), tuple(se), ok)


def verify_instance(
    m: Mdp,
    a: Nba,
    zetas: tuple[float, ...] = (0.5, 0.9),
    n_random: int = 20,
    seed: int = 0,
    identity_tol: float = 1e-8,
    bound_tol: float = 1e-9,
    equality_tol: float = 1e-12,
    prob1_tol: float = 1e-6,
    tail_episodes: int = 0,
) -> VerifyReport:
    p = build_product(m, a)
    rng = np.random.default_rng(seed)
    identity_err = 0.0
    bound_excess = 0.0
    equality_err = 0.0
    prob1_bad = 0
    checked = 0
    tails: list[TailCheck] = []
    for zeta in zetas:
        cap = 1.0 / (1.0 - zeta)
        reach = augment(p, PayoffSpec(Mode.REACH_TARGET, zeta))
        total = augment(p, PayoffSpec(Mode.TOTAL_REWARD, zeta))
        biased = augment(p, PayoffSpec(Mode.BIASED_DISCOUNT, zeta))
        v_reach = solve_optimal(reach)
        v_total = solve_optimal(total)
        v_biased = solve_optimal(biased)
        equality_err = max(
            equality_err, float(np.max(np.abs(v_total.values - v_biased.values)))
        )
        f_total = greedy_policy(total, v_total.values)
        pool = [f_total, greedy_policy(reach, v_reach.values)]
        pool += [random_strategy(p, rng) for _ in range(n_random)]
        for f in pool:
            et = evaluate_policy(total, f).values
            pr = evaluate_policy(reach, f).values
            ed = evaluate_policy(biased, f).values
            psat = policy_buchi_probability(p, f)
            identity_err = max(identity_err, float(np.max(np.abs(pr - (1.0 - zeta) * et))))
            bound_excess = max(
                bound_excess,
                float(np.max(et - cap, initial=0.0)),
                float(np.max(-et, initial=0.0)),
            )
            equality_err = max(equality_err, float(np.max(np.abs(et - ed))))
            sat = np.abs(psat - 1.0) <= prob1_tol
            full = np.abs(et - cap) <= prob1_tol
            prob1_bad += int(np.sum(sat != full))
            checked += 1
        if tail_episodes > 0:
            tails.append(tail_check(p, zeta, f_total, tail_episodes, seed=seed))
    identity_ok = identity_err <= identity_tol
    bounds_ok = bound_excess <= bound_tol
    equality_ok = equality_err <= equality_tol
    prob1_ok = prob1_bad == 0
    passed = identity_ok and bounds_ok and equality_ok and prob1_ok and all(
        t.ok for t in tails
    )
    return VerifyReport(
        zetas=tuple(zetas),
        policies_per_zeta=n_random + 2,
        checked=checked,
        identity_max_error=identity_err,
        bound_max_excess=bound_excess,
        equality_max_error=equality_err,
        prob1_mismatches=prob1_bad,
        identity_ok=identity_ok,
        bounds_ok=bounds_ok,
        equality_ok=equality_ok,
        prob1_ok=prob1_ok,
        tails=tuple(tails),
        lower_bound_only=p.gfm_caveat,
        passed=passed,
    )


@dataclass(frozen=True)
class SweepRow:
    zeta: float
    policy: str
    psat_policy: float
    psat_opt: float
    is_optimal: bool


@dataclass(frozen=True)
class ThresholdReport:
    grid: tuple[float, ...]
    rows: tuple[SweepRow, ...]
    empirical_zeta0: float | None


def threshold_sweep(
    m: Mdp, a: Nba, grid: tuple[float, ...], tol: float = 1e-9
) -> ThresholdReport:
    """Greedy total-reward policy per grid zeta versus the Buchi optimum.

    empirical_zeta0 is the smallest grid point from which the greedy policy
    stays Buchi-optimal (at the initial state) through the end of the grid;
    None when it is not optimal at the last point.
    """
    p = build_product(m, a)
    opt = buchi_value(p).at_initial()
    rows: list[SweepRow] = []
    for zeta in grid:
        total = augment(p, PayoffSpec(Mode.TOTAL_REWARD, zeta))
        v = solve_optimal(total)
        f = greedy_policy(total, v.values)
        psat = float(policy_buchi_probability(p, f)[p.initial])
        desc = ";".join(p.pair_name(st, f.choice[st]) for st in range(p.n_states))
        rows.append(SweepRow(zeta, desc, psat, opt, psat >= opt - tol))
    zeta0 = None
    for row in reversed(rows):
        if not row.is_optimal:
            break
        zeta0 = row.zeta
    return ThresholdReport(tuple(grid), tuple(rows), zeta0)
