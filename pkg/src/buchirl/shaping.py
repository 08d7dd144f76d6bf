"""Payoff views over the product: target augmentation and reward schemes.

Three views share one construction.  Fix a bias 0 < zeta < 1:

- ``REACH_TARGET``: every accepting branch keeps zeta of its mass and leaks
  the remaining (1-zeta) into a fresh absorbing target t; the payoff is 1
  exactly when t is reached.  Encoded as reward 1 on the leak step.
- ``TOTAL_REWARD``: same leaked dynamics, reward 1 on every accepting step,
  the leak step included; the payoff is the (finite) total reward collected
  before t.
- ``BIASED_DISCOUNT``: the raw product with reward 1 on accepting steps,
  where each earned reward discounts everything after it by zeta; the payoff
  of a run with n accepting steps is 1 + zeta + ... + zeta^(n-1).

Surviving an accepting step in the leaked dynamics has probability zeta,
which is the same zeta the biased view charges after a reward, so the total
and biased Bellman backups coincide coefficient for coefficient.  Branch
records therefore carry both the simulation probability and the backup
weight on the successor value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mdp import RunRecord
from .product import ProductMdp, Strategy


class Mode(enum.Enum):
    REACH_TARGET = "reach"
    TOTAL_REWARD = "total"
    BIASED_DISCOUNT = "biased"


class AugBranch(NamedTuple):
    succ: int      # product state index, or the target index on leak branches
    prob: float    # simulation probability
    weight: float  # coefficient of the successor value in the backup
    reward: float


@dataclass(frozen=True)
class PayoffSpec:
    mode: Mode
    zeta: float

    def __post_init__(self):
        if not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie strictly between 0 and 1")


@dataclass(frozen=True)
class AugmentedModel:
    product: ProductMdp
    spec: PayoffSpec
    target: int | None  # = n_states for the leaked views, None for biased
    branches: tuple[tuple[tuple[AugBranch, ...], ...], ...]  # [state][pair]

    @property
    def mode(self) -> Mode:
        return self.spec.mode

    @property
    def zeta(self) -> float:
        return self.spec.zeta

    @property
    def n_states(self) -> int:
        return self.product.n_states


def augment(p: ProductMdp, spec: PayoffSpec) -> AugmentedModel:
    """Build the branch tables of one payoff view; see the module docstring."""
    zeta = spec.zeta
    leaked = spec.mode is not Mode.BIASED_DISCOUNT
    # in the reach view only the arrival at t pays; surviving accepting steps do not
    r_cont = 0.0 if spec.mode is Mode.REACH_TARGET else 1.0
    target = p.n_states if leaked else None
    out: list[tuple[tuple[AugBranch, ...], ...]] = []
    for st in range(p.n_states):
        per_pair: list[tuple[AugBranch, ...]] = []
        for pair in p.pairs[st]:
            branches: list[AugBranch] = []
            leak_mass = 0.0
            for b in pair.branches:
                if not b.accepting:
                    branches.append(AugBranch(b.succ, b.prob, b.prob, 0.0))
                elif leaked:
                    branches.append(AugBranch(b.succ, b.prob * zeta, b.prob * zeta, r_cont))
                    leak_mass += b.prob * (1.0 - zeta)
                else:
                    branches.append(AugBranch(b.succ, b.prob, b.prob * zeta, 1.0))
            if leak_mass > 0.0:
                branches.append(AugBranch(target, leak_mass, 0.0, 1.0))
            raw = math.fsum(b.prob for b in pair.branches)
            assert abs(math.fsum(b.prob for b in branches) - raw) <= 1e-12
            per_pair.append(tuple(branches))
        out.append(tuple(per_pair))
    return AugmentedModel(p, spec, target, tuple(out))


def run_payoff(spec: PayoffSpec, record: RunRecord) -> float:
    """Realized payoff of one trace, accumulated step by step."""
    if spec.mode is Mode.REACH_TARGET:
        return 1.0 if record.reached_target else 0.0
    if spec.mode is Mode.TOTAL_REWARD:
        return float(record.accepting_count)
    pay = 0.0
    disc = 1.0
    for acc in record.accepting:
        if acc:
            pay += disc
            disc *= spec.zeta
    return pay


def simulate_run(
    model: AugmentedModel,
    f: Strategy,
    rng: np.random.Generator,
    max_steps: int = 1000,
    start: int | None = None,
) -> RunRecord:
    """Sample one trace under `f`, stopping at the target or after max_steps.

    Sampling is two-stage so the trace keeps its symbols: first a raw product
    branch, then on an accepting branch of a leaked view a coin that diverts
    to the target with probability (1-zeta).
    """
    f.check(model.product)
    p = model.product
    leaked = model.mode is not Mode.BIASED_DISCOUNT
    cur = p.initial if start is None else start
    states = [cur]
    actions: list[int] = []
    labels: list[int] = []
    accepting: list[bool] = []
    reached = False
    for _ in range(max_steps):
        k = f.choice[cur]
        branches = p.pairs[cur][k].branches
        u = rng.random()
        acc_p = 0.0
        b = branches[-1]
        for cand in branches[:-1]:
            acc_p += cand.prob
            if u < acc_p:
                b = cand
                break
        actions.append(k)
        labels.append(b.symbol)
        accepting.append(b.accepting)
        if leaked and b.accepting and rng.random() < 1.0 - model.zeta:
            states.append(model.target)
            reached = True
            break
        states.append(b.succ)
        cur = b.succ
    return RunRecord(tuple(states), tuple(actions), tuple(labels), tuple(accepting), reached)


def simulate_batch(
    model: AugmentedModel,
    f: Strategy,
    rng: np.random.Generator,
    episodes: int,
    max_steps: int,
    start: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized payoff sampling; returns (payoffs, reached_target).

    Episodes still alive at max_steps are truncated, which can only lose
    payoff that was still to come.  Sampling uses the aggregated augmented
    branches (one uniform per step), so traces are not label-resolved and the
    draw stream differs from simulate_run.
    """
    f.check(model.product)
    n = model.n_states
    max_b = max(
        len(model.branches[st][f.choice[st]]) for st in range(n)
    )
    cum = np.full((n, max_b), np.inf)
    succ = np.zeros((n, max_b), dtype=np.int64)
    rew = np.zeros((n, max_b))
    sentinel = n  # target row index; absorbing
    for st in range(n):
        branches = model.branches[st][f.choice[st]]
        probs = np.array([b.prob for b in branches])
        c = np.cumsum(probs)
        c[-1] = np.inf  # rounding slack falls into the last branch
        cum[st, : len(branches)] = c
        succ[st, : len(branches)] = [
            sentinel if b.succ == model.target else b.succ for b in branches
        ]
        rew[st, : len(branches)] = [b.reward for b in branches]

    biased = model.mode is Mode.BIASED_DISCOUNT
    zeta = model.zeta
    start_idx = model.product.initial if start is None else start
    cur = np.full(episodes, start_idx, dtype=np.int64)
    pay = np.zeros(episodes)
    disc = np.ones(episodes)
    reached = np.zeros(episodes, dtype=bool)
    alive = np.ones(episodes, dtype=bool)
    for _ in range(max_steps):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        here = cur[idx]
        u = rng.random(idx.size)
        k = (u[:, None] >= cum[here]).sum(axis=1)
        r = rew[here, k]
        if biased:
            pay[idx] += disc[idx] * r
            disc[idx] *= np.where(r > 0.0, zeta, 1.0)
        else:
            pay[idx] += r
        nxt = succ[here, k]
        hit = nxt == sentinel
        if hit.any():
            reached[idx[hit]] = True
            alive[idx[hit]] = False
        cur[idx] = nxt
    return pay, reached
