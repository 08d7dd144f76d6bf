"""Tabular Q-learning on the leaked payoff views.

Episodes run on the augmented dynamics: accepting steps divert to the target
with probability (1-zeta), and an episode ends there (or at the step cap).
Updates are undiscounted; the termination itself supplies the effective
bias, so the fixpoint of the update is the expected payoff of the view.
Against the target there is no bootstrap.

Randomness comes from a buffered uniform stream that is bit-transparent to
the underlying generator, so a fast training loop and the trace-recording
single-episode entry point consume identical draw sequences and can be
replayed against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import RunRecord
from .product import Strategy
from .shaping import AugmentedModel, Mode


class UniformStream:
    """Buffered uniform(0,1) draws from a numpy Generator.

    Chunked `Generator.random(n)` yields the same values as repeated single
    calls, so buffering does not change the stream, only when it is drawn.
    """

    CHUNK = 4096
    __slots__ = ("rng", "buf", "pos")

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf = rng.random(self.CHUNK).tolist()
        self.pos = 0

    def draw(self) -> float:
        if self.pos == self.CHUNK:
            self.buf = self.rng.random(self.CHUNK).tolist()
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return v


@dataclass(frozen=True)
class LearnConfig:
    episodes: int = 50_000
    max_steps: int = 1000
    alpha0: float = 1.0
    visit_decay: float = 1000.0  # alpha = alpha0 / (1 + visits/visit_decay)
    epsilon0: float = 0.3
    epsilon_final: float = 0.01
    anneal_fraction: float = 0.5  # epsilon reaches its floor this far in
    seed: int = 0
    optimistic: bool = False


def epsilon_at(cfg: LearnConfig, episode: int) -> float:
    span = max(1, int(cfg.episodes * cfg.anneal_fraction))
    t = min(1.0, episode / span)
    return cfg.epsilon0 + (cfg.epsilon_final - cfg.epsilon0) * t


@dataclass
class QTable:
    """Estimates and visit counts per (product state, pair)."""

    q: list[list[float]]
    visits: list[list[int]]

    @classmethod
    def for_model(cls, model: AugmentedModel, init: float = 0.0) -> "QTable":
        q = [[init] * len(plist) for plist in model.product.pairs]
        visits = [[0] * len(plist) for plist in model.product.pairs]
        return cls(q, visits)

    def greedy(self) -> Strategy:
        out = []
        for row in self.q:
            best = 0
            for k in range(1, len(row)):
                if row[k] > row[best]:
                    best = k
            out.append(best)
        return Strategy(tuple(out))


@dataclass
class TrainResult:
    table: QTable
    strategy: Strategy
    curve: list[tuple[int, float, float]]  # (episode, total reward, epsilon)


def _check_mode(model: AugmentedModel) -> bool:
    """Returns True for the reach view; rejects the biased view, whose
    episodes never terminate and whose returns the undiscounted update does
    not estimate."""
    if model.mode is Mode.BIASED_DISCOUNT:
        raise ValueError("learning runs on the leaked views (reach or total)")
    return model.mode is Mode.REACH_TARGET


def _sim_tables(model: AugmentedModel):
    """Per state, per pair: (partial branch prob sums, successors, accepting).

    Built from the raw product branches; the diversion coin is separate so
    traces keep their symbols and both episode loops sample identically.
    """
    sim = []
    for plist in model.product.pairs:
        rows = []
        for pair in plist:
            cums = []
            acc = 0.0
            for b in pair.branches[:-1]:
                acc += b.prob
                cums.append(acc)
            rows.append(
                (
                    cums,
                    [b.succ for b in pair.branches],
                    [b.accepting for b in pair.branches],
                )
            )
        sim.append(rows)
    return sim


def run_episode(
    model: AugmentedModel,
    table: QTable,
    cfg: LearnConfig,
    rng: np.random.Generator | UniformStream,
    epsilon: float | None = None,
) -> RunRecord:
    """One epsilon-greedy episode with in-place Q updates and a full trace.

    Draw accounting (shared with the training loop): states with a single
    pair and pairs with a single branch spend no randomness; otherwise one
    uniform decides greedy vs explore (a second picks the explored pair), one
    picks the branch, and accepting branches spend one on the diversion coin.
    """
    reach_mode = _check_mode(model)
    stream = rng if isinstance(rng, UniformStream) else UniformStream(rng)
    eps = cfg.epsilon0 if epsilon is None else epsilon
    p = model.product
    q = table.q
    visits = table.visits
    one_minus_zeta = 1.0 - model.zeta
    racc_cont = 0.0 if reach_mode else 1.0

    cur = p.initial
    states = [cur]
    actions: list[int] = []
    labels: list[int] = []
    accepting: list[bool] = []
    reached = False
    for _ in range(cfg.max_steps):
        row = q[cur]
        npairs = len(row)
        if npairs == 1:
            k = 0
        elif stream.draw() < eps:
            k = int(stream.draw() * npairs)
            if k == npairs:
                k = npairs - 1
        else:
            k = 0
            for i in range(1, npairs):
                if row[i] > row[k]:
                    k = i
        branches = p.pairs[cur][k].branches
        b = branches[-1]
        if len(branches) > 1:
            u = stream.draw()
            acc_p = 0.0
            for cand in branches[:-1]:
                acc_p += cand.prob
                if u < acc_p:
                    b = cand
                    break
        diverted = False
        if b.accepting:
            diverted = stream.draw() < one_minus_zeta
        r = 1.0 if diverted else (racc_cont if b.accepting else 0.0)
        if diverted:
            target_q = r
        else:
            nrow = q[b.succ]
            m = nrow[0]
            for i in range(1, len(nrow)):
                if nrow[i] > m:
                    m = nrow[i]
            target_q = r + m
        nv = visits[cur][k]
        alpha = cfg.alpha0 / (1.0 + nv / cfg.visit_decay)
        row[k] += alpha * (target_q - row[k])
        visits[cur][k] = nv + 1
        actions.append(k)
        labels.append(b.symbol)
        accepting.append(b.accepting)
        if diverted:
            states.append(model.target)
            reached = True
            break
        states.append(b.succ)
        cur = b.succ
    return RunRecord(tuple(states), tuple(actions), tuple(labels), tuple(accepting), reached)


def _episode(sim, q, visits, initial, eps, one_minus_zeta, racc_cont, cfg, stream):
    """Fast no-trace episode; draw-for-draw identical to run_episode."""
    rng = stream.rng
    buf = stream.buf
    pos = stream.pos
    chunk = UniformStream.CHUNK
    alpha0 = cfg.alpha0
    decay = cfg.visit_decay
    cur = initial
    row = q[cur]
    vrow = visits[cur]
    pairs = sim[cur]
    npairs = len(row)
    total = 0.0
    for _ in range(cfg.max_steps):
        if npairs == 1:
            k = 0
        else:
            if pos == chunk:
                buf = rng.random(chunk).tolist()
                stream.buf = buf
                pos = 0
            u = buf[pos]
            pos += 1
            if u < eps:
                if pos == chunk:
                    buf = rng.random(chunk).tolist()
                    stream.buf = buf
                    pos = 0
                k = int(buf[pos] * npairs)
                pos += 1
                if k == npairs:
                    k = npairs - 1
            else:
                k = 0
                best = row[0]
                for i in range(1, npairs):
                    if row[i] > best:
                        best = row[i]
                        k = i
        cums, succs, accs = pairs[k]
        if cums:
            if pos == chunk:
                buf = rng.random(chunk).tolist()
                stream.buf = buf
                pos = 0
            u = buf[pos]
            pos += 1
            b = len(cums)
            for i, cp in enumerate(cums):
                if u < cp:
                    b = i
                    break
        else:
            b = 0
        if accs[b]:
            if pos == chunk:
                buf = rng.random(chunk).tolist()
                stream.buf = buf
                pos = 0
            diverted = buf[pos] < one_minus_zeta
            pos += 1
            if diverted:
                total += 1.0
                nv = vrow[k]
                row[k] += (alpha0 / (1.0 + nv / decay)) * (1.0 - row[k])
                vrow[k] = nv + 1
                stream.pos = pos
                return total, True
            r = racc_cont
            total += r
        else:
            r = 0.0
        nxt = succs[b]
        nrow = q[nxt]
        m = nrow[0]
        for i in range(1, len(nrow)):
            if nrow[i] > m:
                m = nrow[i]
        nv = vrow[k]
        row[k] += (alpha0 / (1.0 + nv / decay)) * (r + m - row[k])
        vrow[k] = nv + 1
        if nxt != cur:
            cur = nxt
            row = q[cur]
            vrow = visits[cur]
            pairs = sim[cur]
            npairs = len(row)
    stream.pos = pos
    return total, False


def train(model: AugmentedModel, cfg: LearnConfig) -> TrainResult:
    """Run cfg.episodes epsilon-greedy episodes and return table, greedy
    strategy and the per-episode learning curve."""
    reach_mode = _check_mode(model)
    init = 0.0
    if cfg.optimistic:
        init = 1.0 if reach_mode else 1.0 / (1.0 - model.zeta)
    table = QTable.for_model(model, init)
    stream = UniformStream(np.random.default_rng(cfg.seed))
    sim = _sim_tables(model)
    one_minus_zeta = 1.0 - model.zeta
    racc_cont = 0.0 if reach_mode else 1.0
    curve: list[tuple[int, float, float]] = []
    initial = model.product.initial
    for ep in range(cfg.episodes):
        eps = epsilon_at(cfg, ep)
        total, _ = _episode(
            sim, table.q, table.visits, initial, eps, one_minus_zeta, racc_cont, cfg, stream
        )
        curve.append((ep, total, eps))
    return TrainResult(table, table.greedy(), curve)
