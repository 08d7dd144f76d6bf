"""Product of a labelled MDP with a Buchi automaton.

A product state is a pair (MDP state, automaton state).  A product action is
a pair (MDP action, automaton successor q'): playing it runs the MDP action
and resolves the automaton nondeterminism to q' on whatever symbol comes out.
The pair is available only when the automaton has a move to q' for the symbol
of every MDP branch; a pair that covers only part of the branching would lose
probability mass and is dropped.  A branch is accepting exactly when the
automaton transition it takes is accepting.

Construction explores only states reachable from (initial, initial).  A
reachable state where every pair was dropped is a modelling dead end and
raises, rather than silently producing a sub-stochastic model.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

from .automata import Nba, is_complete, is_deterministic
from .mdp import Mdp


class ProductError(ValueError):
    """Base for product construction failures."""


class AlphabetMismatchError(ProductError):
    pass


class IncompleteAutomatonError(ProductError):
    pass


class DeadEndError(ProductError):
    pass


class Branch(NamedTuple):
    succ: int        # product state index
    prob: float
    symbol: int      # MDP symbol index
    accepting: bool  # the automaton transition taken is accepting


class Pair(NamedTuple):
    action: int      # MDP action index
    memory: int      # automaton successor state
    branches: tuple[Branch, ...]


@dataclass(frozen=True)
class ProductMdp:
    mdp: Mdp
    nba: Nba
    states: tuple[tuple[int, int], ...]      # (mdp state, automaton state)
    pairs: tuple[tuple[Pair, ...], ...]      # available pairs per product state
    gfm_caveat: bool

    initial = 0  # construction starts there by definition

    @cached_property
    def index(self) -> dict[tuple[int, int], int]:
        return {sq: i for i, sq in enumerate(self.states)}

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_pairs(self) -> int:
        return sum(len(p) for p in self.pairs)

    @property
    def accepting_branch_count(self) -> int:
        return sum(
            b.accepting for plist in self.pairs for p in plist for b in p.branches
        )

    def state_name(self, i: int) -> str:
        s, q = self.states[i]
        return f"{self.mdp.states[s]}|q{q}"

    def pair_name(self, state: int, k: int) -> str:
        p = self.pairs[state][k]
        return f"{self.mdp.actions[p.action]}@q{p.memory}"


def build_product(m: Mdp, a: Nba) -> ProductMdp:
    """Reachable product of `m` and `a`; see the module docstring for the rules.

    Preconditions: `m` passes validation and `a` is complete.  The asserted
    good-for-MDPs flag is not checked; when the automaton is neither
    deterministic nor flagged, the result carries ``gfm_caveat=True`` and
    downstream optima are only guaranteed to be lower bounds on the Buchi
    value of `m`.
    """
    if set(m.symbols) != set(a.symbols):
        only_m = sorted(set(m.symbols) - set(a.symbols))
        only_a = sorted(set(a.symbols) - set(m.symbols))
        raise AlphabetMismatchError(
            f"alphabets differ (MDP only: {only_m}, automaton only: {only_a})"
        )
    if not is_complete(a):
        raise IncompleteAutomatonError(
            "automaton is missing moves; complete it first "
            "(complete_with_trap adds a rejecting trap)"
        )
    sym_map = tuple(a.symbols.index(name) for name in m.symbols)

    states: list[tuple[int, int]] = [(m.initial, a.initial)]
    index: dict[tuple[int, int], int] = {states[0]: 0}
    pairs_out: list[tuple[Pair, ...]] = []

    def state_id(sq: tuple[int, int]) -> int:
        i = index.get(sq)
        if i is None:
            i = len(states)
            index[sq] = i
            states.append(sq)
        return i

    head = 0
    while head < len(states):
        s, q = states[head]
        plist: list[Pair] = []
        for act in m.available(s):
            edges = m.branches(s, act)
            if any(e.symbol is None for e in edges):
                raise ProductError(
                    f"unlabelled edge at ({m.states[s]},{m.actions[act]}); "
                    "validate the MDP first"
                )
            for q2 in range(a.n_states):
                branches: list[Branch] = []
                for e in edges:
                    acc = None
                    for r, f in a.moves(q, sym_map[e.symbol]):
                        if r == q2:
                            acc = f
                            break
                    if acc is None:
                        branches = []
                        break
                    branches.append(
                        Branch(state_id((e.succ, q2)), e.prob, e.symbol, acc)
                    )
                if branches:
                    plist.append(Pair(act, q2, tuple(branches)))
        if not plist:
            raise DeadEndError(
                f"product state ({m.states[s]},q{q}) has no available pair; "
                "every automaton choice drops probability mass"
            )
        pairs_out.append(tuple(plist))
        head += 1

    caveat = not (a.gfm is True or is_deterministic(a))
    return ProductMdp(m, a, tuple(states), tuple(pairs_out), caveat)


@dataclass(frozen=True)
class Strategy:
    """Positional product strategy: one available pair index per state."""

    choice: tuple[int, ...]

    def check(self, p: ProductMdp) -> None:
        if len(self.choice) != p.n_states:
            raise ValueError("strategy length does not match the product")
        for st, k in enumerate(self.choice):
            if not 0 <= k < len(p.pairs[st]):
                raise ValueError(f"strategy picks unavailable pair {k} at state {st}")


def random_strategy(p: ProductMdp, rng) -> Strategy:
    return Strategy(tuple(int(rng.integers(len(p.pairs[st]))) for st in range(p.n_states)))


@dataclass(frozen=True)
class MemoryStrategy:
    """Finite-memory MDP strategy, memory = automaton state.

    In memory q at MDP state s, play `action` and move the memory to `next_memory`
    regardless of the sampled successor; the product pair already fixes it.
    """

    table: dict[tuple[int, int], tuple[int, int]]  # (s, q) -> (action, next memory)
    initial_memory: int = 0

    def act(self, s: int, q: int) -> tuple[int, int]:
        return self.table[(s, q)]


def project_strategy(p: ProductMdp, f: Strategy) -> MemoryStrategy:
    """Turn a positional product strategy into an MDP strategy with memory."""
    f.check(p)
    table: dict[tuple[int, int], tuple[int, int]] = {}
    for st, (s, q) in enumerate(p.states):
        pair = p.pairs[st][f.choice[st]]
        table[(s, q)] = (pair.action, pair.memory)
    return MemoryStrategy(table, p.states[0][1])


def recompose_strategy(p: ProductMdp, ms: MemoryStrategy) -> Strategy:
    """Inverse of project_strategy on the reachable product."""
    choice: list[int] = []
    for st, (s, q) in enumerate(p.states):
        want = ms.table.get((s, q))
        if want is None:
            raise ValueError(f"memory strategy undefined at ({p.mdp.states[s]},q{q})")
        for k, pair in enumerate(p.pairs[st]):
            if (pair.action, pair.memory) == want:
                choice.append(k)
                break
        else:
            raise ValueError(
                f"memory strategy picks unavailable pair at ({p.mdp.states[s]},q{q})"
            )
    return Strategy(tuple(choice))
