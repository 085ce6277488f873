"""Deploying a 2-cell code across a wordline of N cell pairs.

Updating each pair independently can leave neighbouring pairs far apart. The
wordline update re-encodes every pair from a frontier state of the previous
write, so after write ``i`` every pair sits between ``F_{i-1}`` and ``F_i``.
For codes whose consecutive frontiers are mutually balanced this keeps the
whole wordline balanced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import ORIGIN, PhysicalState, WomCode, update, write_sum
from .errors import CapacityExhausted, InvalidParams, NoAccessibleFrontier, NoReachableLabel, WordlineInvariantError
from .verifier import all_frontiers

FrontierSet = frozenset[PhysicalState]


def accessible_frontiers(frontier: Iterable[PhysicalState], s: Iterable[int]) -> FrontierSet:
    s = PhysicalState(*s)
    return frozenset(f for f in frontier if f.dominates(s))


@dataclass
class Deployment:
    """A code together with its frontiers and a transition cache."""

    code: WomCode
    frontiers: list[FrontierSet] = field(default_factory=list)
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.frontiers:
            self.frontiers = all_frontiers(self.code)

    @property
    def t(self) -> int:
        return len(self.frontiers) - 1

    def transition(self, s: PhysicalState, m: int, i: int) -> PhysicalState:
        """Pair update for write ``i``: best frontier of ``F_{i-1}`` above ``s``, then the code update.

        The frontier minimizing the write sum from ``s`` wins; ties go to the
        lexicographically smaller result, then the smaller frontier.
        """
        key = (i, s, m)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        options = accessible_frontiers(self.frontiers[i - 1], s)
        if not options:
            raise NoAccessibleFrontier(f"no state of F_{i - 1} dominates {tuple(s)}")
        best = None
        for c in sorted(options):
            try:
                nxt = update(self.code, c, m, i)
            except NoReachableLabel:
                continue
            rank = (write_sum(s, nxt), nxt, c)
            if best is None or rank < best:
                best = rank
        if best is None:
            raise NoReachableLabel(f"value {m} unreachable from every frontier above {tuple(s)}")
        self._memo[key] = best[1]
        return best[1]


@dataclass(frozen=True)
class Wordline:
    deployment: Deployment
    pairs: tuple[PhysicalState, ...]
    write_index: int = 0

    @property
    def code(self) -> WomCode:
        return self.deployment.code

    @property
    def levels(self) -> list[int]:
        return [c for p in self.pairs for c in p]


def new_wordline(code: WomCode | Deployment, n_pairs: int) -> Wordline:
    if n_pairs < 1:
        raise InvalidParams(f"a wordline needs at least one pair, got {n_pairs}")
    dep = code if isinstance(code, Deployment) else Deployment(code)
    return Wordline(dep, (ORIGIN,) * n_pairs, 0)


def max_adjacent_gap(levels: Sequence[int]) -> int:
    return max((abs(a - b) for a, b in zip(levels, levels[1:])), default=0)


def frontier_sandwiched(dep: Deployment, s: PhysicalState, i: int) -> bool:
    below = any(s.dominates(f) for f in dep.frontiers[i - 1])
    above = any(f.dominates(s) for f in dep.frontiers[i])
    return below and above


def wordline_update(wl: Wordline, messages: Sequence[int], check: bool = True) -> Wordline:
    """One wordline write: every pair is re-encoded from a frontier of the previous write."""
    dep = wl.deployment
    i = wl.write_index + 1
    if i > dep.t:
        raise CapacityExhausted(f"write {i} exceeds the code's {dep.t} guaranteed writes")
    if len(messages) != len(wl.pairs):
        raise InvalidParams(f"expected {len(wl.pairs)} messages, got {len(messages)}")
    pairs = tuple(dep.transition(s, int(m), i) for s, m in zip(wl.pairs, messages))
    out = Wordline(dep, pairs, i)
    if check:
        gap = max_adjacent_gap(out.levels)
        if gap > wl.code.d:
            raise WordlineInvariantError(f"write {i}: adjacent cells differ by {gap} > d={wl.code.d}")
        for s in pairs:
            if not frontier_sandwiched(dep, s, i):
                raise WordlineInvariantError(f"write {i}: pair {tuple(s)} is outside the frontier sandwich")
    return out


def naive_wordline_update(wl: Wordline, messages: Sequence[int]) -> Wordline:
    """Per-pair update straight from the current states, without frontiers."""
    i = wl.write_index + 1
    pairs = tuple(update(wl.code, s, int(m), i) for s, m in zip(wl.pairs, messages))
    return Wordline(wl.deployment, pairs, i)


def random_messages(code: WomCode, n_pairs: int, writes: int, rng: np.random.Generator) -> list[list[int]]:
    return [rng.integers(0, code.params.input_size(i), size=n_pairs).tolist() for i in range(1, writes + 1)]


def simulate_wordline(
    code: WomCode | Deployment,
    n_pairs: int,
    message_seq: Sequence[Sequence[int]] | None = None,
    seed: int | None = None,
    writes: int | None = None,
) -> list[dict[str, object]]:
    """Apply successive wordline writes and record levels and invariant flags.

    Without ``message_seq``, ``writes`` (default: all guaranteed writes)
    random message vectors are drawn from a generator seeded with ``seed``.
    """
    wl = new_wordline(code, n_pairs)
    dep = wl.deployment
    if message_seq is None:
        writes = dep.t if writes is None else writes
        message_seq = random_messages(dep.code, n_pairs, writes, np.random.default_rng(seed))
    trace = []
    for messages in message_seq:
        wl = wordline_update(wl, messages, check=False)
        levels = wl.levels
        trace.append(
            {
                "i": wl.write_index,
                "levels": levels,
                "balanced": max_adjacent_gap(levels) <= dep.code.d,
                "frontier_ok": all(frontier_sandwiched(dep, s, wl.write_index) for s in wl.pairs),
            }
        )
    return trace


@dataclass(frozen=True)
class WordlineViolation:
    write: int
    left: PhysicalState
    right: PhysicalState
    gap: int


def exhaustive_wordline_check(code: WomCode | Deployment) -> list[WordlineViolation]:
    """Check every wordline length at once.

    Pairs evolve independently, so after write ``i`` any two states reachable
    by a single pair can sit next to each other. Checking all ordered pairs of
    the per-pair reachable set covers every N and every message sequence.
    """
    dep = code if isinstance(code, Deployment) else Deployment(code)
    d = dep.code.d
    layer = {ORIGIN}
    bad = []
    for i in range(1, dep.t + 1):
        size = dep.code.params.input_size(i)
        layer = {dep.transition(s, m, i) for s in layer for m in range(size)}
        for s in sorted(layer):
            if s.imbalance > d:
                bad.append(WordlineViolation(i, s, s, s.imbalance))
            for r in sorted(layer):
                gap = abs(s.c2 - r.c1)
                if gap > d:
                    bad.append(WordlineViolation(i, s, r, gap))
    return bad
