"""Exhaustive verification of codes and the relaxed-game upper bound.

Everything here works from a code's decode table and the generic update rule,
never from the construction that produced the table.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .constructions import build_construction1, build_diagonal_code, construction1_t, diagonal_t
from .core import ORIGIN, PhysicalState, WomCode, reachable_region, update
from .errors import IndexOutOfRange, InvalidCode, InvalidParams, NoReachableLabel


@dataclass(frozen=True)
class ReachableSetTrace:
    """``per_write_states[i]`` holds every state reachable after exactly i writes."""

    per_write_states: tuple[frozenset[PhysicalState], ...]

    @property
    def writes(self) -> int:
        return len(self.per_write_states) - 1


@dataclass(frozen=True)
class Violation:
    write: int
    state: PhysicalState

    def __str__(self) -> str:
        return f"write {self.write}: state {tuple(self.state)} exceeds the imbalance bound"


def _write_key(code: WomCode, i: int) -> int | None:
    return None if code.params.shared_labels else i


def _targets(code: WomCode, s: PhysicalState, write: int) -> list[PhysicalState] | None:
    """Update targets for every input value, or None if some value is unwritable."""
    out = []
    for v in range(code.params.input_size(write)):
        try:
            nxt = update(code, s, v, write)
        except NoReachableLabel:
            return None
        if code.decode_table[nxt].value != v or not nxt.dominates(s):
            raise InvalidCode(f"update({tuple(s)}, {v}) returned inconsistent state {tuple(nxt)}")
        out.append(nxt)
    return out


def guaranteed_writes(code: WomCode) -> int:
    """Largest t such that every length-t message sequence succeeds from (0, 0).

    Shared-label codes: ``G(s) = 1 + min G(update(s, v))`` over values that
    actually move the state (re-sending the stored value costs nothing, so the
    adversary never gains from it). Per-write codes advance the write index on
    every step, so no values are skipped.
    """
    d = code.d
    shared = code.params.shared_labels
    memo: dict[tuple[PhysicalState, int], int] = {}

    def g(s: PhysicalState, write: int) -> int:
        key = (s, 0 if shared else write)
        if key in memo:
            return memo[key]
        if not shared and write > code.t:
            memo[key] = 0
            return 0
        targets = _targets(code, s, write)
        if targets is None or any(n.imbalance > d for n in targets):
            memo[key] = 0
            return 0
        moves = [n for n in targets if n != s] if shared else targets
        memo[key] = 1 + min(g(n, write + 1) for n in moves) if moves else 0
        return memo[key]

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * code.q + 100))
    try:
        return g(ORIGIN, 1)
    finally:
        sys.setrecursionlimit(limit)


def reachable_trace(code: WomCode, writes: int | None = None) -> ReachableSetTrace:
    """Breadth-first closure of the update rule over all message sequences."""
    writes = code.t if writes is None else writes
    layers = [frozenset({ORIGIN})]
    for i in range(1, writes + 1):
        nxt = set()
        for s in layers[-1]:
            for v in range(code.params.input_size(i)):
                try:
                    nxt.add(update(code, s, v, i))
                except NoReachableLabel:
                    continue
        layers.append(frozenset(nxt))
    return ReachableSetTrace(tuple(layers))


def check_imbalance_exhaustive(code: WomCode) -> ReachableSetTrace | Violation:
    """Return the reachable-set trace, or the first out-of-band state met."""
    trace = reachable_trace(code)
    for i, layer in enumerate(trace.per_write_states[1:], start=1):
        bad = sorted(s for s in layer if s.imbalance > code.d)
        if bad:
            return Violation(i, bad[0])
    return trace


def maximal_states(states: Iterable[PhysicalState]) -> frozenset[PhysicalState]:
    states = set(states)
    return frozenset(s for s in states if not any(o != s and o.dominates(s) for o in states))


def compute_frontiers(code: WomCode, i: int, t: int | None = None) -> frozenset[PhysicalState]:
    """Frontier states after ``i`` writes; ``i=0`` is rejected.

    ``t`` may be passed to skip recomputing the guaranteed write count.
    """
    t = guaranteed_writes(code) if t is None else t
    if not 1 <= i <= t:
        raise IndexOutOfRange(f"frontier index {i} outside 1..{t}")
    return maximal_states(reachable_trace(code, i).per_write_states[i])


def all_frontiers(code: WomCode) -> list[frozenset[PhysicalState]]:
    """``[F_0, F_1, ..., F_t]`` with ``F_0 = {(0, 0)}``."""
    trace = reachable_trace(code, guaranteed_writes(code))
    return [maximal_states(layer) for layer in trace.per_write_states]


# --- relaxed game -------------------------------------------------------------


@lru_cache(maxsize=256)
def relaxed_game_values(q: int, M: int, d: int) -> dict[PhysicalState, int]:
    """Relaxed-game value ``T(s)`` for every d-balanced state.

    The player at ``s`` picks ``M`` distinct states in the write region of
    ``s`` (``s`` itself may host one message, which the adversary then
    ignores), and the adversary moves to the worst of the others. Labels are
    free to differ between histories, so any real code's guarantee from ``s``
    is at most ``T(s)``.
    """
    if q < 2 or M < 2 or d < 1:
        raise InvalidParams(f"need q >= 2, M >= 2, d >= 1 (q={q}, M={M}, d={d})")
    states = [PhysicalState(x, y) for x in range(q) for y in range(max(0, x - d), min(q - 1, x + d) + 1)]
    states.sort(key=lambda s: -s.level_sum)
    T: dict[PhysicalState, int] = {}
    for s in states:
        region = reachable_region(s, q, d).members
        if len(region) < M:
            T[s] = 0
            continue
        others = sorted((T[r] for r in region if r != s), reverse=True)
        T[s] = 1 + others[M - 2]
        # region(s) contains the regions of its successors, so T must be antitone
        for nb in (PhysicalState(s.c1 + 1, s.c2), PhysicalState(s.c1, s.c2 + 1)):
            if nb in T and T[nb] > T[s]:
                raise AssertionError(f"relaxed game value not antitone at {tuple(s)}")
    return T


def relaxed_game_t(q: int, M: int, d: int) -> int:
    # a band at least q-1 wide is no constraint
    return relaxed_game_values(q, M, min(d, q - 1))[ORIGIN]


def imbalance_upper_bound_m8_d3(q: int) -> int:
    return 3 * (q - 1) // 5


TABLE1_HEADER = ("q", "upper_bound_unconstrained", "t_construction1_d3", "t_diagonal_d2")
TABLE1_Q = (8, 16, 20, 32)
TABLE2_ROWS = {15: (9,), 24: (9, 10, 12, 13, 16), 35: (11, 15), 48: (13, 14)}


def table1(q_list: Sequence[int] = TABLE1_Q, verify: bool = True) -> list[dict[str, int]]:
    """Write counts for 2-cell, M=8 codes.

    With ``verify`` the two construction columns are cross-checked against
    the built codes.
    """
    rows = []
    for q in q_list:
        if q < 2:
            raise InvalidParams(f"q must be >= 2, got {q}")
        t3, t2 = construction1_t(3, q), diagonal_t(3, q)
        if verify:
            if q >= 4 and guaranteed_writes(build_construction1(3, q)) != t3:
                raise AssertionError(f"Construction 1 at q={q} does not attain {t3} writes")
            if q >= 3 and guaranteed_writes(build_diagonal_code(3, q)) != t2:
                raise AssertionError(f"diagonal code at q={q} does not attain {t2} writes")
        rows.append(
            {
                "q": q,
                "upper_bound_unconstrained": relaxed_game_t(q, 8, q - 1),
                "t_construction1_d3": t3,
                "t_diagonal_d2": t2,
            }
        )
    return rows


def table2_check(a: int, q: int) -> bool:
    """Does Construction 1 reach the unconstrained relaxed-game bound at (a, q)?"""
    if a < 3 or q < 2:
        raise InvalidParams("need a >= 3 and q >= 2")
    return construction1_t(a, q) == relaxed_game_t(q, a * a - 1, q - 1)


def table2(rows: dict[int, Sequence[int]] = TABLE2_ROWS) -> list[dict[str, object]]:
    out = []
    for M, qs in rows.items():
        a = round((M + 1) ** 0.5)
        if a * a - 1 != M:
            raise InvalidParams(f"M={M} is not of the form a^2-1")
        out.append({"M": M, "q": list(qs), "attained": [table2_check(a, q) for q in qs]})
    return out
