"""Domain types and the generic decode/update primitives for 2-cell WOM codes.

A code lives on the ``q x q`` grid of cell-level pairs. Its decode table maps
each labeled physical state to the logical value it stores and the write in
which that state is used. Updates follow the nearest-label rule: move to the
labeled state that dominates the current one element-wise, carries the new
value, and has the smallest write sum. Ties go to the smaller first level,
then the smaller second level.

Codes from the explicit constructions share one label space across writes.
Lattice 2-write codes use a separate label space per write, so their updates
must say which write is being performed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple

from .errors import InvalidCode, InvalidParams, NoReachableLabel, NotMonotone, UnlabeledState

N_CELLS = 2


class PhysicalState(NamedTuple):
    c1: int
    c2: int

    def dominates(self, other: tuple[int, int]) -> bool:
        """True iff ``self >= other`` in the element-wise (WOM) order."""
        return self.c1 >= other[0] and self.c2 >= other[1]

    @property
    def level_sum(self) -> int:
        return self.c1 + self.c2

    @property
    def imbalance(self) -> int:
        return abs(self.c1 - self.c2)

    def shifted(self, dx: int, dy: int | None = None) -> PhysicalState:
        return PhysicalState(self.c1 + dx, self.c2 + (dx if dy is None else dy))

    def transposed(self) -> PhysicalState:
        return PhysicalState(self.c2, self.c1)


ORIGIN = PhysicalState(0, 0)


class Label(NamedTuple):
    """Decode-table entry: stored value and the (1-based) write using the state."""

    value: int
    write: int


class Family(str, Enum):
    DIAGONAL = "diagonal"
    CONSTRUCTION1 = "construction1"
    LATTICE2WRITE = "lattice2write"


@dataclass(frozen=True)
class CodeParams:
    q: int
    m: tuple[int, ...]
    d: int
    t: int
    family: Family
    a: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        object.__setattr__(self, "family", Family(self.family))
        if self.q < 2:
            raise InvalidParams(f"q must be >= 2, got {self.q}")
        if self.t < 1 or len(self.m) != self.t:
            raise InvalidParams(f"need t >= 1 and one input size per write (t={self.t}, m={self.m})")
        if not 1 <= self.d <= self.q - 1:
            raise InvalidParams(f"d must lie in 1..q-1, got d={self.d}, q={self.q}")
        for size in self.m:
            if size < 2:
                raise InvalidParams(f"input sizes must be >= 2, got {size}")
            # a lattice write may span many levels, so the floor binds fixed-rate families only
            if self.shared_labels and size > (self.d + 1) ** N_CELLS:
                raise InvalidParams(
                    f"M={size} exceeds (d+1)^2={(self.d + 1) ** 2}: not writable under d={self.d}"
                )

    @property
    def shared_labels(self) -> bool:
        """Whether every write draws from the same label space."""
        return self.family is not Family.LATTICE2WRITE

    def input_size(self, write: int) -> int:
        return self.m[min(write, self.t) - 1]


@dataclass(frozen=True)
class WomCode:
    """A 2-cell WOM code: parameters plus a (partial) decode table.

    The constructor checks that every state is on the grid and every value is
    within its write's input size. The d-band is deliberately *not* enforced
    here so that broken codes can be fed to the verifier.
    """

    params: CodeParams
    decode_table: Mapping[PhysicalState, Label]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        q = self.params.q
        table: dict[PhysicalState, Label] = {}
        for state, label in self.decode_table.items():
            state = PhysicalState(*state)
            label = Label(*label)
            if not (0 <= state.c1 < q and 0 <= state.c2 < q):
                raise InvalidCode(f"state {tuple(state)} is outside the {q}x{q} grid")
            if not 1 <= label.write <= self.params.t:
                raise InvalidCode(f"state {tuple(state)} has write index {label.write} outside 1..{self.params.t}")
            if not 0 <= label.value < self.params.input_size(label.write):
                raise InvalidCode(f"state {tuple(state)} has value {label.value} out of range")
            table[state] = label
        object.__setattr__(self, "decode_table", table)

        index: dict[tuple[int | None, int], list[PhysicalState]] = {}
        for state, label in table.items():
            key = (None if self.params.shared_labels else label.write, label.value)
            index.setdefault(key, []).append(state)
        for states in index.values():
            states.sort(key=lambda s: (s.level_sum, s.c1, s.c2))
        object.__setattr__(self, "_index", index)

    @property
    def q(self) -> int:
        return self.params.q

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def t(self) -> int:
        return self.params.t

    def states(self) -> list[PhysicalState]:
        return sorted(self.decode_table)

    def candidates(self, value: int, write: int | None = None) -> list[PhysicalState]:
        """States carrying ``value`` sorted by level sum, then c1, then c2."""
        key = None if self.params.shared_labels else write
        return self._index.get((key, value), [])


def decode(code: WomCode, s: Iterable[int]) -> int:
    s = PhysicalState(*s)
    try:
        return code.decode_table[s].value
    except KeyError:
        raise UnlabeledState(f"state {tuple(s)} carries no label") from None


def update(code: WomCode, s: Iterable[int], v: int, write: int | None = None) -> PhysicalState:
    """Return the nearest labeled state ``>= s`` that decodes to ``v``.

    ``write`` (1-based) is required for codes with per-write label spaces and
    ignored otherwise. Rewriting the stored value of a shared-space code is a
    zero-cost self-update.
    """
    s = PhysicalState(*s)
    if not code.params.shared_labels:
        if write is None:
            raise InvalidParams("codes with per-write label spaces need the write index")
        if not 1 <= write <= code.t:
            raise NoReachableLabel(f"write {write} exceeds the code's {code.t} writes")
    size = code.params.input_size(write or 1)
    if not 0 <= v < size:
        raise InvalidParams(f"value {v} outside 0..{size - 1}")
    for cand in code.candidates(v, write):
        if cand.c1 >= s.c1 and cand.c2 >= s.c2:
            return cand
    raise NoReachableLabel(f"no state >= {tuple(s)} carries value {v}")


def is_d_balanced(levels: Iterable[int], d: int) -> bool:
    levels = list(levels)
    if not levels:
        raise InvalidParams("need at least one cell level")
    return max(levels) - min(levels) <= d


@dataclass(frozen=True)
class WriteRegion:
    origin: PhysicalState
    members: frozenset[PhysicalState]

    @property
    def area(self) -> int:
        return len(self.members)

    def __contains__(self, s: object) -> bool:
        return s in self.members


def reachable_region(s: Iterable[int], q: int, d: int | None) -> WriteRegion:
    """States reachable from ``s`` without lowering a level or leaving the d-band.

    ``d=None`` means unconstrained (equivalent to ``d = q - 1``).
    """
    s = PhysicalState(*s)
    if d is None:
        d = q - 1
    members = frozenset(
        PhysicalState(x, y)
        for x in range(s.c1, q)
        for y in range(max(s.c2, x - d), min(q - 1, x + d) + 1)
    )
    return WriteRegion(s, members)


def write_sum(frm: Iterable[int], to: Iterable[int]) -> int:
    frm, to = PhysicalState(*frm), PhysicalState(*to)
    if not to.dominates(frm):
        raise NotMonotone(f"{tuple(to)} is not >= {tuple(frm)}")
    return (to.c1 - frm.c1) + (to.c2 - frm.c2)


# --- JSON code document ----------------------------------------------------


def code_to_dict(code: WomCode) -> dict[str, Any]:
    p = code.params
    doc: dict[str, Any] = {
        "n": N_CELLS,
        "q": p.q,
        "m": list(p.m),
        "d": p.d,
        "t": p.t,
        "family": p.family.value,
    }
    if p.a is not None:
        doc["a"] = p.a
    doc["decode"] = [
        {"state": [s.c1, s.c2], "value": lab.value, "write": lab.write}
        for s, lab in sorted(code.decode_table.items())
    ]
    return doc


def _int(doc: Mapping[str, Any], key: str) -> int:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidCode(f"field {key!r} must be an integer, got {value!r}")
    return value


def code_from_dict(doc: Mapping[str, Any]) -> WomCode:
    try:
        if _int(doc, "n") != N_CELLS:
            raise InvalidCode(f"only n=2 codes are supported, got n={doc['n']}")
        m = doc["m"]
        if not isinstance(m, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in m):
            raise InvalidCode("field 'm' must be an array of integers")
        params = CodeParams(
            q=_int(doc, "q"),
            m=tuple(m),
            d=_int(doc, "d"),
            t=_int(doc, "t"),
            family=Family(doc["family"]),
            a=_int(doc, "a") if doc.get("a") is not None else None,
        )
        table: dict[PhysicalState, Label] = {}
        for entry in doc["decode"]:
            state = entry["state"]
            if len(state) != N_CELLS or not all(isinstance(c, int) and not isinstance(c, bool) for c in state):
                raise InvalidCode(f"bad state {state!r}")
            key = PhysicalState(*state)
            if key in table:
                raise InvalidCode(f"duplicate state {state}")
            table[key] = Label(_int(entry, "value"), _int(entry, "write"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParams):
            raise
        raise InvalidCode(f"malformed code document: {exc}") from exc
    return WomCode(params, table)


def save_code(code: WomCode, path: str | Path) -> None:
    Path(path).write_text(json.dumps(code_to_dict(code), indent=1) + "\n")


def load_code(path: str | Path) -> WomCode:
    return code_from_dict(json.loads(Path(path).read_text()))
