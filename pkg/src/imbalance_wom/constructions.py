"""Explicit d-imbalance code families and their closed-form write counts.

Both families label states with ``m(i, j) = i + j*a`` for ``0 <= i, j < a``
minus the pair ``(a-1, a-1)``, giving ``M = a^2 - 1`` values. Diagonal
values ``m(k, k)`` are only ever placed on the main diagonal, where state
``(j, j)`` carries ``m(j mod (a-1), j mod (a-1))``. This cyclic rule is what
lets consecutive blocks or periods share their corner state.

Diagonal stacking (``d = a-1``) tiles ``a x a`` blocks with origins at
``k(a-1, a-1)``; every write consumes one block.

Construction 1 (``d = a``) repeats a three-write period of side ``3a-4``:

* write 1: the ``a x a`` block at the period origin, minus its top corner;
* write 2: the block at ``(a-1, a-1)``, minus the two states just below its
  top corner, plus two side states at ``(a, a-2)`` and ``(a-2, a)``;
* write 3: the block at ``(2a-3, 2a-3)`` labeled point-reflected
  (``m(a-1-i, a-1-j)``), plus a side row at height ``2a-4`` and its mirror
  column carrying ``m(a-1, 0..a-2)`` without ``m(a-1, a-3)``.

The corner of write 3's block is the next period's origin.
"""

from __future__ import annotations

from .core import CodeParams, Family, Label, PhysicalState, WomCode
from .errors import InvalidParams


def label_value(i: int, j: int, a: int) -> int:
    return i + j * a


def _diag_value(k: int, a: int) -> int:
    r = k % (a - 1)
    return label_value(r, r, a)


def diagonal_t(a: int, q: int) -> int:
    return (q - 1) // (a - 1)


def construction1_t(a: int, q: int) -> int:
    return 3 * (q - 1) // (3 * a - 4)


def reference_t_unconstrained(a: int, q: int) -> int:
    """Write count of the earlier unconstrained two-cell construction."""
    return (q - 1) * (a + 1) // (a * a - 2)


def corollary_threshold(a: int) -> int:
    """Smallest q from which Construction 1 strictly beats the reference count."""
    num, den = (a * a - 2) * (3 * a - 4), a - 2
    return 1 + -(-num // den)


def period_length(a: int) -> int:
    return 3 * a - 4


def frontiers_closed_form(a: int, i: int) -> frozenset[PhysicalState]:
    """Maximal states after ``i`` writes of Construction 1 (full periods only)."""
    if a < 3 or i < 1:
        raise InvalidParams("need a >= 3 and i >= 1")
    periods, k = divmod(i, 3)
    if k == 0:
        periods, k = periods - 1, 3
    base = {
        1: [(a - 1, a - 2), (a - 2, a - 1)],
        2: [(2 * a - 2, 2 * a - 4), (2 * a - 3, 2 * a - 3), (2 * a - 4, 2 * a - 2)],
        3: [(3 * a - 4, 3 * a - 4)],
    }[k]
    shift = periods * period_length(a)
    return frozenset(PhysicalState(x + shift, y + shift) for x, y in base)


def _check_a(a: int) -> None:
    if not isinstance(a, int) or a < 3:
        raise InvalidParams(f"rate parameter a must be an integer >= 3, got {a!r}")


def build_diagonal_code(a: int, q: int) -> WomCode:
    _check_a(a)
    if q < a:
        raise InvalidParams(f"diagonal stacking needs q >= a (got q={q}, a={a})")
    t = diagonal_t(a, q)
    table: dict[PhysicalState, Label] = {}
    for block in range(t):
        o = block * (a - 1)
        for i in range(a):
            for j in range(a):
                if i == j == a - 1:
                    continue
                s = PhysicalState(o + i, o + j)
                value = _diag_value(o + i, a) if i == j else label_value(i, j, a)
                table.setdefault(s, Label(value, block + 1))
    params = CodeParams(q=q, m=(a * a - 1,) * t, d=a - 1, t=t, family=Family.DIAGONAL, a=a)
    return WomCode(params, table)


def _period_layout(a: int) -> list[dict[tuple[int, int], int]]:
    """Off-diagonal labels of one period, keyed by position relative to the origin.

    Returns three dicts (writes 1, 2, 3). Diagonal states are filled separately
    by the cyclic rule.
    """
    m = lambda i, j: label_value(i, j, a)  # noqa: E731
    w1 = {(i, j): m(i, j) for i in range(a) for j in range(a) if i != j}

    w2: dict[tuple[int, int], int] = {}
    skip = {(a - 1, a - 2), (a - 2, a - 1)}
    for i in range(a):
        for j in range(a):
            if i != j and (i, j) not in skip:
                w2[(a - 1 + i, a - 1 + j)] = m(i, j)
    w2[(a, a - 2)] = m(a - 2, a - 1)
    w2[(a - 2, a)] = m(a - 1, a - 2)

    w3: dict[tuple[int, int], int] = {}
    o3 = 2 * a - 3
    for i in range(a):
        for j in range(a):
            if i != j:
                w3[(o3 + i, o3 + j)] = m(a - 1 - i, a - 1 - j)
    side = [j for j in range(a - 1) if j != a - 3]
    for k, j in enumerate(side):
        w3[(2 * a - 1 + k, 2 * a - 4)] = m(a - 1, j)
        w3[(2 * a - 4, 2 * a - 1 + k)] = m(j, a - 1)
    return [w1, w2, w3]


def _period_diagonal(a: int) -> list[range]:
    """Relative diagonal offsets owned by writes 1, 2, 3 of a period."""
    return [range(0, a - 1), range(a - 1, 2 * a - 2), range(2 * a - 2, 3 * a - 3)]


def build_construction1(a: int, q: int) -> WomCode:
    """Build the d=a code with ``M = a^2 - 1`` on ``q`` levels.

    Full periods are laid out back to back along the diagonal; a trailing
    partial period keeps its first ``r`` write regions (``r`` in 1, 2) when
    they fit below level ``q-1``.
    """
    _check_a(a)
    if q < 2 * a - 2:
        raise InvalidParams(f"Construction 1 needs q >= 2a-2 (got q={q}, a={a})")
    t = construction1_t(a, q)
    period = period_length(a)
    layout = _period_layout(a)
    diag = _period_diagonal(a)
    table: dict[PhysicalState, Label] = {}
    for write in range(1, t + 1):
        p, k = divmod(write - 1, 3)
        o = p * period
        for (x, y), value in layout[k].items():
            table[PhysicalState(o + x, o + y)] = Label(value, write)
        for off in diag[k]:
            g = o + off
            table[PhysicalState(g, g)] = Label(_diag_value(g, a), write)
    params = CodeParams(q=q, m=(a * a - 1,) * t, d=a, t=t, family=Family.CONSTRUCTION1, a=a)
    return WomCode(params, table)


def build(family: str | Family, a: int, q: int) -> WomCode:
    family = Family(family)
    if family is Family.DIAGONAL:
        return build_diagonal_code(a, q)
    if family is Family.CONSTRUCTION1:
        return build_construction1(a, q)
    raise InvalidParams(f"family {family.value!r} has no explicit builder; use the lattice module")
