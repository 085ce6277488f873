"""Lattice-based 2-cell, 2-write codes: continuous boundaries and discretization.

The level square ``[0, q-1]^2`` is split by a boundary curve. Points below
the curve form the first-write region. Each point spans a second-write area
toward the top-right corner. Without an imbalance constraint the best curve
is a rectangular hyperbola. With a d-band it becomes a parabola and the
optimum has equal areas for both writes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from scipy import integrate

from .core import CodeParams, Family, Label, PhysicalState, WomCode
from .errors import DomainError, InfeasibleLabeling
from .verifier import maximal_states

_HALLEY_MAX_ITER = 60
_STEP_TOL = 1e-12
_INV_E = math.exp(-1.0)


def lambert_w_minus1(x: float) -> float:
    """Lower real branch ``W_{-1}(x)`` for ``-1/e <= x < 0``."""
    if not (-_INV_E - 1e-15 <= x < 0.0):
        raise DomainError(f"W_-1 is real only on [-1/e, 0), got {x}")
    if x <= -_INV_E:
        return -1.0
    if x < -0.25:
        # series about the branch point
        p = -math.sqrt(2.0 * (1.0 + math.e * x))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    else:
        l1 = math.log(-x)
        w = l1 - math.log(-l1)
    for _ in range(_HALLEY_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            break
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= _STEP_TOL * abs(w):
            break
    return w


def omega2() -> float:
    """Second-write area fraction of the optimal unconstrained boundary."""
    return -0.5 / lambert_w_minus1(-1.0 / (2.0 * math.sqrt(math.e)))


@dataclass(frozen=True)
class HyperbolaBoundary:
    """``beta(x) = (q-1) - omega2 (q-1)^2 / (q-1-x)`` on ``[0, (q-1)(1-omega2)]``."""

    q: int

    @property
    def omega(self) -> float:
        return omega2()

    @property
    def z2(self) -> float:
        return self.omega * (self.q - 1) ** 2

    @property
    def support(self) -> tuple[float, float]:
        return 0.0, (self.q - 1) * (1.0 - self.omega)

    def __call__(self, x: float) -> float:
        lo, hi = self.support
        if not (lo <= x <= hi + 1e-12):
            raise DomainError(f"x={x} outside hyperbola support [{lo}, {hi}]")
        Q = self.q - 1
        return Q - self.z2 / (Q - x)

    def area_below(self) -> float:
        value, _ = integrate.quad(self, *self.support, epsabs=1e-11, epsrel=1e-12, limit=200)
        return value


def hyperbola_boundary(q: int) -> HyperbolaBoundary:
    if q < 2:
        raise DomainError(f"q must be >= 2, got {q}")
    return HyperbolaBoundary(q)


@dataclass(frozen=True)
class ParabolaBoundary:
    """Equal-area boundary inside the band ``|x - y| <= d``.

    The explicit branch is evaluated on the in-band arc, between the
    crossings with ``y = x + d`` and ``y = x - d``.
    """

    q: int
    d: float
    z2: float

    @property
    def lower_crossing(self) -> tuple[float, float]:
        """Where the curve meets ``y = x + d``."""
        Q, d = self.q - 1, self.d
        x = Q - self.z2 / (2 * d) - 5 * d / 4
        return x, x + d

    @property
    def upper_crossing(self) -> tuple[float, float]:
        """Where the curve meets ``y = x - d``."""
        Q, d = self.q - 1, self.d
        x = Q - self.z2 / (2 * d) - d / 4
        return x, x - d

    @property
    def support(self) -> tuple[float, float]:
        return max(0.0, self.lower_crossing[0]), self.upper_crossing[0]

    def __call__(self, x: float) -> float:
        lo, hi = self.support
        if not (lo - 1e-12 <= x <= hi + 1e-12):
            raise DomainError(f"x={x} outside the in-band arc [{lo}, {hi}]")
        Q, d = self.q - 1, self.d
        radicand = max(0.0, 4 * Q * d - d * d - 2 * self.z2 - 4 * d * x)
        return math.sqrt(radicand) - d + x

    def implicit_lhs(self, x: float, y: float) -> float:
        """Rectangle minus both band triangles; equals ``z2`` on the curve."""
        Q, d = self.q - 1, self.d
        return (Q - x) * (Q - y) - (Q - d - x) ** 2 / 2 - (Q - d - y) ** 2 / 2


def parabola_boundary(q: int, d: float, z2: float) -> ParabolaBoundary:
    if z2 <= 0:
        raise DomainError(f"Z2 must be positive, got {z2}")
    if d <= 0 or d > math.sqrt(2.0 * z2 / 3.0) + 1e-12:
        raise DomainError(f"band triangles do not exist: need 0 < d <= sqrt(2 Z2 / 3) (d={d}, Z2={z2})")
    return ParabolaBoundary(q, d, z2)


def _check_parabola_regime(q: int, d: int) -> None:
    if d < 1 or d > 3 * (q - 1) / 7:
        raise DomainError(f"optimal parabola needs 1 <= d <= 3(q-1)/7 (q={q}, d={d})")


def lemma5_z1(q: int, d: float, z2: float) -> float:
    """First-write area enclosed by the equal-area parabola for a given ``Z2``."""
    return 2 * d * (q - 1) - z2 - 5 * d * d / 3


def continuous_cardinalities(q: int, d: int | None) -> tuple[float, float]:
    """Optimal continuous areas ``(Z1, Z2)``."""
    if d is None:
        hyp = hyperbola_boundary(q)
        return hyp.area_below(), hyp.z2
    _check_parabola_regime(q, d)
    z = d * (q - 1) - 5 * d * d / 6
    return z, z


def continuous_sum_rate(q: int, d: int | None) -> float:
    z1, z2 = continuous_cardinalities(q, d)
    return math.log2(z1 * z2) / 2


def _corner_strip(x: float, y: float, Q: float, d: float) -> float:
    """Area of ``{(u, v) in [x, Q] x [y, Q] : v - u > d}``."""
    area = 0.0
    u0 = y - d
    flat_hi = min(Q, u0)
    if flat_hi > x:
        area += (Q - y) * (flat_hi - x)
    lo, hi = max(x, u0), Q - d
    if hi > lo:
        area += ((Q - d - lo) ** 2 - (Q - d - hi) ** 2) / 2
    return area


def spanned_area(p: Iterable[float], q: int, d: float | None) -> float:
    """Continuous area reachable from ``p`` toward ``(q-1, q-1)`` inside the band."""
    x, y = p
    Q = q - 1
    rect = max(0.0, Q - x) * max(0.0, Q - y)
    if d is None:
        return rect
    return rect - _corner_strip(x, y, Q, d) - _corner_strip(y, x, Q, d)


@dataclass(frozen=True)
class DiscreteTwoWriteCode:
    q: int
    d: int | None
    z2: float
    first: dict[PhysicalState, int]
    second: dict[PhysicalState, int]

    @property
    def m1(self) -> int:
        return len(self.first)

    @property
    def m2(self) -> int:
        return 1 + max(self.second.values())

    @property
    def sum_rate(self) -> float:
        return (math.log2(self.m1) + math.log2(self.m2)) / 2

    def coverage_gaps(self) -> list[tuple[PhysicalState, set[int]]]:
        """First-write states whose reachable second-write labels are incomplete."""
        gaps = []
        full = set(range(self.m2))
        for p in self.first:
            seen = {v for s, v in self.second.items() if s.dominates(p)}
            if seen != full:
                gaps.append((p, full - seen))
        return gaps

    def to_wom_code(self) -> WomCode:
        d = self.q - 1 if self.d is None else self.d
        table = {s: Label(v, 1) for s, v in self.first.items()}
        table.update({s: Label(v, 2) for s, v in self.second.items()})
        params = CodeParams(q=self.q, m=(self.m1, self.m2), d=d, t=2, family=Family.LATTICE2WRITE)
        return WomCode(params, table)


def _band_points(q: int, d: int | None) -> list[PhysicalState]:
    return [
        PhysicalState(x, y)
        for x in range(q)
        for y in range(q)
        if d is None or abs(x - y) <= d
    ]


def partition_regions(q: int, d: int | None, z2: float) -> tuple[list[PhysicalState], list[PhysicalState]]:
    """Grid points spanning at least ``z2`` (first write) and the rest of the band."""
    tol = 1e-9 * max(1.0, z2)
    r1, r2 = [], []
    for p in _band_points(q, d):
        (r1 if spanned_area(p, q, d) >= z2 - tol else r2).append(p)
    return r1, r2


def _anti_diagonal_order(states: Iterable[PhysicalState]) -> list[PhysicalState]:
    return sorted(states, key=lambda s: (s.level_sum, s.c1))


def assign_labels(
    r1: Sequence[PhysicalState], r2: Sequence[PhysicalState], q: int, d: int | None
) -> tuple[dict[PhysicalState, int], dict[PhysicalState, int]]:
    """Label both regions so every first-write state reaches all second-write labels.

    First-write labels are a bijection in anti-diagonal order. Second-write
    labels start cyclic along anti-diagonals; when that leaves a gap, a
    backtracking search with forward checking takes over.
    """
    del q, d  # the regions already encode the grid and band
    first = {s: k for k, s in enumerate(_anti_diagonal_order(r1))}
    r2 = _anti_diagonal_order(r2)
    # dominated first-write states see supersets, so only maximal ones constrain
    antichain = sorted(maximal_states(r1))
    groups = [frozenset(s for s in r2 if s.dominates(p)) for p in antichain]
    if not groups:
        raise InfeasibleLabeling("first-write region is empty")
    m2 = min(len(g) for g in groups)
    if m2 < 2:
        raise InfeasibleLabeling(f"second write would have only {m2} reachable state(s)")

    cyclic = {s: k % m2 for k, s in enumerate(r2)}
    if _covers(cyclic, groups, m2):
        return first, cyclic
    swept = _sweep_labels(r2, groups, m2)
    if swept is not None and _covers(swept, groups, m2):
        return first, swept
    return first, _backtrack_labels(r2, groups, m2, cyclic)


def _covers(labels: dict[PhysicalState, int], groups: list[frozenset[PhysicalState]], m2: int) -> bool:
    return all(len({labels[s] for s in g}) == m2 for g in groups)


def _sweep_labels(
    r2: list[PhysicalState], groups: list[frozenset[PhysicalState]], m2: int
) -> dict[PhysicalState, int] | None:
    """Greedy over the antichain, left to right.

    With the antichain sorted by first level, each state belongs to a
    contiguous run of groups. At every group the labels about to drop out are
    handed to the new states that stay longest.
    """
    span: dict[PhysicalState, tuple[int, int]] = {}
    for k, g in enumerate(groups):
        for s in g:
            lo, _ = span.get(s, (k, k))
            span[s] = (lo, k)
    expiry = [-1] * m2
    labels: dict[PhysicalState, int] = {}
    for k in range(len(groups)):
        fresh = sorted((s for s, (lo, _) in span.items() if lo == k), key=lambda s: (-span[s][1], s.level_sum, s.c1))
        for s in fresh:
            v = min(range(m2), key=lambda c: (expiry[c], c))
            labels[s] = v
            expiry[v] = max(expiry[v], span[s][1])
        if min(expiry) < k:
            return None
    for k, s in enumerate(s for s in r2 if s not in labels):
        labels[s] = k % m2
    return labels


def _backtrack_labels(
    r2: list[PhysicalState], groups: list[frozenset[PhysicalState]], m2: int, preferred: dict[PhysicalState, int]
) -> dict[PhysicalState, int]:
    member_of = {s: [k for k, g in enumerate(groups) if s in g] for s in r2}
    # states shared by many groups first, while distinct labels are still free
    order = sorted(
        r2,
        key=lambda s: (-len(member_of[s]), min((len(groups[k]) for k in member_of[s]), default=10**9), s.level_sum, s.c1),
    )
    counts = [[0] * m2 for _ in groups]
    missing = [m2] * len(groups)
    free = [len(g) for g in groups]
    labels: dict[PhysicalState, int] = {}
    budget = [200_000]

    def feasible(ks: list[int]) -> bool:
        return all(missing[k] <= free[k] for k in ks)

    def assign(s: PhysicalState, v: int, sign: int) -> None:
        for k in member_of[s]:
            if sign > 0:
                if counts[k][v] == 0:
                    missing[k] -= 1
                counts[k][v] += 1
                free[k] -= 1
            else:
                counts[k][v] -= 1
                if counts[k][v] == 0:
                    missing[k] += 1
                free[k] += 1

    def search(pos: int) -> bool:
        if pos == len(order):
            return all(m == 0 for m in missing)
        budget[0] -= 1
        if budget[0] < 0:
            return False
        s = order[pos]
        ks = member_of[s]
        needed = [v for v in range(m2) if any(counts[k][v] == 0 for k in ks)]
        needed.sort(key=lambda v: (-sum(counts[k][v] == 0 for k in ks), v != preferred[s], v))
        rest = [v for v in range(m2) if v not in needed]
        for v in needed + rest:
            assign(s, v, +1)
            if feasible(ks):
                labels[s] = v
                if search(pos + 1):
                    return True
                del labels[s]
            assign(s, v, -1)
        return False

    if not search(0):
        raise InfeasibleLabeling("backtracking exhausted without covering every first-write state")
    return labels


def discretize(q: int, d: int | None, z2: float | None = None) -> DiscreteTwoWriteCode:
    """Discretize the optimal continuous partition into a labeled 2-write code.

    A grid point joins the first write when its spanned area is at least
    ``z2`` (boundary points included). ``z2`` defaults to the optimum for
    ``(q, d)``.
    """
    if z2 is None:
        z2 = continuous_cardinalities(q, d)[1]
    r1, r2 = partition_regions(q, d, z2)
    first, second = assign_labels(r1, r2, q, d)
    code = DiscreteTwoWriteCode(q=q, d=d, z2=z2, first=first, second=second)
    gaps = code.coverage_gaps()
    if gaps:
        raise InfeasibleLabeling(f"labeling leaves {len(gaps)} first-write states uncovered")
    return code


TABLE3_ROWS: tuple[tuple[int, int | None], ...] = (
    (8, None), (8, 3), (8, 2), (16, None), (16, 6), (16, 5), (16, 4), (16, 3),
)
# Tabulated reference values; rows where the computed rate differs get a note.
TABLE3_REFERENCE = {
    (8, None): 3.97, (8, 3): 3.75, (8, 2): 3.42, (16, None): 6.17,
    (16, 6): 5.91, (16, 5): 5.76, (16, 4): 5.54, (16, 3): 5.29,
}
TABLE3_HEADER = ("q", "d", "sum_rate", "note")


def table3(rows: Sequence[tuple[int, int | None]] = TABLE3_ROWS) -> list[dict[str, object]]:
    out = []
    for q, d in rows:
        rate = continuous_sum_rate(q, d)
        note = ""
        ref = TABLE3_REFERENCE.get((q, d))
        if ref is not None and abs(round(rate, 2) - ref) > 0.011:
            note = f"reference table lists {ref:.2f}; computed log2 value is {rate:.4f}"
        out.append({"q": q, "d": d, "sum_rate": round(rate, 2), "sum_rate_exact": rate, "note": note})
    return out
