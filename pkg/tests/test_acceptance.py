"""Acceptance suite: one check per criterion, each at its stated tolerance and time bound.

Run with pytest (a summary line per criterion is printed at the end) or
standalone with ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from imbalance_wom.constructions import (
    build_construction1,
    build_diagonal_code,
    construction1_t,
    reference_t_unconstrained,
)
from imbalance_wom.ici import (
    IciModelParams,
    ber_ici,
    ber_improvement_factor,
    invert_ber_to_margin,
    mc_ispp_simulate,
)
from imbalance_wom.lattice import (
    TABLE3_REFERENCE,
    TABLE3_ROWS,
    continuous_cardinalities,
    continuous_sum_rate,
    discretize,
    lemma5_z1,
    omega2,
    parabola_boundary,
    spanned_area,
    table3,
)
from imbalance_wom.verifier import (
    TABLE2_ROWS,
    Violation,
    check_imbalance_exhaustive,
    guaranteed_writes,
    relaxed_game_t,
    table2_check,
)
from imbalance_wom.wordline import Deployment, simulate_wordline

RESULTS: list[str] = []


def _run(n, fn, budget=None):
    """Run criterion ``n``, record a PASS/FAIL line, and re-raise failures."""
    start = time.perf_counter()
    try:
        detail = fn() or ""
        elapsed = time.perf_counter() - start
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.1f} s, budget {budget} s"
    except AssertionError as exc:
        RESULTS.append(f"criterion {n}: FAIL {exc}")
        raise
    RESULTS.append(f"criterion {n}: PASS {detail} ({elapsed:.2f} s)")


def test_criterion_01_write_counts():
    def check():
        cases = [(build_construction1, 3, {6: 3, 8: 4, 16: 9, 20: 11, 32: 18}),
                 (build_diagonal_code, 3, {8: 3, 16: 7, 20: 9, 32: 15})]
        for build, a, expected in cases:
            for q, t in expected.items():
                start = time.perf_counter()
                got = guaranteed_writes(build(a, q))
                elapsed = time.perf_counter() - start
                assert got == t, f"{build.__name__}({a},{q}) gave {got}, expected {t}"
                assert elapsed < 1.0, f"{build.__name__}({a},{q}) took {elapsed:.2f} s"
        return "9 codes exact"

    _run(1, check)


def test_criterion_02_imbalance_invariant():
    def check():
        n = 0
        for a in (3, 4, 5):
            for q in range(2 * a - 2, 34):
                res = check_imbalance_exhaustive(build_construction1(a, q))
                assert not isinstance(res, Violation), f"construction1({a},{q}): {res}"
                n += 1
        for q, d in TABLE3_ROWS:
            res = check_imbalance_exhaustive(discretize(q, d).to_wom_code())
            assert not isinstance(res, Violation), f"lattice({q},{d}): {res}"
            n += 1
        return f"{n} codes in band"

    _run(2, check, budget=10)


def test_criterion_03_optimality():
    def check():
        for q in range(2, 17):
            bound = relaxed_game_t(q, 8, 3)
            assert bound == (3 * (q - 1)) // 5, f"q={q}: relaxed game {bound}"
            if q >= 4:
                built = guaranteed_writes(build_construction1(3, q))
                assert built == bound, f"q={q}: built {built} vs bound {bound}"
            else:
                # below the build precondition q >= 2a-2 the closed form stands in
                assert construction1_t(3, q) == bound
        return "q=2..16 sandwich closed"

    _run(3, check, budget=5)


def test_criterion_04_table2():
    def check():
        pairs = [(M, q) for M, qs in TABLE2_ROWS.items() for q in qs]
        for M, q in pairs:
            a = math.isqrt(M + 1)
            assert table2_check(a, q), f"(M={M}, q={q}) not attained"
        return f"{len(pairs)} listed pairs attained"

    _run(4, check, budget=30)


def test_criterion_05_beats_unconstrained_reference():
    def check():
        for q in range(2, 201):
            c, r = construction1_t(3, q), reference_t_unconstrained(3, q)
            if q >= 36:
                assert c > r, f"q={q}: {c} <= {r}"
            else:
                assert c >= r, f"q={q}: {c} < {r}"
        return "q=2..200"

    _run(5, check)


def test_criterion_06_lattice_values():
    def check():
        assert abs(omega2() * 49 - 13.948) <= 0.01
        for key, ref in TABLE3_REFERENCE.items():
            if key == (16, 3):
                continue
            rate = continuous_sum_rate(*key)
            assert abs(rate - ref) <= 0.01, f"{key}: {rate:.4f} vs {ref}"
        row = next(r for r in table3() if (r["q"], r["d"]) == (16, 3))
        assert row["sum_rate"] == 5.23 and "5.29" in row["note"]
        return "7 rows within 0.01, (16,3) = 5.23 with note"

    _run(6, check)


def test_criterion_07_discretization():
    def check():
        c = discretize(8, 3)
        assert (c.m1, c.m2) == (18, 21), (c.m1, c.m2)
        assert not c.coverage_gaps()
        u = discretize(8, None)
        assert {u.m1, u.m2} == {23, 24}, (u.m1, u.m2)
        assert not u.coverage_gaps()
        for code in (c, u):
            assert guaranteed_writes(code.to_wom_code()) == 2
        return "(18,21) and {23,24}, t=2"

    _run(7, check, budget=5)


def test_criterion_08_equal_area_and_sweep():
    def check():
        z2 = continuous_cardinalities(8, 3)[1]
        p = parabola_boundary(8, 3, z2)
        worst = max(abs(spanned_area((x, p(x)), 8, 3) - z2) for x in np.linspace(*p.support, 100))
        assert worst <= 1e-6, f"area deviation {worst:.2e}"
        zs = np.round(np.arange(9.0, 18.0 + 1e-9, 0.01), 10)
        best = float(max(zs, key=lambda z: lemma5_z1(8, 3, z) * z))
        assert abs(best - 13.5) <= 0.05, f"peak at {best}"
        return f"max area deviation {worst:.1e}, peak {best:.2f}"

    _run(8, check)


def test_criterion_09_wordline():
    def check():
        trace = simulate_wordline(Deployment(build_construction1(3, 6)), 2, message_seq=[[1, 5], [1, 2]])
        assert trace[-1]["levels"] == [3, 2, 4, 2], trace[-1]["levels"]
        bad = 0
        for a, q in ((3, 11), (4, 17)):
            dep = Deployment(build_construction1(a, q))
            for seed in range(10_000):
                trace = simulate_wordline(dep, 8, seed=seed)
                assert len(trace) == dep.t
                bad += sum(not (r["balanced"] and r["frontier_ok"]) for r in trace)
        assert bad == 0, f"{bad} violations"
        return "replay (3,2,4,2), 20000 runs, 0 violations"

    _run(9, check, budget=60)


@pytest.mark.slow
def test_criterion_10_ici_chain():
    def check():
        v = invert_ber_to_margin(2e-5, 8)
        assert abs(v - 4.235) <= 0.001, f"margin {v}"
        b = ber_ici(8, 4.235, 0.631)
        assert abs(b - 2.74e-4) <= 0.02 * 2.74e-4, f"BER {b}"
        f = ber_improvement_factor(8, 3, 4.235, 1.472)
        assert abs(f.improvement - 18) <= 1, f"improvement {f.improvement}"
        assert abs(f.closed_form - f.direct_ratio) <= 0.10 * f.direct_ratio
        mc = mc_ispp_simulate(IciModelParams.from_margins(8, 4.235, 1.472), 3, 10_000_000, seed=2024, threads=0)
        z = (mc.ratio - f.direct_ratio) / mc.ratio_se
        assert abs(z) <= 3, f"MC ratio {mc.ratio:.4g} vs {f.direct_ratio:.4g} ({z:.2f} SE)"
        return f"improvement {f.improvement:.1f}, MC ratio {mc.ratio:.4f} ({z:+.2f} SE)"

    _run(10, check, budget=120)


def test_criterion_11_chain_inputs_consistent():
    # physical BER measurements are imported, so check the analytic inputs agree with each other
    def check():
        v = invert_ber_to_margin(2e-5, 8)
        s_full = 1.472
        assert abs(ber_ici(8, v, s_full) - 5e-3) <= 0.02 * 5e-3
        s_cap = s_full * 3 / 7
        assert abs(s_cap - 0.631) <= 0.01
        assert abs(ber_ici(8, v, s_cap) - 2.74e-4) <= 0.02 * 2.74e-4
        return "both BERs reproduced from one margin and one shift scale"

    _run(11, check)


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    print("\n".join(RESULTS))
    sys.exit(1 if failed else 0)
