"""Acceptance criteria 1-14, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py`` (the lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py`` for the lines alone.
Criteria 2 and 5 compare against the second-order formulas as they are
usually printed; those comparisons fail for reasons recorded in the design
notes, so their pytest checks are strict xfails and the corrected forms are
checked separately.
"""
import functools
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from closed_forms import (Geometry, bullet_first, bullet_second, bullet_second_groups, by_type,
                          star_first, star_second, star_second_as_displayed)
from kahlerstar.graphs import graph_operator_series
from kahlerstar.jets import HbarSeries, TruncatedJet
from kahlerstar.laplace import engine_for
from kahlerstar.models import Flat, kahler_jets, random_perturbation
from kahlerstar.rings import QQI
from kahlerstar.star import StarAlgebra, star_algebra
from kahlerstar.suites import SuiteConfig, random_jet, random_point, run_suite

TITLES = {
    1: "engine equivalence",
    2: "second-order bullet term groups",
    3: "associativity",
    4: "unit element",
    5: "normalised star product",
    6: "correspondence principle",
    7: "conjugation and separation of variables",
    8: "log-det identities",
    9: "coordinate functoriality",
    10: "Laplace integral equals contour integral",
    11: "Bergman projector",
    12: "Toeplitz composition",
    13: "trace cyclicity",
    14: "determinism",
}
RESULTS = {}


def _suite(name, **kw):
    res = run_suite(name, SuiteConfig(**kw))
    return res.ok, f"{name} {res.passed}/{res.trials}" + (f"; {res.failure}" if res.failure else "")


def _all(*checks):
    return all(ok for ok, _ in checks), "; ".join(d for _, d in checks)


def _contexts(n, count, seed):
    rng = random.Random(seed)
    for _ in range(count):
        kj = kahler_jets(random_perturbation(n, rng), random_point(n, rng), 8)
        yield kj, Geometry(kj)


def _clean(T):
    return {k: v for k, v in T.items() if v != 0}


# --- criteria ---------------------------------------------------------------------------

def c1():
    t = time.perf_counter()
    ok, detail = _all(_suite("engines", order=4, trials=20, n=1, seed=101),
                      _suite("engines", order=3, trials=20, n=2, seed=102))
    dt = time.perf_counter() - t
    return ok and dt < 300, f"{detail}; {dt:.0f} s"


GROUP_TYPE = {"hh": (2, 2), "h_dh": (2, 1), "h_dbh": (1, 2), "vacuum": (0, 0)}


def _bullet_groups(corrected):
    bad, total = [], 0
    ctxs = list(_contexts(1, 5, 201)) + list(_contexts(2, 5, 202))
    for kj, g in ctxs:
        ctx = kj.context()
        ops = [engine_for(ctx).operator_series(2), graph_operator_series(ctx, 2)]
        z = ((0,) * kj.n,) * 2
        Ds = [op[2].get(z, QQI.zero) for op in ops]
        if Ds[0] != Ds[1]:
            bad.append("D differs across engines")
        for op in ops:
            C1, C2 = _clean(op[1]), _clean(op[2])
            total += 1
            if C1 != bullet_first(g):
                bad.append(f"n={kj.n}: first-order term")
            if corrected:
                if C2 != bullet_second(g, Ds[0]):
                    bad.append(f"n={kj.n}: corrected second-order term")
                continue
            groups = bullet_second_groups(g, Ds[0])
            parts = by_type(C2)
            for name, T in groups.items():
                have = parts.get(GROUP_TYPE[name], {}) if name in GROUP_TYPE else None
                if have is not None and have != T:
                    bad.append(f"n={kj.n}: group {name}")
            # the A-dependent groups share derivative types (1,0), (0,1), (1,1)
            mixed = {k: v for t in ((1, 0), (0, 1), (1, 1)) for k, v in parts.get(t, {}).items()}
            want = {}
            for name in ("A_derivs", "A_first"):
                for k, v in groups[name].items():
                    want[k] = want.get(k, 0) + v
            if _clean(want) != mixed:
                bad.append(f"n={kj.n}: A-dependent groups")
    detail = f"{len(ctxs)} contexts, {total} tables"
    if bad:
        uniq = sorted(set(bad))
        detail += f"; mismatches: {', '.join(uniq)}"
    return not bad, detail


def c2():
    return _bullet_groups(corrected=False)


def c2_corrected():
    return _bullet_groups(corrected=True)


def _star_unit_checks():
    rng = random.Random(501)
    bad = 0
    for t in range(10):
        n = 1 + t % 2
        S = star_algebra(random_perturbation(n, rng), random_point(n, rng), 3)
        f = random_jet(n, 6, rng)
        one = TruncatedJet(2 * n, 6, {0: QQI.one})
        want = HbarSeries.from_hbar([f.constant()], 3)
        if S.star_value(f, one) != want or S.star_value(one, f) != want:
            bad += 1
    return bad == 0, f"f*1 = 1*f = f: {10 - bad}/10"


def _star_second(displayed):
    bad = []
    for n in (1, 2):
        for kj, g in _contexts(n, 5, 510 + n):
            S = StarAlgebra(kj, 2)
            if _clean(S.star_table(1)) != star_first(g):
                bad.append(f"n={n} first order")
            want = star_second_as_displayed(g) if displayed else star_second(g)
            if _clean(S.star_table(2)) != want:
                bad.append(f"n={n} second order")
    return not bad, "10 contexts" + (f"; mismatches: {', '.join(sorted(set(bad)))}" if bad else "")


def c5():
    return _all(_star_unit_checks(), _star_second(displayed=True))


def c5_corrected():
    return _all(_star_unit_checks(), _star_second(displayed=False))


def c4():
    flat = all(star_algebra(Flat(n), (QQI.zero,) * n, 4).unit("both").values() == HbarSeries.one(4)
               for n in (1, 2))
    return _all(_suite("unit", order=2, trials=10, seed=401),
                (flat, f"flat e = 1 through hbar^4: {flat}"))


def c9():
    ok, detail = _suite("functoriality", order=2, trials=10, seed=901)
    return ok and detail.startswith("functoriality 10/10"), detail


def c14():
    cmds = [["star", "--model", "random", "--seed", "7", "--n", "2", "--point", "1/2,1/3*i",
             "--order", "3", "--json"],
            ["verify", "associativity", "--trials", "4", "--seed", "7", "--json"],
            ["imap", "--model", "fubini-study", "--f", "z*conj(z)**2", "--point", "1/3",
             "--json"]]
    same = 0
    for argv in cmds:
        outs = [subprocess.run([sys.executable, "-m", "kahlerstar", *argv], capture_output=True,
                               check=True).stdout for _ in range(2)]
        same += outs[0] == outs[1]
    return same == len(cmds), f"{same}/{len(cmds)} commands byte-identical across processes"


CRITERIA = {
    1: c1,
    2: c2,
    3: lambda: _suite("associativity", order=3, trials=20, seed=301),
    4: c4,
    5: c5,
    6: lambda: _suite("poisson", order=1, trials=20, seed=601),
    7: lambda: _all(_suite("conjugation", order=3, trials=20, seed=701),
                    _suite("separation", order=3, trials=20, seed=702)),
    8: lambda: _suite("logdet", order=3, trials=20, seed=801),
    9: c9,
    10: lambda: _suite("appendix-identity", order=3, trials=20, seed=1001),
    11: lambda: _suite("projector", order=2, trials=5, seed=1101),
    12: lambda: _suite("toeplitz", order=2, trials=10, seed=1201),
    13: lambda: _suite("trace", order=3, trials=3, seed=1301),
    14: c14,
}


@functools.lru_cache(maxsize=None)
def evaluate(num):
    ok, detail = CRITERIA[num]()
    RESULTS[num] = (ok, detail)
    return ok, detail


def line(num):
    ok, detail = RESULTS[num]
    return f"{'PASS' if ok else 'FAIL'}  {num:2d} {TITLES[num]}: {detail}"


# --- pytest -----------------------------------------------------------------------------

@pytest.mark.parametrize("num", [n for n in CRITERIA if n not in (2, 5)])
def test_criterion(num):
    ok, detail = evaluate(num)
    assert ok, detail


@pytest.mark.xfail(strict=True, reason="printed A-dependent weights are off; see design notes")
def test_criterion_2_as_printed():
    ok, detail = evaluate(2)
    assert ok, detail


def test_criterion_2_corrected_form():
    ok, detail = c2_corrected()
    assert ok, detail


@pytest.mark.xfail(strict=True, reason="printed second-order star term holds only for n = 1")
def test_criterion_5_as_printed():
    ok, detail = evaluate(5)
    assert ok, detail


def test_criterion_5_corrected_form():
    ok, detail = c5_corrected()
    assert ok, detail


if __name__ == "__main__":
    for num in CRITERIA:
        evaluate(num)
        print(line(num), flush=True)
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
