"""Graph sums against the Laplace oracle on a few random perturbations."""
import random
import time

from kahlerstar.graphs import graph_operator_series
from kahlerstar.laplace import engine_for
from kahlerstar.models import build_context, random_perturbation
from kahlerstar.suites import random_point

rng = random.Random(2)
for n, K in ((1, 4), (2, 2)):
    for _ in range(3):
        model = random_perturbation(n, rng)
        ctx = build_context(model, random_point(n, rng), 2 * K + 2)
        t = time.perf_counter()
        a = engine_for(ctx).operator_series(K)
        b = graph_operator_series(ctx, K)
        terms = sum(1 for tab in a.tables for v in tab.values() if v != 0)
        print(f"n={n} K={K}: {terms} coefficients, differences {len(a.diff(b))}, "
              f"{time.perf_counter() - t:.2f} s")
