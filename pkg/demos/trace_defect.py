"""Integrated commutator coefficients vanish for compactly supported symbols."""
from kahlerstar.models import Flat, FubiniStudy1D
from kahlerstar.trace import BumpPolynomial, trace_report

f1 = BumpPolynomial({(0, 1): 1, (1, 1): 2 - 1j}, 0.1 + 0.1j, 0.7)
f2 = BumpPolynomial({(1, 0): 1, (2, 1): 0.5j}, 0.1 + 0.1j, 0.7)
for model in (Flat(1), FubiniStudy1D()):
    for k in (1, 2, 3):
        r = trace_report(model, f1, f2, k, product="star")
        print(f"{model.name:14s} k={k}  |integral| {r.defect:.2e}  scale {r.scale:.2e}  "
              f"grid error {r.error:.1e}")
