"""Unit element and normalised product on the Riemann sphere.

For the Fubini-Study potential log(1 + |z|^2) the unit is e = 1 + hbar
at every point and D = 1; the second-order star table is printed at z = 1/2.
"""
from kahlerstar.laplace import vacuum_constant
from kahlerstar.models import FubiniStudy1D, build_context
from kahlerstar.rings import QQi
from kahlerstar.star import star_algebra

point = (QQi.parse("1/2"),)
S = star_algebra(FubiniStudy1D(), point, 3)
e = S.unit("both").values()
print("e =", " + ".join(f"({e.coeff(k)}) hbar^{k}" for k in range(4)))
print("D =", vacuum_constant(build_context(FubiniStudy1D(), point, 6)))

for (J, I), v in sorted(S.star_table(2).items()):
    if v != 0:
        print(f"hbar^2  dbar^{J[0]} f1 d^{I[0]} f2 : {v}")
