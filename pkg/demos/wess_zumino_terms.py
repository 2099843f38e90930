"""The six terms of the extended Wess-Zumino condition on a two-site, two-component model.

Prints which terms are nonzero and the residual lhs - (t1 + ... + t6).
"""

from gmpy2 import mpq

from latticebv import GradedPoly, LieSymmetry, RenMap, field, twist
from latticebv.config import model_from_json
from latticebv.deform import as_series
from latticebv.rg import check_extended_WZ, wz0_terms

m = model_from_json("P2")
ctx = twist(m, RenMap([*RenMap.single(2, 0, (0, 0), mpq(1, 3)).kernels,
                       *RenMap.single(2, 0, (0, 1), mpq(1, 5)).kernels]))
X = LieSymmetry(2, {0: [[1, 1], [0, 0]]}, {1: [1, 0]})
Y = LieSymmetry(2, {0: [[0, 0], [1, -1]]})
p = GradedPoly.var(field(0))
F = as_series(p ** 4 + p * GradedPoly.var(field(1, 1)), 3)

terms = wz0_terms(ctx, X, Y, F)
for name, val in terms.items():
    print(f"{name:4s} {'0' if val.is_zero() else val}")
print(check_extended_WZ(ctx, X, Y, F, terms=terms).to_json())
