"""Anomaly of the dilation on one site, plain and twisted by z = c d^2/dphi^2.

For this twist the anomaly has the closed form  i + 2c (1 + F'').
"""

from gmpy2 import mpq

from latticebv import Deformation, GradedPoly, LieSymmetry, RenMap, field, twist
from latticebv.bv import anomaly_via_laplacian
from latticebv.config import model_from_json
from latticebv.deform import as_series
from latticebv.rg import solve_anomaly

m = model_from_json("M1")
phi = GradedPoly.var(field(0))
X = LieSymmetry(1, {0: [[1]]})
c = mpq(1, 3)

for label, ctx in [("plain", Deformation(m)), ("twisted", twist(m, RenMap.single(2, 0, (0, 0), c)))]:
    for F in (phi ** 3, phi ** 4 + phi):
        d = solve_anomaly(ctx, X, as_series(F, 3))
        same = d == anomaly_via_laplacian(ctx, X, as_series(F, 3))
        print(f"{label:8s} F = {F}:  Delta X(F) = {d}   (Laplacian route agrees: {same})")
