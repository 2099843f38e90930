"""Gauge anomaly on a 4-site path with SO(2) transports.

With quadratic V(A) and order-2 kernels, frak G(g, A) is c times the change of
one Hessian entry of L_A at the kernel site; here -8/75.
"""

from gmpy2 import mpq

from latticebv.config import model_from_json
from latticebv.deform import Deformation, twist
from latticebv.gauge import Connection, OrthoGauge, check_G_cocycle, check_gamma_shift, frak_G
from latticebv.rg import RenMap

m = model_from_json("G1")
A = Connection(m, {(0, 1): [[0, -1], [1, 0]], (1, 2): [[1, "1/2"], [0, 1]]})
g = OrthoGauge.rotation(2, 1, 0, 1, (3, 4, 5))
h = OrthoGauge.rotation(2, 2, 0, 1, (5, 12, 13))
tw = twist(m, RenMap.single(2, 1, (0, 0), mpq(1, 3)))

print("plain:   G(g, A) =", frak_G(Deformation(m), g, A))
print("twisted: G(g, A) =", frak_G(tw, g, A))
print("cocycle:", check_G_cocycle(tw, g, h, A).status)
print("effective action shift:", check_gamma_shift(tw, g, A, [[1, 0, 2, -1, 0, 1, 1, 1]], 2).status)
