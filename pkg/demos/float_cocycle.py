"""Sum the exact lam-series of the cocycle at lam = a in floating point and compare with exp."""

from latticebv.cli import float_demo

for a in (0.1, 0.25, 0.5):
    r = float_demo(a=a, cap=30)
    print(f"a = {a}: series {r['series'][0]:.15f}  closed form {r['closed_form'][0]:.15f}  |err| {r['abs_error']:.1e}")
