"""
Pade resummation and the infinite-order fit
===========================================

The three approximants resum a geometric series exactly; the
extrapolation fits an exponentially decaying (optionally alternating)
sequence and recovers its limit.
"""

import math

from mvpert.pade import PadeInputs, extrapolate_infinity, pade_1, pade_2_02, pade_2_11, pade_sequence

a, r = 1.0, 0.3
p = PadeInputs(a, a * r, a * r * r)
print("geometric limit", a / (1 - r))
for f in (pade_1, pade_2_11, pade_2_02):
    print(f"  {f.__name__:10s}", f(p))

# an alternating sequence built from the ansatz itself
limit, q = 0.42, 0.35
seq = [limit + 0.05 * q**b * math.cos(math.pi * b) for b in range(3)]
i_inf, alpha = extrapolate_infinity(*seq)
print("\nalternating sequence", [round(s, 6) for s in seq])
print("recovered limit", i_inf, " decay exp(-alpha)", math.exp(-alpha))

# the full pipeline from raw order terms
s = pade_sequence(0.30, -0.02, 0.004)
print("\nfrom order terms (0.30, -0.02, 0.004):", s)
