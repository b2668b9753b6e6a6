"""
Truncated moments at a fixed common factor
==========================================

Every order of the expansion is assembled from
``w^(k) = int_{-inf}^{xi_max} (c zeta + s xi)^k phi(xi) dxi``.  The closed
forms are checked against direct quadrature.
"""

import math

from mvpert.oracle import factor_moment
from mvpert.special_fns import slice_batch

c, zeta, xmax = 0.6, -0.4, 0.8
s = math.sqrt(1 - c * c)
w = slice_batch([zeta], [c], [s], [xmax]).stacked()[:, 0, 0]
print(f"{'k':>2} {'closed form':>20} {'quadrature':>20}")
for k in range(5):
    print(f"{k:>2} {w[k]:20.15f} {factor_moment(k, c, zeta, xmax):20.15f}")

# an unconstrained variable recovers the full normal moments of c zeta + s xi
w_inf = slice_batch([zeta], [c], [s], [math.inf]).stacked()[:, 0, 0]
m = c * zeta
print("\nxmax = inf:", w_inf, " expected second moment", m * m + s * s)
