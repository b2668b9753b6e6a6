"""
Multivariate normal CDF order by order
======================================

Expand the CDF about the fitted one-factor base and watch the partial
sums approach a deterministic tensor-grid reference.
"""

import numpy as np

from mvpert import expand
from mvpert.oracle import independent_cdf, tensor_grid_cdf

# independence: every order beyond zero vanishes
x = np.array([0.3, -0.5, 1.1])
r = expand(np.eye(3), x)
print("identity:", r.i_infinity, "product of marginals:", independent_cdf(x))

# a 4-dimensional matrix near one-factor form
rho = np.array([
    [1.00, 0.42, 0.35, 0.30],
    [0.42, 1.00, 0.47, 0.28],
    [0.35, 0.47, 1.00, 0.40],
    [0.30, 0.28, 0.40, 1.00],
])
xmax = np.array([0.5, 0.0, 1.0, -0.3])
truth = tensor_grid_cdf(rho, xmax, nodes_per_dim=96).value
r = expand(rho, xmax)

print(f"\n{'quantity':>12} {'value':>14} {'error':>10}")
for name in ("partial0", "partial1", "partial2", "pade1", "pade2", "i_infinity"):
    v = getattr(r, name)
    print(f"{name:>12} {v:14.10f} {v - truth:+10.2e}")
print("oscillating partial sums:", r.oscillating)
print("metrics:", {k: round(v, 5) for k, v in r.metrics.as_dict().items()})
