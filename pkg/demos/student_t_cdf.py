"""
Multivariate Student-t CDF as a chi mixture
===========================================

The t vector is a Gaussian vector divided by ``chi_nu / sqrt(nu)``, so the
CDF is a one-dimensional mixture of Gaussian expansions with scaled limits.
"""

import math

import numpy as np

from mvpert import StudentTRequest, expand, student_t_expand
from mvpert.oracle import mc_student_t_cdf

# orthant probabilities of elliptical laws do not depend on nu
rho = [[1, 0.5], [0.5, 1]]
for nu in (1.0, 4.0, 30.0):
    r = student_t_expand(StudentTRequest(rho, (0.0, 0.0), nu))
    print(f"nu={nu:5.1f}  orthant {r.i_infinity:.12f}  (1/4 + asin(0.5)/(2 pi) = {0.25 + math.asin(0.5) / (2 * math.pi):.12f})")

# heavier tails lower the CDF at positive limits; large nu approaches the Gaussian
rho3 = np.array([[1, 0.3, 0.25], [0.3, 1, 0.35], [0.25, 0.35, 1]])
x = (1.0, 0.5, 1.5)
print("\nGaussian:", expand(rho3, x).i_infinity)
for nu in (3.0, 10.0, 1e5):
    r = student_t_expand(StudentTRequest(rho3, x, nu))
    print(f"nu={nu:8.0f}  {r.i_infinity:.8f}")

mc = mc_student_t_cdf(rho3, x, 3.0, samples=1_000_000, seed=1)
print(f"MC at nu=3: {mc.value:.5f} +/- {mc.std_error:.5f}")
