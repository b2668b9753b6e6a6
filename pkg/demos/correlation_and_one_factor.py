"""
Correlation matrices and the one-factor base
============================================

Validate a correlation matrix, regularize a nearly singular one, fit the
one-factor base ``rho_f`` and read off the diagnostics that predict how
well the perturbation series will behave.
"""

import numpy as np

from mvpert import (
    build_correlation_matrix,
    distance_from_singular,
    equicorrelated,
    fit_one_factor,
    internal_variance,
    regularize,
)
from mvpert.gauss_engine import perturbation

# a constant off-diagonal is exactly one-factor: zero internal variance
equi = equicorrelated(5, 0.36)
print("equicorrelated sigma2_int:", internal_variance(equi.entries))

# a matrix close to, but not exactly, one-factor
rng = np.random.default_rng(3)
c = rng.uniform(0.4, 0.7, 6)
a = np.outer(c, c) + 0.03 * rng.standard_normal((6, 6))
a = 0.5 * (a + a.T)
np.fill_diagonal(a, 1.0)
rho = build_correlation_matrix(a)
print("min eigenvalue:", rho.min_eigenvalue)
print("R(N) =", distance_from_singular(rho), "(at most 1/N =", 1 / rho.n, ")")

# row-average loadings and the resulting perturbation eps = rho^-1 - rho_f^-1
model = fit_one_factor(rho)
eps, j_norm = perturbation(rho, model)
print("loadings:", np.round(model.c, 4))
print("max |eps|:", np.abs(eps).max(), " J:", j_norm)

# regularization clips the spectrum and restores the unit diagonal
q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
lam = np.array([1e-6, 0.5, 1.2, 0.0])
lam[-1] = 4 - lam.sum()
b = (q * lam) @ q.T
d = np.sqrt(np.diag(b))
b = b / np.outer(d, d)
np.fill_diagonal(b, 1.0)
raw = build_correlation_matrix(0.5 * (b + b.T))
fixed = regularize(raw, 1e-3)
print(f"lambda_min {raw.min_eigenvalue:.2e} -> {fixed.min_eigenvalue:.2e}")
