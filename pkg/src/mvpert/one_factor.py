"""One-factor approximation ``rho_f`` of a correlation matrix.

``rho_f`` has unit diagonal and off-diagonal entries ``c_i c_j``.  With
``s_i = sqrt(1 - c_i^2)`` it is ``diag(s^2) + c c^T``, whose inverse and
determinant are known in closed form (Sherman-Morrison and the matrix
determinant lemma) through ``Sigma^2 = 1 + sum_l c_l^2 / s_l^2``.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .corr_matrix import build_correlation_matrix
from .errors import LoadingClipped, LoadingOutOfRange, RhoFNotPositiveDefinite, ZeroDiagonalWeight

CLIP = 1.0 - 1e-6


@dataclass(frozen=True, eq=False)
class OneFactorModel:
    """Loadings ``c``, residual scales ``s`` and the derived ``rho_f`` quantities."""

    c: np.ndarray
    s: np.ndarray
    sigma2: float
    rho_f: np.ndarray
    rho_f_inv: np.ndarray
    det_rho_f: float

    @property
    def n(self):
        return len(self.c)

    @classmethod
    def from_loadings(cls, c, *, check=True):
        c = np.array(c, dtype=float).ravel()
        if np.any(~np.isfinite(c)) or np.any(np.abs(c) >= 1.0):
            i = int(np.argmax(~np.isfinite(c) | (np.abs(c) >= 1.0)))
            raise LoadingOutOfRange(f"|c[{i}]| = {abs(c[i])!r} >= 1", index=i)
        s = np.sqrt(1.0 - c * c)
        sigma2 = 1.0 + float(np.sum(c * c / (s * s)))
        rho_f = np.outer(c, c)
        np.fill_diagonal(rho_f, 1.0)
        inv = _analytic_inverse(c, s, sigma2)
        det = sigma2 * float(np.prod(s * s))
        for arr in (c, s, rho_f, inv):
            arr.setflags(write=False)
        model = cls(c=c, s=s, sigma2=sigma2, rho_f=rho_f, rho_f_inv=inv, det_rho_f=det)
        if check:
            check_positive_definite(model)
        return model

    def to_json(self):
        return json.dumps(
            {
                "c": [float(x) for x in self.c],
                "s": [float(x) for x in self.s],
                "sigma2": self.sigma2,
                "det_rho_f": self.det_rho_f,
            }
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_loadings(json.loads(text)["c"])


def _analytic_inverse(c, s, sigma2):
    s2 = s * s
    u = c / s2
    inv = -np.outer(u, u) / sigma2
    inv[np.diag_indices_from(inv)] = (1.0 - c * c / (s2 * sigma2)) / s2
    return inv


def analytic_inverse(model):
    """Closed-form ``rho_f^-1``: ``diag(1/s^2) - (c/s^2)(c/s^2)^T / Sigma^2``."""
    return _analytic_inverse(model.c, model.s, model.sigma2)


def check_positive_definite(model):
    """Explicit eigenvalue check of ``rho_f``.

    With every ``s_i > 0`` the diag-plus-rank-one form is positive
    definite analytically; the numerical check guards against loadings so
    close to +-1 that ``rho_f`` is singular in floating point.
    """
    if np.any(model.s <= 0.0):
        raise RhoFNotPositiveDefinite("some residual scale s_i is not positive")
    lam_min = float(np.linalg.eigvalsh(model.rho_f)[0])
    if lam_min <= 0.0:
        raise RhoFNotPositiveDefinite(f"rho_f min eigenvalue {lam_min:.3e} <= 0")
    return lam_min


def _loadings_from_row_sums(row_sums, denom, clip):
    c = np.sign(row_sums) * np.sqrt(np.abs(row_sums) / denom)
    over = np.abs(c) >= 1.0
    if np.any(over):
        i = int(np.argmax(over))
        if clip is None:
            raise LoadingOutOfRange(f"|c[{i}]| = {abs(c[i])!r} >= 1", index=i)
        warnings.warn(f"clipping loadings at indices {np.flatnonzero(over).tolist()}", LoadingClipped,
                      stacklevel=3)
        c = np.clip(c, -clip, clip)
    return c


def fit_one_factor(m, clip=CLIP):
    """Loadings from signed row averages of the off-diagonal entries.

    ``c_i = sgn(r_i) sqrt(|r_i| / (n-1))`` with ``r_i = sum_{l != i} rho_il``,
    so ``rho_f[i, j]`` is the signed geometric mean of the row-``i`` and
    row-``j`` averages.  ``clip=None`` turns the out-of-range clip into a
    :class:`LoadingOutOfRange` error.
    """
    m = build_correlation_matrix(m, min_dim=1)
    n = m.n
    if n == 1:
        return OneFactorModel.from_loadings([0.0])
    a = np.asarray(m.entries)
    row = a.sum(axis=1) - 1.0
    return OneFactorModel.from_loadings(_loadings_from_row_sums(row, n - 1, clip))


def fit_constant_factor(m, clip=CLIP):
    """Single loading ``c = sqrt(|mean off-diagonal|)`` shared by every variable."""
    m = build_correlation_matrix(m)
    n = m.n
    total = float(np.asarray(m.entries).sum() - n)
    c = _loadings_from_row_sums(np.array([abs(total)]), n * (n - 1), clip)[0]
    return OneFactorModel.from_loadings(np.full(n, c))


def fit_pc_k_factor(m, k):
    """Top-``k`` principal-component reconstruction rescaled to unit diagonal.

    Returns the candidate matrix only.  It has rank ``k``: the diagonal
    rescaling is a congruence, which preserves the inertia of the
    truncated sum.  For ``k = 1`` on an equicorrelated matrix every entry
    is 1, so this is a diagnostic and never an expansion base.
    """
    m = build_correlation_matrix(m)
    n = m.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    vec = m.eigenvectors[:, :k]
    lam = m.eigenvalues[:k]
    weight = (vec * vec) @ lam
    if np.any(weight <= 0.0):
        i = int(np.argmax(weight <= 0.0))
        raise ZeroDiagonalWeight(f"truncated diagonal weight of row {i} is {weight[i]!r}")
    gamma = 1.0 / np.sqrt(weight)
    tilde = vec * gamma[:, None]
    out = (tilde * lam) @ tilde.T
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out
