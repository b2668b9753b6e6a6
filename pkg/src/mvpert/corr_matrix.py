"""Validated correlation matrices, eigenvalue regularization and convergence metrics."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (
    CutoffTooLarge,
    DimensionTooSmall,
    InverseCheckFailed,
    NotPositiveDefinite,
    NotSymmetric,
    NotUnitDiagonal,
    RootNotBracketed,
    SymmetrizedInput,
)
from .special_fns import inverse_mills, log_normal_cdf, normal_cdf

# asymmetry above SYM_WARN is averaged away with a warning, above SYM_REJECT rejected
SYM_WARN = 1e-12
SYM_REJECT = 1e-8
DIAG_TOL = 1e-12
DEFAULT_LAMBDA_MIN = 1e-4
# regularization stops once lambda_min >= cutoff * (1 - CUTOFF_RTOL)
CUTOFF_RTOL = 1e-10
_MAX_REG_SWEEPS = 500


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric positive-definite matrix with unit diagonal.

    The spectrum (descending), eigenvectors (columns), inverse and
    determinant are computed once at construction.  Instances are
    immutable; use :func:`build_correlation_matrix` to create one.
    """

    entries: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    inverse: np.ndarray
    determinant: float

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def min_eigenvalue(self):
        return float(self.eigenvalues[-1])

    def off_diagonals(self):
        iu = np.triu_indices(self.n, 1)
        return self.entries[iu]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, CorrelationMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


def build_correlation_matrix(entries, *, min_dim=2):
    """Validate ``entries`` and return a :class:`CorrelationMatrix`.

    Small asymmetries (rounding noise from files) are averaged out with
    a :class:`SymmetrizedInput` warning; anything above ``SYM_REJECT``
    raises :class:`NotSymmetric`.  ``min_dim`` exists so that univariate
    Student-t / oracle checks can pass a 1x1 matrix.
    """
    if isinstance(entries, CorrelationMatrix):
        return entries
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionTooSmall(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if n < min_dim:
        raise DimensionTooSmall(f"dimension {n} < {min_dim}")
    if not np.all(np.isfinite(a)):
        raise NotSymmetric("matrix contains non-finite entries")

    asym = np.max(np.abs(a - a.T)) if n > 1 else 0.0
    if asym > SYM_REJECT:
        raise NotSymmetric(f"max |rho_ij - rho_ji| = {asym:.3e} exceeds {SYM_REJECT:g}")
    if asym > 0.0:
        if asym > SYM_WARN:
            warnings.warn(
                f"symmetrizing input with max asymmetry {asym:.3e}", SymmetrizedInput, stacklevel=2
            )
        a = 0.5 * (a + a.T)

    d = np.diag(a)
    bad = np.abs(d - 1.0) > DIAG_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NotUnitDiagonal(f"diagonal entry {i} is {d[i]!r}, expected 1")
    np.fill_diagonal(a, 1.0)

    lam, vec = np.linalg.eigh(a)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    vec = vec[:, order]
    lam_min = float(lam[-1])

    off = np.abs(a - np.eye(n))
    if n > 1 and off.max() >= 1.0:
        i, j = np.unravel_index(np.argmax(off), off.shape)
        raise NotPositiveDefinite(
            f"|rho[{i},{j}]| = {off[i, j]!r} >= 1 (min eigenvalue {lam_min:.3e})", lam_min
        )
    if lam_min <= 0.0:
        raise NotPositiveDefinite(f"min eigenvalue {lam_min:.6e} <= 0", lam_min)

    inv = (vec / lam) @ vec.T
    inv = 0.5 * (inv + inv.T)
    resid = np.max(np.abs(a @ inv - np.eye(n)))
    if resid >= 1e-8:
        raise InverseCheckFailed(
            f"||rho rho^-1 - I||_max = {resid:.3e} (min eigenvalue {lam_min:.3e})"
        )
    return CorrelationMatrix(
        entries=_readonly(a),
        eigenvalues=_readonly(lam),
        eigenvectors=_readonly(vec),
        inverse=_readonly(inv),
        determinant=float(np.prod(lam)),
    )


def equicorrelated(n, r):
    a = np.full((n, n), float(r))
    np.fill_diagonal(a, 1.0)
    return build_correlation_matrix(a)


def clip_spectrum(m, cutoff):
    """``V diag(max(lambda, cutoff)) V^T`` without diagonal rescaling."""
    lam = np.maximum(m.eigenvalues, cutoff)
    out = (m.eigenvectors * lam) @ m.eigenvectors.T
    return 0.5 * (out + out.T)


def _rescale_unit_diagonal(a):
    d = np.sqrt(np.diag(a))
    out = a / np.outer(d, d)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def regularize(m, lambda_min_cutoff=DEFAULT_LAMBDA_MIN):
    """Raise eigenvalues below ``lambda_min_cutoff`` and restore unit diagonal.

    Each sweep clips the spectrum at the cutoff and rescales
    ``D^-1/2 M D^-1/2``.  Rescaling can pull the smallest eigenvalue back
    under the cutoff, so sweeps repeat until it stays above
    ``cutoff * (1 - CUTOFF_RTOL)``; this makes the operation idempotent.
    The input is returned unchanged when no eigenvalue is below the cutoff.
    """
    m = build_correlation_matrix(m)
    cut = float(lambda_min_cutoff)
    if not 0.0 < cut < 1.0:
        raise CutoffTooLarge(f"cutoff must lie in (0, 1), got {cut!r}")
    target = cut * (1.0 - CUTOFF_RTOL)
    if m.min_eigenvalue >= target:
        return m
    cur = m
    for _ in range(_MAX_REG_SWEEPS):
        a = _rescale_unit_diagonal(clip_spectrum(cur, cut))
        try:
            cur = build_correlation_matrix(a)
        except Exception as exc:
            raise CutoffTooLarge(f"regularized matrix failed validation: {exc}") from exc
        if cur.min_eigenvalue >= target:
            return cur
    raise CutoffTooLarge(
        f"regularization did not settle above cutoff {cut:g} "
        f"(min eigenvalue {cur.min_eigenvalue:.6e})"
    )


def internal_variance(matrix):
    """Sample variance of the strictly upper off-diagonal entries.

    The normaliser is ``n(n-1)/2 - 1``, so ``n >= 3`` is required.
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if n < 3:
        raise DimensionTooSmall(f"internal variance needs n >= 3, got {n}")
    off = a[np.triu_indices(n, 1)]
    dev = off - off.mean()
    return float(np.sum(dev * dev) / (0.5 * n * (n - 1) - 1.0))


def distance_from_singular(m):
    """Harmonic eigenvalue sum ``1 / sum(1/lambda)``; at most ``1/n``."""
    return float(1.0 / np.sum(1.0 / m.eigenvalues))


def _bump_equation(zeta, c_avg, s_avg, x_avg, n):
    return zeta + n * c_avg / s_avg * inverse_mills((x_avg - c_avg * zeta) / s_avg)


def log_integrand_profile(zeta, c_avg, x_avg_max, n):
    """``-zeta^2/2 + n log Phi((x - c zeta)/s)``, the zeroth-order log integrand."""
    s_avg = np.sqrt(1.0 - c_avg * c_avg)
    z = np.asarray(zeta, dtype=float)
    return -0.5 * z * z + n * log_normal_cdf((x_avg_max - c_avg * z) / s_avg)


def heuristic_estimates(c_avg, s_avg, x_avg_max, eps_avg, n, order=2, bracket=(-20.0, 20.0)):
    """Bump location ``zeta*``, dominant order ``beta*`` and dimension ``N*``.

    ``zeta*`` is the root of ``zeta + (n c/s) phi(u)/Phi(u) = 0`` with
    ``u = (x - c zeta)/s``; ``N*`` is evaluated at the given ``order``.
    Raises :class:`RootNotBracketed` if the bracket shows no sign change.
    Diagnostics only.
    """
    if not abs(c_avg) < 1.0:
        raise ValueError(f"|c_avg| must be < 1, got {c_avg}")
    if not np.isclose(s_avg, np.sqrt(1.0 - c_avg * c_avg), rtol=1e-12, atol=1e-15):
        raise ValueError("s_avg must equal +sqrt(1 - c_avg^2)")
    beta_star = 0.5 * n * n * eps_avg

    if c_avg == 0.0:
        zeta_star = 0.0
    else:
        lo, hi = bracket
        flo = _bump_equation(lo, c_avg, s_avg, x_avg_max, n)
        fhi = _bump_equation(hi, c_avg, s_avg, x_avg_max, n)
        if not np.sign(flo) * np.sign(fhi) < 0:
            raise RootNotBracketed(f"no sign change of the bump equation on [{lo}, {hi}]")
        zeta_star = optimize.brentq(
            _bump_equation, lo, hi, args=(c_avg, s_avg, x_avg_max, n), xtol=1e-14, rtol=1e-14
        )

    n_avg = float(normal_cdf((x_avg_max - c_avg * zeta_star) / s_avg))
    if n_avg >= 1.0:
        n_star = np.inf
    elif n_avg <= 0.0:
        n_star = 0.0
    else:
        n_star = 2.0 * order / np.log(1.0 / n_avg)
    return float(zeta_star), float(beta_star), float(n_star)


@dataclass(frozen=True)
class ConvergenceMetrics:
    sigma2_rho_int: float
    sigma2_eps_int: float
    r_of_n: float
    lambda_min: float
    zeta_star: float
    beta_star: float
    n_star: float

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _safe_internal_variance(a):
    return internal_variance(a) if np.shape(a)[0] >= 3 else float("nan")


def convergence_metrics(rho, model, eps, xmax, notes=None):
    """Assemble :class:`ConvergenceMetrics` for a prepared expansion.

    Averages fed to the heuristics: ``c_avg`` is the mean loading,
    ``x_avg`` the mean of the finite upper limits (``+inf`` if none are
    finite) and ``eps_avg`` the mean absolute entry of ``eps``.  A failed
    ``zeta*`` bracket is appended to ``notes`` and reported as NaN.
    """
    c_avg = float(np.mean(model.c))
    s_avg = float(np.sqrt(1.0 - c_avg * c_avg))
    xmax = np.asarray(xmax, dtype=float)
    finite = xmax[np.isfinite(xmax)]
    x_avg = float(finite.mean()) if finite.size else np.inf
    eps_avg = float(np.mean(np.abs(eps)))
    n = rho.n
    try:
        zeta_star, beta_star, n_star = heuristic_estimates(c_avg, s_avg, x_avg, eps_avg, n)
    except RootNotBracketed as exc:
        if notes is not None:
            notes.append(f"RootNotBracketed: {exc}")
        zeta_star, beta_star, n_star = np.nan, 0.5 * n * n * eps_avg, np.nan
    return ConvergenceMetrics(
        sigma2_rho_int=_safe_internal_variance(rho.entries),
        sigma2_eps_int=_safe_internal_variance(eps),
        r_of_n=distance_from_singular(rho),
        lambda_min=rho.min_eigenvalue,
        zeta_star=zeta_star,
        beta_star=beta_star,
        n_star=n_star,
    )
