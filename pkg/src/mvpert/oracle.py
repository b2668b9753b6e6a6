"""Independent reference values for validating the expansion.

Nothing here touches the expansion code: Monte Carlo uses a Cholesky
sampler, the grid oracle integrates the density directly, and the
moment oracle is adaptive 1-D quadrature.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from .corr_matrix import build_correlation_matrix
from .errors import CholeskyFailure, DimensionTooLarge
from .quadrature import gauss_legendre_panels

PRNG = "numpy.random.Generator(PCG64), SeedSequence.spawn per batch"
MC_BATCH = 200_000
GRID_LOWER = -12.0
GRID_UPPER = 12.0


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    std_error: float
    samples_or_nodes: int
    method: str
    seed: int = None

    def to_record(self):
        rec = asdict(self)
        rec["samples"] = rec.pop("samples_or_nodes")
        return rec

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)


def _cholesky(rho):
    try:
        return np.linalg.cholesky(np.asarray(rho.entries))
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"Cholesky failed on a validated matrix: {exc}") from exc


def _batches(samples, seed):
    sizes = [MC_BATCH] * (samples // MC_BATCH)
    if samples % MC_BATCH:
        sizes.append(samples % MC_BATCH)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    return zip(sizes, seqs)


def _mc(rho, xmax, samples, seed, nu):
    rho = build_correlation_matrix(rho, min_dim=1)
    xmax = np.asarray(xmax, dtype=float)
    if xmax.shape != (rho.n,):
        raise ValueError("xmax length does not match the matrix")
    if samples < 10_000:
        raise ValueError("samples must be >= 1e4")
    chol = _cholesky(rho)
    hits = 0
    for size, seq in _batches(int(samples), seed):
        gen = np.random.Generator(np.random.PCG64(seq))
        x = gen.standard_normal((size, rho.n)) @ chol.T
        if nu is not None:
            x /= np.sqrt(gen.chisquare(nu, size) / nu)[:, None]
        hits += int(np.count_nonzero(np.all(x <= xmax, axis=1)))
    p = hits / samples
    return OracleEstimate(p, math.sqrt(p * (1.0 - p) / samples), int(samples), "mc_cholesky", seed)


def mc_gaussian_cdf(rho, xmax, samples=1_000_000, seed=0):
    """Fraction of Cholesky-correlated normal draws below ``xmax``."""
    return _mc(rho, xmax, samples, seed, None)


def mc_student_t_cdf(rho, xmax, nu, samples=1_000_000, seed=0):
    """Same as :func:`mc_gaussian_cdf` with draws divided by ``sqrt(chi2_nu / nu)``.

    For a fixed seed the normal draws coincide with the Gaussian sampler
    batch by batch (the chi-square draws come after them).
    """
    if not nu > 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    return _mc(rho, xmax, samples, seed, float(nu))


def mc_gaussian_difference(rho1, rho2, xmax, samples=1_000_000, seed=0):
    """``P2 - P1`` from one set of normal draws pushed through both Cholesky factors.

    The standard error is that of the paired indicator difference, which
    is far smaller than two independent estimates would give.
    """
    rho1 = build_correlation_matrix(rho1, min_dim=1)
    rho2 = build_correlation_matrix(rho2, min_dim=1)
    if rho1.n != rho2.n:
        raise ValueError(f"dimension mismatch: {rho1.n} vs {rho2.n}")
    if samples < 10_000:
        raise ValueError("samples must be >= 1e4")
    xmax = np.asarray(xmax, dtype=float)
    l1, l2 = _cholesky(rho1), _cholesky(rho2)
    total = 0
    total_sq = 0
    for size, seq in _batches(int(samples), seed):
        g = np.random.Generator(np.random.PCG64(seq)).standard_normal((size, rho1.n))
        d = (np.all(g @ l2.T <= xmax, axis=1).astype(np.int64)
             - np.all(g @ l1.T <= xmax, axis=1).astype(np.int64))
        total += int(d.sum())
        total_sq += int(np.count_nonzero(d))
    mean = total / samples
    var = total_sq / samples - mean * mean
    return OracleEstimate(mean, math.sqrt(max(var, 0.0) / samples), int(samples), "mc_cholesky", seed)


def tensor_grid_cdf(rho, xmax, nodes_per_dim=64, panels=4):
    """Deterministic Gaussian CDF for n <= 4.

    The first ``n-1`` coordinates are integrated on a tensor grid of
    composite Gauss-Legendre rules over ``[-12, xmax_i]``; the last
    coordinate is integrated exactly through its conditional normal CDF.
    ``nodes_per_dim`` is split over ``panels`` panels per axis.
    """
    rho = build_correlation_matrix(rho, min_dim=1)
    n = rho.n
    if n > 4:
        raise DimensionTooLarge(f"tensor grid supports n <= 4, got {n}")
    xmax = np.minimum(np.asarray(xmax, dtype=float), GRID_UPPER)
    if np.any(xmax <= GRID_LOWER):
        return OracleEstimate(0.0, 0.0, 0, "tensor_grid")
    if n == 1:
        return OracleEstimate(float(special.ndtr(xmax[0])), 0.0, 0, "tensor_grid")

    a = np.asarray(rho.entries)
    m = n - 1
    sub = a[:m, :m]
    sub_inv = np.linalg.inv(sub)
    coef = a[m, :m] @ sub_inv  # conditional mean of the last coordinate
    cond_sd = math.sqrt(a[m, m] - coef @ a[:m, m])
    log_norm = -0.5 * m * math.log(2.0 * math.pi) - 0.5 * math.log(np.linalg.det(sub))

    per = max(2, -(-nodes_per_dim // panels))
    axes = [gauss_legendre_panels(GRID_LOWER, xmax[i], panels, per) for i in range(m)]
    # iterate over the first axis to bound memory
    rest = np.meshgrid(*[ax[0] for ax in axes[1:]], indexing="ij") if m > 1 else []
    rest_w = np.ones(1)
    for ax in axes[1:]:
        rest_w = np.multiply.outer(rest_w, ax[1])
    rest_w = rest_w.ravel()
    rest_pts = np.stack([r.ravel() for r in rest], axis=1) if rest else np.zeros((1, 0))
    total = 0.0
    for x0, w0 in zip(*axes[0]):
        pts = np.column_stack([np.full(len(rest_pts), x0), rest_pts])
        quad_form = np.einsum("ij,jk,ik->i", pts, sub_inv, pts)
        dens = np.exp(log_norm - 0.5 * quad_form)
        tail = special.ndtr((xmax[m] - pts @ coef) / cond_sd)
        total += w0 * float(np.sum(rest_w * dens * tail))
    return OracleEstimate(total, 0.0, per * panels, "tensor_grid")


def bivariate_orthant(r):
    """``P(X < 0, Y < 0)`` for any centred elliptical pair with correlation ``r``."""
    return 0.25 + math.asin(r) / (2.0 * math.pi)


def independent_cdf(xmax):
    return float(np.prod(special.ndtr(np.asarray(xmax, dtype=float))))


def closed_form_orthant(r):
    return OracleEstimate(bivariate_orthant(r), 0.0, 0, "closed_form")


def truncated_moment(k, upper):
    """``int_{-inf}^{upper} xi^k phi(xi) dxi`` by adaptive quadrature."""
    if k not in range(5):
        raise ValueError(f"k must be in 0..4, got {k}")
    f = lambda t: t ** k * math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)  # noqa: E731
    upper = float(upper)
    if upper == -math.inf:
        return 0.0
    # split at 0 so quad sees the bulk of the mass
    if upper <= 0.0:
        val, _ = integrate.quad(f, -math.inf, upper, epsabs=1e-14, epsrel=1e-13, limit=200)
        return val
    left, _ = integrate.quad(f, -math.inf, 0.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    right, _ = integrate.quad(f, 0.0, upper, epsabs=1e-14, epsrel=1e-13, limit=200)
    return left + right


def truncated_moment_recursion(k, upper):
    """Same moment from ``M_k = (k-1) M_{k-2} - upper^(k-1) phi(upper)``."""
    if k not in range(5):
        raise ValueError(f"k must be in 0..4, got {k}")
    upper = float(upper)
    if upper == -math.inf:
        return 0.0
    if upper == math.inf:
        return (1.0, 0.0, 1.0, 0.0, 3.0)[k]
    pdf = math.exp(-0.5 * upper * upper) / math.sqrt(2.0 * math.pi)
    m = [float(special.ndtr(upper)), -pdf]
    for j in range(2, k + 1):
        m.append((j - 1) * m[j - 2] - upper ** (j - 1) * pdf)
    return m[k]


def factor_moment(k, c, zeta, xmax):
    """``int_{-inf}^{xi_max} (c zeta + s xi)^k phi(xi) dxi`` by direct quadrature."""
    s = math.sqrt(1.0 - c * c)
    upper = (xmax - c * zeta) / s
    f = lambda t: (c * zeta + s * t) ** k * math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)  # noqa: E731
    if upper == math.inf:
        val, _ = integrate.quad(f, -math.inf, math.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
        return val
    val, _ = integrate.quad(f, -math.inf, upper, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val
