"""Scalar building blocks for the factor-slice integrands.

For a fixed value of the common factor ``zeta`` every variable of the
one-factor model is ``x_i = c_i*zeta + s_i*xi_i`` with ``xi_i`` an
independent standard normal truncated above at

    xi_max_i(zeta) = (xmax_i - c_i*zeta) / s_i.

All perturbative orders are built from the truncated moments

    w_i^(k)(zeta) = int_{-inf}^{xi_max_i} (c_i*zeta + s_i*xi)^k phi(xi) dxi,

k = 0..4, with ``v_i = w_i^(0) = Phi(xi_max_i)``.  The closed forms below
use ``chi_i = -phi(xi_max_i)``.  Two details are easy to get wrong: the
exponent in ``chi`` is negative (otherwise nothing is integrable) and the
``c^2 s zeta^2`` coefficient in ``w^(3)`` is 3, as required by the
binomial expansion.
Both are pinned by quadrature tests in ``tests/test_special_fns.py``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT_2PI = np.sqrt(2.0 * np.pi)
# |xi_max| beyond this flushes to the analytic limits
FLUSH = 38.0

__all__ = [
    "FLUSH",
    "normal_pdf",
    "normal_cdf",
    "log_normal_cdf",
    "inverse_mills",
    "truncated_xi_moments",
    "conditional_xi_moments",
    "FactorSlice",
    "SliceBatch",
    "slice_batch",
    "build_factor_slice",
]


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


def normal_cdf(x):
    """Standard normal CDF.

    Uses ``scipy.special.ndtr``, which keeps full relative precision in
    the lower tail (the erf identity loses it below about -6).
    """
    out = special.ndtr(np.asarray(x, dtype=float))
    return out[()] if np.ndim(out) == 0 else out


def log_normal_cdf(x):
    out = special.log_ndtr(np.asarray(x, dtype=float))
    return out[()] if np.ndim(out) == 0 else out


def inverse_mills(a):
    """Return ``phi(a) / Phi(a)``, stable for any real ``a`` including +-inf."""
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        lam = np.sqrt(2.0 / np.pi) / special.erfcx(-a / np.sqrt(2.0))
    # erfcx overflows to inf for a >~ 26: the ratio is 0 there
    lam = np.where(a > 26.0, 0.0, lam)
    lam = np.where(a == -np.inf, np.inf, lam)
    return lam[()] if lam.ndim == 0 else lam


def _poly_times_pdf(poly, a, pdf):
    # poly(a)*phi(a) with the convention poly*0 = 0 at a = +-inf
    with np.errstate(invalid="ignore"):
        out = poly * pdf
    return np.where(np.isfinite(a), out, 0.0)


def truncated_xi_moments(a):
    """Absolute truncated moments ``int_{-inf}^a xi^k phi(xi) dxi`` for k = 0..4.

    Returns an array of shape ``(5,) + a.shape``.  Entries with
    ``a < -FLUSH`` are exactly zero; entries with ``a > FLUSH`` take the
    full-support values (1, 0, 1, 0, 3).
    """
    a = np.asarray(a, dtype=float)
    v = special.ndtr(a)
    pdf = normal_pdf(np.where(np.isfinite(a), a, 0.0))
    pdf = np.where(np.isfinite(a), pdf, 0.0)
    chi = -pdf
    m = np.empty((5,) + a.shape)
    m[0] = v
    m[1] = chi
    m[2] = v + _poly_times_pdf(-a, a, pdf)
    m[3] = _poly_times_pdf(-(a * a + 2.0), a, pdf)
    m[4] = 3.0 * v + _poly_times_pdf(-a * (a * a + 3.0), a, pdf)
    low = a < -FLUSH
    high = a > FLUSH
    m[:, low] = 0.0
    full = np.array([1.0, 0.0, 1.0, 0.0, 3.0])
    m[:, high] = full[:, None]
    return m


def conditional_xi_moments(a):
    """Moments of a standard normal conditioned on ``xi < a``.

    Returns ``(log_v, mean, var, mu3, mu4)``: log of the truncation mass,
    the conditional mean, and the second, third and fourth *central*
    conditional moments.  Everything is formed from the inverse Mills
    ratio, so no 0/0 arises in the deep lower tail.
    """
    a = np.asarray(a, dtype=float)
    high = a > FLUSH
    low = a < -FLUSH
    aa = np.where(high | low, 0.0, a)
    lam = inverse_mills(aa)
    mean = -lam
    var = 1.0 - aa * lam - lam * lam
    mu3 = lam * (1.0 - aa * aa - 3.0 * aa * lam - 2.0 * lam * lam)
    e2 = 1.0 - aa * lam
    e3 = -(aa * aa + 2.0) * lam
    e4 = 3.0 - aa * (aa * aa + 3.0) * lam
    mu4 = e4 - 4.0 * mean * e3 + 6.0 * mean * mean * e2 - 3.0 * mean ** 4
    log_v = special.log_ndtr(a)
    mean = np.where(high, 0.0, mean)
    var = np.where(high, 1.0, var)
    mu3 = np.where(high, 0.0, mu3)
    mu4 = np.where(high, 3.0, mu4)
    log_v = np.where(high, 0.0, log_v)
    log_v = np.where(low, -np.inf, log_v)
    for arr in (mean, var, mu3, mu4):
        arr[low] = 0.0
    return log_v, mean, var, mu3, mu4


@dataclass(frozen=True)
class FactorSlice:
    """All per-variable building blocks at one value of ``zeta``."""

    zeta: float
    xi_max: np.ndarray
    v: np.ndarray
    chi: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    w4: np.ndarray

    def w(self, k):
        return (self.v, self.w1, self.w2, self.w3, self.w4)[k]


@dataclass(frozen=True)
class SliceBatch:
    """Factor slices stacked over a grid of ``zeta`` nodes; arrays are (nodes, n)."""

    zeta: np.ndarray
    xi_max: np.ndarray
    v: np.ndarray
    chi: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    w4: np.ndarray

    def __len__(self):
        return len(self.zeta)

    def __getitem__(self, idx):
        return FactorSlice(
            float(self.zeta[idx]), self.xi_max[idx], self.v[idx], self.chi[idx],
            self.w1[idx], self.w2[idx], self.w3[idx], self.w4[idx],
        )

    def stacked(self):
        """Return w^(0..4) as one array of shape (5, nodes, n)."""
        return np.stack([self.v, self.w1, self.w2, self.w3, self.w4])


def xi_upper(zeta, c, s, xmax):
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    cz = np.outer(zeta, c)
    with np.errstate(invalid="ignore"):
        return (np.asarray(xmax, dtype=float)[None, :] - cz) / s[None, :]


def slice_batch(zeta, c, s, xmax):
    """Evaluate the closed-form ``v, chi, w^(1..4)`` on a grid of ``zeta``.

    ``c``, ``s`` and ``xmax`` are length-n vectors.  Upper limits may be
    ``+inf`` (variable unconstrained) or ``-inf``.
    """
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    a = xi_upper(zeta, c, s, xmax)
    finite = np.isfinite(a)
    af = np.where(finite, a, 0.0)
    v = special.ndtr(a)
    chi = np.where(finite, -normal_pdf(af), 0.0)

    cz = np.outer(zeta, c)
    sb = np.broadcast_to(s, a.shape)
    a2 = af * af
    w1 = cz * v + sb * chi
    w2 = (cz ** 2 + sb ** 2) * v + (2.0 * cz * sb + sb ** 2 * af) * chi
    w3 = (cz ** 3 + 3.0 * cz * sb ** 2) * v + (
        3.0 * cz ** 2 * sb + 3.0 * cz * sb ** 2 * af + sb ** 3 * (a2 + 2.0)
    ) * chi
    w4 = (cz ** 4 + 6.0 * cz ** 2 * sb ** 2 + 3.0 * sb ** 4) * v + (
        4.0 * cz ** 3 * sb
        + 6.0 * cz ** 2 * sb ** 2 * af
        + 4.0 * cz * sb ** 3 * (a2 + 2.0)
        + sb ** 4 * af * (a2 + 3.0)
    ) * chi

    low = a < -FLUSH
    high = a > FLUSH
    for arr in (v, chi, w1, w2, w3, w4):
        arr[low] = 0.0
    v[high] = 1.0
    chi[high] = 0.0
    # full-support moments of c*zeta + s*xi
    w1[high] = cz[high]
    w2[high] = cz[high] ** 2 + sb[high] ** 2
    w3[high] = cz[high] ** 3 + 3.0 * cz[high] * sb[high] ** 2
    w4[high] = cz[high] ** 4 + 6.0 * cz[high] ** 2 * sb[high] ** 2 + 3.0 * sb[high] ** 4
    return SliceBatch(zeta, a, v, chi, w1, w2, w3, w4)


def build_factor_slice(zeta, model, xmax):
    """Single-node convenience wrapper around :func:`slice_batch`."""
    return slice_batch([zeta], model.c, model.s, xmax)[0]
