"""Perturbation expansion of the multivariate normal CDF about a one-factor matrix.

With ``eps = rho^-1 - rho_f^-1`` and ``J = sqrt(det rho_f / det rho)``,

    I_N = J * int dzeta phi(zeta) E_xi[ 1{x < xmax} exp(-x^T eps x / 2) ]

where, at fixed ``zeta``, ``x_i = c_i zeta + s_i xi_i`` with independent
standard normal ``xi_i``.  Expanding the exponential gives the orders

    I^(0) = J  int phi * prod_i v_i
    I^(1) = -J/2 int phi * sum_ij eps_ij E[x_i x_j 1]
    I^(2) =  J/8 int phi * sum_ijkl eps_ij eps_kl E[x_i x_j x_k x_l 1]

Two evaluation paths exist for the inner sums.  The *naive* path sums
every index tuple with the class functions built from the truncated
moments ``w^(k)`` (O(n^2) and O(n^4) terms per node).  The *factored*
path writes ``x = mean + y`` with centred, independent ``y`` and uses

    E[Q]   = c0 + t
    E[Q^2] = (c0 + t)^2 + 4 sum b_i^2 k2_i + 2 k2^T (eps*eps) k2
             + sum eps_ii^2 (k4_i - 3 k2_i^2) + 4 sum b_i eps_ii k3_i

with ``b = eps @ mean``, ``c0 = mean . b``, ``t = sum eps_ii k2_i`` and
``k2, k3, k4`` the conditional central moments, scaled by the truncation
mass ``prod v``.  Both paths are exercised against each other in tests.
"""

import itertools
import math
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corr_matrix import ConvergenceMetrics, build_correlation_matrix, convergence_metrics, regularize
from .errors import ClassCountMismatch, QuadratureUnderResolved
from .one_factor import OneFactorModel, fit_one_factor
from .pade import pade_sequence
from .quadrature import QuadratureConfig, zeta_grid
from .special_fns import FLUSH, conditional_xi_moments, slice_batch

# nodes per work unit; fixed so the result does not depend on the worker count
CHUNK = 64
RESOLUTION_TOL = 1e-8
ORDER_FACTORS = np.array([1.0, -0.5, 0.125])


@dataclass(frozen=True, eq=False)
class PerturbationSetup:
    rho: object
    model: OneFactorModel
    eps: np.ndarray
    j_norm: float
    xmax: np.ndarray
    quad: QuadratureConfig
    metrics: ConvergenceMetrics
    notes: tuple = ()

    @property
    def n(self):
        return self.rho.n


@dataclass
class ExpansionResult:
    i0: float
    i1: float
    i2: float
    partial0: float
    partial1: float
    partial2: float
    pade1: float
    pade2_11: float
    pade2_02: float
    pade2: float
    i_infinity: float
    alpha: float
    oscillating: bool
    metrics: ConvergenceMetrics
    node_count: int
    warnings: list = field(default_factory=list)

    def as_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["metrics"] = self.metrics.as_dict()
        out["warnings"] = list(self.warnings)
        return out


@dataclass(frozen=True)
class ExpandOptions:
    pade_policy: str = "average"
    oscillating: bool = None
    naive: bool = False
    workers: int = 1
    check_resolution: bool = True
    model: OneFactorModel = None
    lambda_min: float = None


def _log_det_rho_f(model):
    return math.log(model.sigma2) + float(np.sum(np.log(model.s * model.s)))


def perturbation(rho, model):
    """``(eps, J)`` for a validated matrix and a base model of the same size."""
    if model.n != rho.n:
        raise ValueError(f"model dimension {model.n} != matrix dimension {rho.n}")
    eps = np.asarray(rho.inverse) - np.asarray(model.rho_f_inv)
    eps = 0.5 * (eps + eps.T)
    log_det_rho = float(np.sum(np.log(rho.eigenvalues)))
    j_norm = math.exp(0.5 * (_log_det_rho_f(model) - log_det_rho))
    eps.setflags(write=False)
    return eps, j_norm


def limits_vector(xmax, n):
    """Upper limits as a read-only float vector of length ``n`` (``+-inf`` allowed)."""
    xmax = np.array(xmax, dtype=float).ravel()
    if xmax.shape != (n,):
        raise ValueError(f"xmax has length {xmax.size}, matrix dimension is {n}")
    if np.any(np.isnan(xmax)):
        raise ValueError("xmax contains NaN")
    xmax.setflags(write=False)
    return xmax


def prepare(rho, xmax, quad=None, *, model=None, lambda_min=None):
    """Fit (or accept) the one-factor base and build ``eps``, ``J`` and metrics.

    ``model`` overrides the fitted base, e.g. to expand about a
    deliberately mismatched ``rho_f`` or to share one base between two
    matrices.  ``lambda_min`` regularizes ``rho`` first.
    """
    quad = quad or QuadratureConfig()
    rho = build_correlation_matrix(rho, min_dim=1)
    if lambda_min is not None:
        rho = regularize(rho, lambda_min)
    xmax = limits_vector(xmax, rho.n)
    if model is None:
        model = fit_one_factor(rho)
    eps, j_norm = perturbation(rho, model)
    notes = []
    metrics = convergence_metrics(rho, model, eps, xmax, notes)
    return PerturbationSetup(rho, model, eps, j_norm, xmax, quad, metrics, tuple(notes))


# ---------------------------------------------------------------------------
# per-node integrands


def _node_upper(z, c, s, xmax):
    # xmax is (n,) or (nodes, n); returns xi_max of shape (nodes, n)
    cz = z[:, None] * c[None, :]
    with np.errstate(invalid="ignore"):
        return (np.broadcast_to(xmax, cz.shape) - cz) / s[None, :]


class NodeMoments:
    """Truncation mass and conditional moments of every ``x_i`` at each node.

    They depend on the base model and the limits only, so one instance
    can be contracted with several ``eps`` matrices.
    """

    def __init__(self, z, c, s, xmax):
        z = np.asarray(z, dtype=float)
        a = _node_upper(z, c, s, xmax)
        log_v, mxi, var, mu3, mu4 = conditional_xi_moments(a)
        self.p = np.exp(np.sum(log_v, axis=1))
        self.p[np.any(a < -FLUSH, axis=1)] = 0.0
        s2 = s * s
        self.mean = z[:, None] * c[None, :] + s[None, :] * mxi
        self.k2 = s2 * var
        self.k3 = s2 * s * mu3
        self.k4 = s2 * s2 * mu4

    def contract(self, eps, max_order=2):
        """``E[Q^b 1]`` for ``b = 0..max_order`` at each node, shape (nodes, 3)."""
        out = np.zeros((len(self.p), 3))
        out[:, 0] = self.p
        if max_order == 0:
            return out
        k2 = self.k2
        d = np.diag(eps)
        b = self.mean @ eps
        e1 = np.sum(b * self.mean, axis=1) + k2 @ d
        out[:, 1] = self.p * e1
        if max_order == 1:
            return out
        e2 = (
            e1 * e1
            + 4.0 * np.sum(b * b * k2, axis=1)
            + 2.0 * np.sum((k2 @ (eps * eps)) * k2, axis=1)
            + (self.k4 - 3.0 * k2 * k2) @ (d * d)
            + 4.0 * (b * self.k3) @ d
        )
        out[:, 2] = self.p * e2
        return out


def factored_integrands(z, c, s, xmax, eps, max_order=2):
    return NodeMoments(z, c, s, xmax).contract(eps, max_order)


# second-order index classes

CLASS_PATTERN = {
    1: (1, 1, 1, 1),
    2: (2, 1, 1),
    3: (2, 1, 1),
    4: (2, 2),
    5: (2, 2),
    6: (3, 1),
    7: (4,),
}


def classify_indices(i, j, k, l):
    """Coincidence class (1..7) of the index tuple of ``eps_ij eps_kl``."""
    mult = sorted(Counter((i, j, k, l)).values(), reverse=True)
    if mult == [1, 1, 1, 1]:
        return 1
    if mult == [2, 1, 1]:
        return 2 if (i == j or k == l) else 3
    if mult == [2, 2]:
        return 4 if (i == j and k == l) else 5
    if mult == [3, 1]:
        return 6
    return 7


def class_counts(n):
    """Closed-form class cardinalities; they sum to ``n**4``."""
    return {
        1: n * (n - 1) * (n - 2) * (n - 3),
        2: 2 * n * (n - 1) * (n - 2),
        3: 4 * n * (n - 1) * (n - 2),
        4: n * (n - 1),
        5: 2 * n * (n - 1),
        6: 4 * n * (n - 1),
        7: n,
    }


def enumerate_class_counts(n):
    counts = dict.fromkeys(CLASS_PATTERN, 0)
    for idx in itertools.product(range(n), repeat=4):
        counts[classify_indices(*idx)] += 1
    return counts


def _class_factors(gamma, idx):
    # (index, moment order) pairs defining G^(gamma) for this tuple
    cnt = Counter(idx)
    pattern = tuple(sorted(cnt.values(), reverse=True))
    if pattern != CLASS_PATTERN[gamma]:
        raise ClassCountMismatch(f"tuple {idx} does not fit class {gamma}")
    return sorted(cnt.items())


def naive_integrands(z, c, s, xmax, eps, max_order=2):
    """Reference path: explicit sums over all index pairs and quadruples.

    ``G`` for a tuple is the product of ``w^(m)`` over its distinct
    indices (``m`` = multiplicity, fixed by the class) times ``v`` over
    every untouched index.
    """
    sl = slice_batch(z, c, s, xmax)
    w = sl.stacked()  # (5, nodes, n)
    nodes, n = sl.v.shape
    cols = np.arange(n)
    out = np.zeros((nodes, 3))
    out[:, 0] = np.prod(sl.v, axis=1)
    if max_order == 0:
        return out

    def g(pairs):
        order = np.zeros(n, dtype=int)
        for m, k in pairs:
            order[m] = k
        return np.prod(w[order, :, cols], axis=0)

    for i, j in itertools.product(range(n), repeat=2):
        if eps[i, j] != 0.0:
            pairs = [(i, 2)] if i == j else [(i, 1), (j, 1)]
            out[:, 1] += eps[i, j] * g(pairs)
    if max_order == 1:
        return out

    seen = dict.fromkeys(CLASS_PATTERN, 0)
    for idx in itertools.product(range(n), repeat=4):
        gamma = classify_indices(*idx)
        seen[gamma] += 1
        coef = eps[idx[0], idx[1]] * eps[idx[2], idx[3]]
        if coef != 0.0:
            out[:, 2] += coef * g(_class_factors(gamma, idx))
    if sum(seen.values()) != n ** 4 or seen != class_counts(n):
        raise ClassCountMismatch(f"class cardinalities {seen} do not match closed form for n={n}")
    return out


def _integrate(z, w, c, s, xmax, eps, max_order, naive, workers):
    fn = naive_integrands if naive else factored_integrands
    xmax = np.asarray(xmax, dtype=float)
    per_node = xmax.ndim == 2
    starts = range(0, len(z), CHUNK)

    def run(k):
        xm = xmax[k:k + CHUNK] if per_node else xmax
        return fn(z[k:k + CHUNK], c, s, xm, eps, max_order)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(k) for k in starts]
    return np.concatenate(parts, axis=0)


def node_integrands(setup, z, xmax=None, *, max_order=2, naive=False, workers=1):
    """Per-node inner expectations on an arbitrary ``zeta`` array."""
    xm = setup.xmax if xmax is None else xmax
    return _integrate(np.asarray(z, dtype=float), None, setup.model.c, setup.model.s, xm,
                      setup.eps, max_order, naive, workers)


def integrate_orders(setup, quad=None, *, xmax=None, max_order=2, naive=False, workers=1):
    """Return ``[I0, I1, I2]`` on the configured (or given) grid."""
    quad = quad or setup.quad
    z, w = zeta_grid(quad)
    f = node_integrands(setup, z, xmax, max_order=max_order, naive=naive, workers=workers)
    return setup.j_norm * ORDER_FACTORS * np.sum(w[:, None] * f, axis=0)


def _with_resolution_check(setup, max_order, naive, workers, notes):
    terms = integrate_orders(setup, max_order=max_order, naive=naive, workers=workers)
    fine = integrate_orders(setup, setup.quad.doubled(), max_order=max_order, naive=naive,
                            workers=workers)
    delta = np.abs(fine - terms)[: max_order + 1]
    if np.max(delta) > RESOLUTION_TOL:
        notes.append(
            f"QuadratureUnderResolved: doubling zeta nodes moved order terms by "
            f"{np.max(delta):.3e} (> {RESOLUTION_TOL:g})"
        )
    return terms


def _single_order(setup, order, naive, check):
    notes = []
    if check:
        terms = _with_resolution_check(setup, order, naive, 1, notes)
    else:
        terms = integrate_orders(setup, max_order=order, naive=naive)
    for msg in notes:
        warnings.warn(msg, QuadratureUnderResolved, stacklevel=3)
    return float(terms[order])


def order0(setup, *, naive=False, check=True):
    return _single_order(setup, 0, naive, check)


def order1(setup, *, naive=False, check=True):
    return _single_order(setup, 1, naive, check)


def order2(setup, *, naive=False, check=True):
    return _single_order(setup, 2, naive, check)


def result_from_terms(terms, metrics, node_count, notes=(), pade_policy="average", oscillating=None):
    i0, i1, i2 = (float(t) for t in terms)
    p = pade_sequence(i0, i1, i2, pade_policy, oscillating)
    p1 = i0 + i1
    return ExpansionResult(
        i0=i0, i1=i1, i2=i2,
        partial0=i0, partial1=p1, partial2=p1 + i2,
        pade1=p.pade1, pade2_11=p.pade2_11, pade2_02=p.pade2_02, pade2=p.pade2,
        i_infinity=p.i_infinity, alpha=p.alpha, oscillating=p.oscillating,
        metrics=metrics, node_count=node_count,
        warnings=list(notes) + p.warnings,
    )


def expand(rho, xmax, quad=None, options=None):
    """Full pipeline: prepare, all three orders on one grid, Pade, extrapolation."""
    options = options or ExpandOptions()
    setup = prepare(rho, xmax, quad, model=options.model, lambda_min=options.lambda_min)
    return expand_setup(setup, options)


def order_terms(setup, options=None, max_order=2):
    """``([I0, I1, I2], notes)``, with the grid-doubling check if enabled.

    Orders above ``max_order`` are returned as zero.
    """
    options = options or ExpandOptions()
    notes = []
    if options.check_resolution:
        terms = _with_resolution_check(setup, max_order, options.naive, options.workers, notes)
    else:
        terms = integrate_orders(setup, max_order=max_order, naive=options.naive,
                                 workers=options.workers)
    return terms, notes


def expand_setup(setup, options=None):
    options = options or ExpandOptions()
    terms, notes = order_terms(setup, options)
    notes = list(setup.notes) + notes
    node_count = len(zeta_grid(setup.quad)[0])
    return result_from_terms(terms, setup.metrics, node_count, notes, options.pade_policy,
                             options.oscillating)


def sensitivity_terms(rho1, rho2, xmax, quad=None, *, model=None):
    """Order terms for two matrices expanded about one shared ``rho_f``.

    The base is fitted from ``rho1`` unless ``model`` is given.  Node
    moments depend only on the base and the limits, so they are built
    once and contracted with each ``eps``.
    """
    quad = quad or QuadratureConfig()
    rho1 = build_correlation_matrix(rho1)
    rho2 = build_correlation_matrix(rho2)
    if rho1.n != rho2.n:
        raise ValueError(f"dimension mismatch: {rho1.n} vs {rho2.n}")
    model = model or fit_one_factor(rho1)
    s1 = prepare(rho1, xmax, quad, model=model)
    s2 = prepare(rho2, xmax, quad, model=model)
    z, w = zeta_grid(quad)
    shared = NodeMoments(z, model.c, model.s, s1.xmax)
    t1 = s1.j_norm * ORDER_FACTORS * np.sum(w[:, None] * shared.contract(s1.eps), axis=0)
    t2 = s2.j_norm * ORDER_FACTORS * np.sum(w[:, None] * shared.contract(s2.eps), axis=0)
    return s1, s2, t1, t2


def correlation_sensitivity(rho1, rho2, xmax, quad=None, *, model=None):
    """Second-order estimate of ``I(rho2) - I(rho1)`` with a common base."""
    _, _, t1, t2 = sensitivity_terms(rho1, rho2, xmax, quad, model=model)
    return float(np.sum(t2) - np.sum(t1))
