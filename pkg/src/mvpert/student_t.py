"""Multivariate Student-t CDF as a chi-mixture of Gaussian expansions.

    T_N(xmax; rho, nu) = int_0^inf chi_nu(y) I_N(y xmax / sqrt(nu); rho) dy

with ``chi_nu(y) = 2^(1-nu/2)/Gamma(nu/2) y^(nu-1) exp(-y^2/2)``.  The base
``rho_f``, ``eps`` and ``J`` do not depend on ``y``; only the upper limits
are rescaled.  Each perturbative order is mixed over ``y`` separately so
the Pade step sees integrated order terms.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .corr_matrix import build_correlation_matrix
from .errors import YIntegralUnderResolved
from .gauss_engine import ORDER_FACTORS, ExpandOptions, _integrate, expand, prepare, result_from_terms
from .quadrature import QuadratureConfig, YQuadrature, y_grid, zeta_grid

Y_RESOLUTION_TOL = 1e-7


@dataclass(frozen=True)
class StudentTRequest:
    rho: object
    xmax: tuple
    nu: float
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    y_quad: YQuadrature = field(default_factory=YQuadrature)

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")


def _scaled_limits(xmax, y, nu):
    with np.errstate(invalid="ignore"):
        out = np.outer(y, xmax) / math.sqrt(nu)
    # 0 * inf: a zero radius leaves an infinite limit infinite
    return np.where(np.isinf(xmax)[None, :], xmax[None, :], out)


def mixture_terms(setup, nu, y_quad=None, workers=1, naive=False):
    """``[T0, T1, T2]``: each Gaussian order term averaged over the chi weight."""
    y, wy = y_grid(nu, y_quad)
    z, wz = zeta_grid(setup.quad)
    xmax = np.asarray(setup.xmax)
    limits = _scaled_limits(xmax, y, nu)
    c, s = setup.model.c, setup.model.s

    def run(k):
        f = _integrate(z, None, c, s, limits[k], setup.eps, 2, naive, 1)
        return np.sum(wz[:, None] * f, axis=0)

    # one y node per work unit keeps the reduction order fixed
    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_y = np.array(list(pool.map(run, range(len(y)))))
    else:
        per_y = np.array([run(k) for k in range(len(y))])
    return setup.j_norm * ORDER_FACTORS * np.sum(wy[:, None] * per_y, axis=0)


def student_t_terms(setup, nu, y_quad=None, options=None):
    """``([T0, T1, T2], notes)``, with the ``y``-doubling check if enabled."""
    options = options or ExpandOptions()
    y_quad = y_quad or YQuadrature()
    notes = []
    terms = mixture_terms(setup, nu, y_quad, options.workers, options.naive)
    if options.check_resolution:
        fine = mixture_terms(setup, nu, y_quad.doubled(), options.workers, options.naive)
        delta = float(np.max(np.abs(fine - terms)))
        if delta > Y_RESOLUTION_TOL:
            notes.append(
                f"{YIntegralUnderResolved.__name__}: doubling y nodes moved order terms by "
                f"{delta:.3e} (> {Y_RESOLUTION_TOL:g})"
            )
    return terms, notes


def student_t_expand(req, *, options=None):
    """Student-t counterpart of :func:`gauss_engine.expand`.

    An under-resolved ``y`` grid (doubling ``y_nodes`` moves any order by
    more than 1e-7) is recorded in the result's ``warnings`` list.
    """
    options = options or ExpandOptions()
    rho = build_correlation_matrix(req.rho, min_dim=1)
    setup = prepare(rho, req.xmax, req.quad, model=options.model, lambda_min=options.lambda_min)
    terms, notes = student_t_terms(setup, req.nu, req.y_quad, options)
    node_count = len(zeta_grid(setup.quad)[0]) * req.y_quad.y_nodes
    return result_from_terms(terms, setup.metrics, node_count, list(setup.notes) + notes,
                             options.pade_policy, options.oscillating)


def gaussian_limit_check(req, *, options=None):
    """``|T - I|`` between the Student-t and Gaussian headline values (large ``nu``)."""
    options = options or ExpandOptions(check_resolution=False)
    t = student_t_expand(req, options=options)
    g = expand(req.rho, req.xmax, req.quad, options)
    return abs(t.i_infinity - g.i_infinity)


__all__ = ["StudentTRequest", "student_t_expand", "student_t_terms", "gaussian_limit_check", "mixture_terms"]
