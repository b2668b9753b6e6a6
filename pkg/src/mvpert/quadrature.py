"""Integration grids for the common-factor variable ``zeta`` and the Student-t radius ``y``."""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

RULES = ("gauss_legendre_composite", "trapezoid")


@dataclass(frozen=True)
class QuadratureConfig:
    """Grid on ``[-lambda_cut, lambda_cut]`` for the factor integral.

    ``nodes`` is the total node count; the composite rule splits it
    evenly over ``panels`` (rounding up per panel).
    """

    lambda_cut: float = 10.0
    nodes: int = 256
    rule: str = "gauss_legendre_composite"
    panels: int = 8

    def __post_init__(self):
        if self.nodes < 16:
            raise ValueError(f"nodes must be >= 16, got {self.nodes}")
        if self.lambda_cut < 6:
            raise ValueError(f"lambda_cut must be >= 6, got {self.lambda_cut}")
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")

    def doubled(self):
        return replace(self, nodes=2 * self.nodes)

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def gauss_legendre_panels(lo, hi, panels, per_panel):
    t, w = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wx = (half[:, None] * w[None, :]).ravel()
    return x, wx


def zeta_grid(quad):
    """Nodes and weights with the standard normal density folded into the weights."""
    lam = float(quad.lambda_cut)
    if quad.rule == "gauss_legendre_composite":
        per = -(-quad.nodes // quad.panels)
        z, w = gauss_legendre_panels(-lam, lam, quad.panels, per)
    else:
        z = np.linspace(-lam, lam, quad.nodes)
        w = np.full(quad.nodes, z[1] - z[0])
        w[0] *= 0.5
        w[-1] *= 0.5
    w = w * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return z, w


@dataclass(frozen=True)
class YQuadrature:
    """Radius grid for the Student-t mixture; ``y_max=None`` means ``sqrt(nu) + 12``."""

    y_max: float = None
    y_nodes: int = 128
    half_width: float = 12.0

    def __post_init__(self):
        if self.y_nodes < 32:
            raise ValueError(f"y_nodes must be >= 32, got {self.y_nodes}")

    def doubled(self):
        return replace(self, y_nodes=2 * self.y_nodes)

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _log_chi_norm(nu):
    # log of 2^(1 - nu/2) / Gamma(nu/2)
    return (1.0 - 0.5 * nu) * math.log(2.0) - special.gammaln(0.5 * nu)


def y_grid(nu, yq=None):
    """Nodes and weights for ``int_0^inf y^(nu-1) e^(-y^2/2) f(y) dy * 2^(1-nu/2)/Gamma(nu/2)``.

    The weight is the chi density with ``nu`` degrees of freedom, which
    concentrates near ``sqrt(nu)`` with width about ``1/sqrt(2)``.  The
    grid covers ``[max(0, sqrt(nu) - half_width), y_max]``.  When it
    reaches 0, Gauss-Jacobi nodes absorb the ``y^(nu-1)`` factor so
    ``nu < 1`` (singular at 0) and non-integer ``nu`` stay accurate; away
    from 0 plain Gauss-Legendre is used with the density in log space.
    """
    yq = yq or YQuadrature()
    nu = float(nu)
    if not nu > 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    center = math.sqrt(nu)
    hi = yq.y_max if yq.y_max is not None else center + yq.half_width
    lo = max(0.0, center - yq.half_width)
    lognorm = _log_chi_norm(nu)
    if lo == 0.0:
        x, w = special.roots_jacobi(yq.y_nodes, 0.0, nu - 1.0)
        y = 0.5 * hi * (1.0 + x)
        logw = np.log(w) + nu * math.log(0.5 * hi) - 0.5 * y * y + lognorm
    else:
        x, w = np.polynomial.legendre.leggauss(yq.y_nodes)
        half = 0.5 * (hi - lo)
        y = lo + half * (1.0 + x)
        logw = np.log(w * half) + (nu - 1.0) * np.log(y) - 0.5 * y * y + lognorm
    return y, np.exp(logw)
