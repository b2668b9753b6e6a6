"""Pade resummation of the three known orders and infinite-order extrapolation.

Given per-order terms ``I0, I1, I2`` the approximants are

    [0/1]  I0 / (1 - I1/I0)
    [1/1]  (I0 + I1 - I0*I2/I1) / (1 - I2/I1)
    [0/2]  I0 / (1 - I1/I0 - I2/I0 + (I1/I0)^2)

The [0/2] form is the reciprocal of the second-order Taylor expansion of
``1/(I0 + I1 t + I2 t^2)`` at ``t = 1``; it divides ``I2`` by ``I0``, which
is what makes it agree with ``I0 + I1 + I2`` through second order.

Pole handling: when a denominator is numerically zero the approximant is
replaced by the matching partial sum and a :class:`PadePole` is raised by
the strict functions or recorded by :func:`pade_sequence`.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoValidAlpha, PadePole

POLE_RTOL = 1e-14


@dataclass(frozen=True)
class PadeInputs:
    i0: float
    i1: float
    i2: float


def _negligible(x, scale):
    return abs(x) <= POLE_RTOL * abs(scale)


def pade_0(inputs):
    return float(inputs.i0)


def pade_1(inputs):
    i0, i1 = inputs.i0, inputs.i1
    if i1 == 0.0:
        return float(i0)
    if i0 == 0.0 or _negligible(i0 - i1, i0):
        raise PadePole(f"[0/1] denominator vanishes (i0={i0!r}, i1={i1!r})")
    return i0 * i0 / (i0 - i1)


def pade_2_11(inputs):
    i0, i1, i2 = inputs.i0, inputs.i1, inputs.i2
    if i2 == 0.0 or (_negligible(i1, i0) and _negligible(i2, i0)):
        # I2 -> 0 limit, including the terminated series I1 = I2 = 0
        return i0 + i1 + i2
    if _negligible(i1, i0) or _negligible(i1 - i2, max(abs(i1), abs(i2))):
        raise PadePole(f"[1/1] denominator vanishes (i1={i1!r}, i2={i2!r})")
    r = i2 / i1
    return (i0 + i1 - i0 * r) / (1.0 - r)


def pade_2_02(inputs):
    i0, i1, i2 = inputs.i0, inputs.i1, inputs.i2
    if i0 == 0.0:
        raise PadePole("[0/2] undefined for i0 = 0")
    if _negligible(i1, i0) and _negligible(i2, i0):
        return i0 + i1 + i2
    q = i1 / i0
    den = 1.0 - q - i2 / i0 + q * q
    if abs(den) <= POLE_RTOL:
        raise PadePole(f"[0/2] denominator {den!r} vanishes")
    return i0 / den


def second_order_choice(p11, p02, policy="average"):
    if policy == "max":
        return max(p11, p02)
    if policy == "average":
        return 0.5 * (p11 + p02)
    raise ValueError(f"unknown policy {policy!r}")


def is_oscillating(p0, p1, p2):
    """Consecutive differences of opposite sign; a zero difference counts as monotone."""
    return (p1 - p0) * (p2 - p1) < 0.0


def extrapolate_infinity(p0, p1, p2, oscillating=None):
    """Fit ``P_b = (P_0 - I_inf) q^b g(b) + I_inf`` through three values.

    ``g(b) = cos(pi b)`` for an oscillating sequence and 1 otherwise;
    ``oscillating=None`` auto-detects from the difference signs.  Since
    ``g(1)^2 = g(2) = 1`` the two conditions give
    ``(P1 - I)^2 = (P0 - I)(P2 - I)``, which is linear in ``I``, and then
    ``q = g(1) (P1 - I)/(P0 - I)`` must lie in (0, 1).

    Returns ``(i_infinity, alpha)`` with ``alpha = -log q``; a converged
    sequence returns ``alpha = inf``.  Raises :class:`NoValidAlpha`.
    """
    vals = (p0, p1, p2)
    if not all(math.isfinite(v) for v in vals):
        raise NoValidAlpha("non-finite Pade value")
    scale = max(abs(v) for v in vals)
    if max(vals) - min(vals) <= 4 * np.finfo(float).eps * scale:
        return float(p2), math.inf
    if oscillating is None:
        oscillating = is_oscillating(p0, p1, p2)
    g1 = -1.0 if oscillating else 1.0

    den = p0 + p2 - 2.0 * p1
    if den == 0.0:
        raise NoValidAlpha("second difference vanishes; no finite limit")
    i_inf = (p0 * p2 - p1 * p1) / den
    d0 = p0 - i_inf
    d1 = p1 - i_inf
    if d0 == 0.0:
        raise NoValidAlpha("P0 coincides with the fitted limit")
    q = g1 * d1 / d0
    if not 0.0 < q < 1.0:
        raise NoValidAlpha(f"decay factor exp(-alpha) = {q:.6g} outside (0, 1)")
    return float(i_inf), float(-math.log(q))


@dataclass
class PadeSequence:
    pade0: float
    pade1: float
    pade2_11: float
    pade2_02: float
    pade2: float
    i_infinity: float
    alpha: float
    oscillating: bool
    warnings: list = field(default_factory=list)


def pade_approximants(i0, i1, i2, policy="average"):
    """``(P0, P1, P2_11, P2_02, P2, notes)`` with partial-sum fallbacks at poles."""
    inputs = PadeInputs(float(i0), float(i1), float(i2))
    notes = []

    def guarded(fn, fallback, label):
        try:
            return fn(inputs)
        except PadePole as exc:
            notes.append(f"PadePole in {label}: {exc}; using partial sum")
            return fallback

    p0 = pade_0(inputs)
    p1 = guarded(pade_1, i0 + i1, "[0/1]")
    p11 = guarded(pade_2_11, i0 + i1 + i2, "[1/1]")
    p02 = guarded(pade_2_02, i0 + i1 + i2, "[0/2]")
    return p0, p1, p11, p02, second_order_choice(p11, p02, policy), notes


def infinite_order(p0, p1, p2, oscillating=None):
    """``(i_infinity, alpha, oscillating, notes)``; falls back to ``P2`` when no alpha fits."""
    osc = is_oscillating(p0, p1, p2) if oscillating is None else bool(oscillating)
    try:
        i_inf, alpha = extrapolate_infinity(p0, p1, p2, osc)
        return i_inf, alpha, osc, []
    except NoValidAlpha as exc:
        return p2, math.nan, osc, [f"NoValidAlpha: {exc}; using second-order Pade value"]


def pade_sequence(i0, i1, i2, policy="average", oscillating=None):
    """All approximants plus extrapolation, with fallbacks recorded as warnings."""
    p0, p1, p11, p02, p2, notes = pade_approximants(i0, i1, i2, policy)
    i_inf, alpha, osc, more = infinite_order(p0, p1, p2, oscillating)
    return PadeSequence(p0, p1, p11, p02, p2, i_inf, alpha, osc, notes + more)
