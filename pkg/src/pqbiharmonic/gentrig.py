"""Generalized trigonometric functions sin_{r,s} and cos_{r,s}.

``sin_{r,s}`` is the inverse of

    F_{r,s}(y) = int_0^y (1 - t^s)^(-1/r) dt,     0 <= y <= 1,

on the quarter period ``[0, pi_{r,s}/2]``, extended evenly about the quarter
period, oddly about the origin and ``2 pi_{r,s}``-periodically. ``cos_{r,s}``
is its derivative. For ``r = s = 2`` both reduce to the classical functions.

The inversion is carried out in two charts. Near the origin the unknown is
``y`` itself and ``F' = (1 - y^s)^(-1/r)`` is bounded. Near the quarter
period the unknown is ``w = (1 - y^s)^(1/r')``; the distance to the quarter
period is then a regular function of ``w`` and the cosine equals
``w^(1/(r-1))`` without cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "GenTrigParams",
    "arcsin_rs",
    "beta",
    "check_sum_formula",
    "conj",
    "cos_rs",
    "incomplete_beta",
    "pi_rs",
    "sin_rs",
    "sincos_rs",
]


def conj(r: float) -> float:
    """Conjugate exponent ``r / (r - 1)``."""
    if not r > 1:
        raise DomainError(f"conjugate exponent needs r > 1, got {r!r}")
    return r / (r - 1.0)


def beta(a: float, b: float) -> float:
    """Complete Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)."""
    if not (a > 0 and b > 0):
        raise DomainError(f"beta requires a > 0 and b > 0, got a={a!r}, b={b!r}")
    return float(special.beta(a, b))


def incomplete_beta(x, a: float, b: float):
    """Non-regularized incomplete Beta function ``B_x(a, b)``.

    ``B_x(a, b) = int_0^x t^(a-1) (1-t)^(b-1) dt``. Accepts scalar or array
    ``x``.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"incomplete_beta requires a, b > 0, got a={a!r}, b={b!r}")
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa < 0.0) or np.any(xa > 1.0):
        raise DomainError("incomplete_beta requires 0 <= x <= 1")
    out = special.betainc(a, b, xa) * special.beta(a, b)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GenTrigParams:
    """Exponent pair ``(r, s)`` of a generalized sine, with cached constants.

    Attributes
    ----------
    r, s : float
        Exponents, both > 1.
    r_conj : float
        ``r / (r - 1)``.
    period_quarter : float
        ``pi_{r,s} / 2 = (1/s) B(1/s, 1/r')``.
    """

    r: float
    s: float
    r_conj: float = field(init=False)
    period_quarter: float = field(init=False)
    _x_split: float = field(init=False, repr=False)

    def __post_init__(self):
        r, s = float(self.r), float(self.s)
        if not (r > 1 and math.isfinite(r)):
            raise DomainError(f"generalized sine requires r > 1, got r={self.r!r}")
        if not (s > 1 and math.isfinite(s)):
            raise DomainError(f"generalized sine requires s > 1, got s={self.s!r}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)
        rc = r / (r - 1.0)
        object.__setattr__(self, "r_conj", rc)
        quarter = float(special.beta(1.0 / s, 1.0 / rc)) / s
        object.__setattr__(self, "period_quarter", quarter)
        # Chart boundary at y^s = 1/2.
        lower = float(special.betainc(1.0 / s, 1.0 / rc, 0.5) * special.beta(1.0 / s, 1.0 / rc)) / s
        object.__setattr__(self, "_x_split", lower)

    @property
    def s_conj(self) -> float:
        return self.s / (self.s - 1.0)

    @property
    def period(self) -> float:
        """Full period ``2 pi_{r,s}``."""
        return 4.0 * self.period_quarter

    def dual(self) -> "GenTrigParams":
        """Exponent pair ``(s', r')`` appearing in the duality relations."""
        return GenTrigParams(self.s_conj, self.r_conj)


def _as_params(params, s=None) -> GenTrigParams:
    if isinstance(params, GenTrigParams):
        return params
    if s is None:
        r, s = params
        return GenTrigParams(r, s)
    return GenTrigParams(params, s)


def pi_rs(params) -> float:
    """Generalized half period ``pi_{r,s} = (2/s) B(1/s, 1/r')``.

    ``params`` may be a :class:`GenTrigParams` or an ``(r, s)`` pair.
    """
    return 2.0 * _as_params(params).period_quarter


# -- chart functions ---------------------------------------------------------

def _lower_chart(gp: GenTrigParams, y):
    """F(y) and F'(y) for y^s <= 1/2."""
    a, b = 1.0 / gp.s, 1.0 / gp.r_conj
    ys = y ** gp.s
    val = special.betainc(a, b, ys) * special.beta(a, b) / gp.s
    der = (1.0 - ys) ** (-1.0 / gp.r)
    return val, der


def _upper_chart(gp: GenTrigParams, w):
    """Distance to the quarter period as a function of w, and its derivative."""
    a, b = 1.0 / gp.r_conj, 1.0 / gp.s
    v = w ** gp.r_conj
    val = special.betainc(a, b, v) * special.beta(a, b) / gp.s
    der = (gp.r_conj / gp.s) * (1.0 - v) ** (1.0 / gp.s - 1.0)
    return val, der


def _safeguarded_newton(chart, gp, target, upper, guess, tol, max_iter=80, deriv_cap=1e8):
    """Solve ``chart(z) = target`` on ``[0, upper]`` elementwise.

    The chart value is increasing in z. Newton steps leaving the current
    bracket, or taken where the derivative exceeds ``deriv_cap``, are replaced
    by bisection.
    """
    lo = np.zeros_like(target)
    hi = np.full_like(target, upper)
    z = np.clip(guess, lo, hi)
    active = np.ones(target.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        za = z[active]
        val, der = chart(gp, za)
        res = val - target[active]
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(res < 0, za, lo_a)
        hi_a = np.where(res > 0, za, hi_a)
        with np.errstate(divide="ignore", invalid="ignore"):
            zn = za - res / der
        bad = ~np.isfinite(zn) | (zn <= lo_a) | (zn >= hi_a) | (der > deriv_cap)
        zn = np.where(bad, 0.5 * (lo_a + hi_a), zn)
        done = (np.abs(res) <= tol) | (np.abs(zn - za) <= 4e-16 * np.maximum(za, 1e-300))
        done |= (hi_a - lo_a) <= 4e-16 * np.maximum(hi_a, 1e-300)
        z[active] = np.where(np.abs(res) <= tol, za, zn)
        lo[active], hi[active] = lo_a, hi_a
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return z


def _quarter_values(gp: GenTrigParams, a, d, tol):
    """sin and cos on the quarter period from the distances to 0 and to the peak.

    ``a + d`` equals the quarter period; whichever of the two is small is
    used so that neither endpoint loses relative accuracy.
    """
    sin = np.empty_like(a)
    cos = np.empty_like(a)
    low = a <= gp._x_split
    if low.any():
        ta = a[low]
        y = _safeguarded_newton(_lower_chart, gp, ta, 2.0 ** (-1.0 / gp.s), ta.copy(), tol)
        sin[low] = y
        cos[low] = (1.0 - y ** gp.s) ** (1.0 / gp.r)
    high = ~low
    if high.any():
        td = d[high]
        w_max = 2.0 ** (-1.0 / gp.r_conj)
        w = _safeguarded_newton(_upper_chart, gp, td, w_max, td * gp.s / gp.r_conj, tol)
        v = w ** gp.r_conj
        sin[high] = (1.0 - v) ** (1.0 / gp.s)
        cos[high] = w ** (1.0 / (gp.r - 1.0))
    return sin, cos


def sincos_rs(params, x, *, tol: float = 1e-15):
    """Evaluate ``(sin_{r,s}(x), cos_{r,s}(x))`` for scalar or array ``x``.

    ``tol`` bounds ``|F(y) - x|`` for the quarter-period inversion.
    """
    gp = _as_params(params)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if not np.all(np.isfinite(xa)):
        raise DomainError("generalized sine needs finite arguments")
    sign = np.where(xa < 0, -1.0, 1.0)
    ax = np.abs(xa)
    quarter = gp.period_quarter
    k = np.floor(ax / quarter)
    rem = ax - k * quarter
    # rounding can push rem just outside [0, quarter)
    over = rem >= quarter
    k = np.where(over, k + 1, k)
    rem = np.clip(np.where(over, rem - quarter, rem), 0.0, quarter)
    quad = np.mod(k, 4.0).astype(int)
    odd = (quad % 2) == 1
    a = np.where(odd, quarter - rem, rem)
    d = np.where(odd, rem, quarter - rem)
    s_q, c_q = _quarter_values(gp, a, d, tol)
    s_sign = np.where(quad >= 2, -1.0, 1.0)
    c_sign = np.where((quad == 1) | (quad == 2), -1.0, 1.0)
    sin = sign * s_sign * s_q
    cos = c_sign * c_q
    if scalar:
        return float(sin[0]), float(cos[0])
    return sin.reshape(np.shape(x)), cos.reshape(np.shape(x))


def sin_rs(params, x, *, tol: float = 1e-15):
    """Generalized sine ``sin_{r,s}(x)``; odd and ``2 pi_{r,s}``-periodic."""
    return sincos_rs(params, x, tol=tol)[0]


def cos_rs(params, x, *, tol: float = 1e-15):
    """Generalized cosine ``cos_{r,s}(x) = d/dx sin_{r,s}(x)``.

    On the first quarter period this is ``(1 - sin_{r,s}(x)^s)^(1/r)`` and
    everywhere ``|sin|^s + |cos|^r = 1``.
    """
    return sincos_rs(params, x, tol=tol)[1]


def arcsin_rs(params, y):
    """``F_{r,s}(y) = int_0^y (1 - t^s)^(-1/r) dt`` for ``0 <= y <= 1``.

    Equal to ``(1/s) B_{y^s}(1/s, 1/r')``; near ``y = 1`` it is evaluated as
    the quarter period minus the complementary incomplete Beta integral.
    """
    gp = _as_params(params)
    ya = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(ya)) or np.any(ya < 0.0) or np.any(ya > 1.0):
        raise DomainError("arcsin_rs requires 0 <= y <= 1")
    ys = ya ** gp.s
    a, b = 1.0 / gp.s, 1.0 / gp.r_conj
    bab = special.beta(a, b)
    lower = special.betainc(a, b, ys) * bab / gp.s
    upper = gp.period_quarter - special.betainc(b, a, 1.0 - ys) * bab / gp.s
    out = np.where(ys <= 0.5, lower, upper)
    return float(out) if out.ndim == 0 else out


def check_sum_formula(r: float, s: float, t) -> float:
    """Residual of ``cos_{r,s}(pi_{r,s} t/2)^r = sin_{s',r'}(pi_{s',r'}(1-t)/2)^{r'}``.

    ``t`` must lie in ``[0, 1]``; returns ``lhs - rhs``.
    """
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0) or np.any(ta > 1):
        raise DomainError("check_sum_formula requires 0 <= t <= 1")
    gp = GenTrigParams(r, s)
    dual = gp.dual()
    lhs = cos_rs(gp, gp.period_quarter * ta) ** gp.r
    rhs = sin_rs(dual, dual.period_quarter * (1.0 - ta)) ** gp.r_conj
    out = np.asarray(lhs - rhs)
    return float(out) if out.ndim == 0 else out
