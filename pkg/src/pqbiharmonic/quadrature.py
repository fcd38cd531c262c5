"""L^r norms of dense functions."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError

__all__ = ["lq_norm", "piecewise_power_integral"]


def lq_norm(f, t0: float, r: float, *, points=None, rtol: float = 1e-10) -> float:
    """``||f||_{r,[0,t0]}`` by adaptive Gauss-Kronrod quadrature.

    ``points`` are interior break points (zeros of ``f`` or kinks of
    ``|f|^r``) handed to the adaptive rule.

    Raises
    ------
    QuadratureError
        If the error estimate exceeds ``rtol`` relative to the integral.
    """
    if not r >= 1:
        raise DomainError(f"lq_norm needs r >= 1, got {r!r}")
    if not t0 > 0:
        raise DomainError("interval length must be positive")
    pts = None
    if points is not None:
        pts = sorted(float(x) for x in points if 0.0 < x < t0)
    integrand = lambda t: abs(float(f(t))) ** r
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(integrand, 0.0, t0, points=pts or None, limit=1000,
                                      epsabs=0.0, epsrel=min(rtol, 1e-10) / 10)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"adaptive quadrature failed: {exc}") from None
    if not (err <= rtol * abs(val) or val == 0.0 and err == 0.0):
        raise QuadratureError(f"quadrature error estimate {err:.3e} exceeds tolerance for "
                              f"integral {val:.6e}")
    return val ** (1.0 / r)


_GL = {m: np.polynomial.legendre.leggauss(m) for m in (8, 12)}


def piecewise_power_integral(func, knots, r: float, *, rtol: float = 1e-9) -> float:
    """``int |func(t)|^r dt`` over ``[knots[0], knots[-1]]``.

    A Gauss-Legendre rule is applied on every panel between consecutive
    knots, so ``func`` should be smooth inside each panel. The difference
    between the 8- and 12-point rules serves as error estimate.
    """
    knots = np.asarray(knots, dtype=float)
    a, b = knots[:-1], knots[1:]
    h = b - a
    keep = h > 0
    a, h = a[keep], h[keep]
    results = []
    for m in (8, 12):
        x, w = _GL[m]
        ts = a[:, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)
        vals = np.abs(func(ts.ravel())).reshape(ts.shape) ** r
        results.append(float(np.sum(0.5 * h[:, None] * w[None, :] * vals)))
    coarse, fine = results
    if not math.isfinite(fine):
        raise QuadratureError("non-finite integrand")
    if abs(fine - coarse) > rtol * abs(fine) and abs(fine - coarse) > 1e-300:
        raise QuadratureError(f"panel quadrature estimate {abs(fine - coarse):.3e} exceeds "
                              f"tolerance for integral {fine:.6e}")
    return fine
