"""Shooting for the positive first eigenfunction and the solutions built from it.

The initial data ``(0, alpha, 0, beta)`` with ``alpha, beta > 0`` is tuned
until ``u1`` and ``w1`` vanish for the first time at the same point ``t1``.
The scaling group ``u -> a u(b t)`` lets us fix ``alpha = 1`` and then move
the solution to any interval length and (for ``p != q``) any eigenvalue.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dynamics import (
    Event,
    ProblemParams,
    Trajectory,
    _write_csv,
    integrate,
    monotone_cone,
    spow,
)
from .errors import DomainError, NoZeroFound, ShootingError
from .quadrature import piecewise_power_integral

__all__ = [
    "Eigenfunction",
    "PeriodicExtension",
    "RescaledSolution",
    "ShootingResult",
    "extend_periodic",
    "mismatch",
    "nth_eigenfunction",
    "rescale",
    "solve_eigenproblem",
    "solve_first",
]

SHOOT_RTOL = 1e-12
SHOOT_ATOL = 1e-14
START_HORIZON = 10.0
MAX_DOUBLINGS = 5


def _shoot(params: ProblemParams, alpha: float, beta: float, rtol: float, atol: float):
    """First zeros ``(t_u, t_w, trajectory)``; a missing zero is ``inf``."""
    seen = {"u1": None, "w1": None}
    last = [0]

    def stop(t, y, events):
        for e in events[last[0]:]:
            if e.component in seen and seen[e.component] is None:
                seen[e.component] = e.time
        last[0] = len(events)
        if seen["u1"] is not None and seen["w1"] is not None:
            return True
        # inside a monotone cone neither u1 nor w1 can change sign again
        return monotone_cone(y) is not None

    horizon = START_HORIZON
    for _ in range(MAX_DOUBLINGS + 1):
        seen.update(u1=None, w1=None)
        last[0] = 0
        traj = integrate(params, (0.0, alpha, 0.0, beta), horizon, rtol=rtol, atol=atol,
                         threshold=1e12, stop=stop)
        t_u, t_w = traj.first_zero("u1"), traj.first_zero("w1")
        if (t_u is not None and t_w is not None) or traj.status != "horizon":
            break
        horizon *= 2
    return (math.inf if t_u is None else t_u, math.inf if t_w is None else t_w, traj)


def _gap(t_u: float, t_w: float) -> float:
    if math.isinf(t_u) and math.isinf(t_w):
        return math.nan
    if math.isinf(t_u):
        return math.inf
    if math.isinf(t_w):
        return -math.inf
    return t_u - t_w


def mismatch(params: ProblemParams, alpha: float, beta: float, *, strict: bool = True,
             rtol: float = SHOOT_RTOL, atol: float = SHOOT_ATOL) -> float:
    """``t_u - t_w`` for the trajectory started at ``(0, alpha, 0, beta)``.

    ``t_u`` and ``t_w`` are the first zeros of ``u1`` and ``w1``. The value
    is nonincreasing in ``beta``. With ``strict=False`` a missing zero of
    ``u1`` gives ``+inf`` and a missing zero of ``w1`` gives ``-inf``.

    Raises
    ------
    NoZeroFound
        (``strict`` only) one of the components keeps its sign up to
        blow-up, cone entry or the maximal horizon.
    """
    if not (alpha > 0 and beta > 0):
        raise DomainError("mismatch needs alpha > 0 and beta > 0")
    t_u, t_w, traj = _shoot(params, float(alpha), float(beta), rtol, atol)
    g = _gap(t_u, t_w)
    if strict and not math.isfinite(g):
        missing = [n for n, v in (("u1", t_u), ("w1", t_w)) if math.isinf(v)]
        raise NoZeroFound(f"no zero of {' and '.join(missing)} up to t={traj.t_end:.6g} "
                          f"(status {traj.status})")
    return g


# -- first eigenfunction -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class ShootingResult:
    """Initial data with a simultaneous first zero of ``u1`` and ``w1`` at ``t1``.

    ``trajectory`` covers ``[0, t1]``; ``gap`` is the final value of the
    mismatch.
    """

    params: ProblemParams
    alpha: float
    beta: float
    t1: float
    trajectory: Trajectory
    residual: float
    gap: float


def _truncate(traj: Trajectory, t1: float) -> Trajectory:
    k = int(np.searchsorted(traj.t, t1, side="left"))
    k = min(k, len(traj.t) - 1)
    events = tuple(e for e in traj.events if e.time <= t1)
    return Trajectory(traj.params, traj.t[:k + 1].copy(), traj.y[:k + 1].copy(),
                      traj.q[:k].copy(), events, traj.status, None, traj.rtol, traj.atol)


@functools.lru_cache(maxsize=64)
def _solve_first_cached(p, q, lam, alpha, rtol, atol, gtol):
    params = ProblemParams(p, q, lam)
    gfun = lambda beta: _gap(*_shoot(params, alpha, beta, rtol, atol)[:2])

    # geometric scan outwards from beta = 1, guided by the monotone ordering
    values = {0: gfun(1.0)}
    if values[0] == 0.0:
        lo = hi = 0
    else:
        step = 1 if values[0] > 0 else -1
        k = 0
        while True:
            k += step
            if abs(k) > 8:
                raise ShootingError(
                    f"mismatch keeps its sign for beta in [1e-8, 1e8] (p={p}, q={q}, lam={lam})")
            values[k] = gfun(10.0 ** k)
            if math.isnan(values[k]):
                raise ShootingError(f"neither u1 nor w1 vanishes at beta=1e{k}")
            if values[k] == 0.0 or (values[k] > 0) != (values[0] > 0):
                break
        lo, hi = sorted((k - step, k))
    if values[lo] == 0.0 or values[hi] == 0.0:
        beta = 10.0 ** (lo if values[lo] == 0.0 else hi)
    else:
        # bisect in log(beta) until both ends are finite, then Brent
        a, b = float(lo), float(hi)
        ga, gb = values[lo], values[hi]
        for _ in range(200):
            if math.isfinite(ga) and math.isfinite(gb):
                break
            m = 0.5 * (a + b)
            gm = gfun(10.0 ** m)
            if gm == 0.0:
                a = b = m
                ga = gb = 0.0
                break
            if gm > 0:
                a, ga = m, gm
            else:
                b, gb = m, gm
        if a == b:
            beta = 10.0 ** a
        else:
            beta = brentq(gfun, 10.0 ** a, 10.0 ** b, xtol=1e-300, rtol=1e-15, maxiter=200)

    t_u, t_w, traj = _shoot(params, alpha, beta, rtol, atol)
    g = _gap(t_u, t_w)
    if not math.isfinite(g):
        raise ShootingError(f"lost the simultaneous zero at beta={beta!r}")
    if abs(g) > max(gtol, 1e-9 * t_u):
        raise ShootingError(f"mismatch {g:.3e} above tolerance at beta={beta!r}")
    t1 = t_u
    traj = _truncate(traj, t1)
    end = traj(t1)
    residual = abs(end[0]) + abs(end[2])
    return ShootingResult(params.replace(t0=t1), alpha, beta, t1, traj, residual, g)


def solve_first(p: float, q: float, lam: float = 1.0, *, alpha: float = 1.0,
                rtol: float = SHOOT_RTOL, atol: float = SHOOT_ATOL,
                gtol: float = 1e-12) -> ShootingResult:
    """Shoot for ``beta`` such that ``u1`` and ``w1`` share their first zero.

    ``alpha`` fixes the gauge; any other value is reached by rescaling.
    ``beta`` is bracketed on the grid ``10^k`` (``|k| <= 8``) and refined
    until ``|t_u - t_w| <= gtol`` or the bracket collapses.

    Raises
    ------
    ShootingError
        No sign change of the mismatch on the scan grid.
    """
    params = ProblemParams(p, q, lam)
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    return _solve_first_cached(params.p, params.q, params.lam, float(alpha),
                               float(rtol), float(atol), float(gtol))


# -- rescaling ---------------------------------------------------------------

def _state_factors(p: float, a: float, b: float) -> np.ndarray:
    return np.array([a, a * b, a ** (p - 1) * b ** (2 * p - 2), a ** (p - 1) * b ** (2 * p - 1)])


@dataclass(frozen=True, eq=False)
class RescaledSolution:
    """``a * u(b t)`` on ``[0, t1 / b]`` for a shooting trajectory ``u``."""

    source: ShootingResult
    a: float
    b: float

    @property
    def params(self) -> ProblemParams:
        src = self.source.params
        return src.replace(lam=src.lam * self.a ** (src.p - src.q) * self.b ** (2 * src.p),
                           t0=self.t1)

    @property
    def lam(self) -> float:
        return self.params.lam

    @property
    def t1(self) -> float:
        return self.source.t1 / self.b

    @property
    def init(self) -> tuple[float, float, float, float]:
        f = _state_factors(self.source.params.p, self.a, self.b)
        return tuple(float(v) for v in f * np.asarray(self.source.trajectory.y[0]))

    @property
    def alpha(self) -> float:
        return self.init[1]

    @property
    def beta(self) -> float:
        return self.init[3]

    def __call__(self, ts):
        """States ``(u1, u2, w1, w2)`` of the rescaled solution, shape ``(..., 4)``."""
        f = _state_factors(self.source.params.p, self.a, self.b)
        return self.source.trajectory(self.b * np.asarray(ts, dtype=float)) * f


def rescale(result: ShootingResult, a: float, b: float) -> RescaledSolution:
    """Apply ``u -> a u(b t)``; the eigenvalue becomes ``lam a^(p-q) b^(2p)``."""
    if not (a > 0 and b > 0):
        raise DomainError("rescale needs a > 0 and b > 0")
    return RescaledSolution(result, float(a), float(b))


# -- eigenfunctions ----------------------------------------------------------

def _reflect(base: ShootingResult, x):
    """Base states at ``x * t1`` after odd ``2 t1``-periodic extension of ``u1, w1``.

    ``x`` counts half periods; values within a few ulps of an integer are
    snapped so that zeros of the extension are hit exactly.
    """
    T = base.t1
    x = np.asarray(x, dtype=float)
    k = np.rint(x)
    x = np.where(np.abs(x - k) <= 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(x)), k, x)
    m = np.mod(x, 2.0)
    back = m > 1.0
    y = base.trajectory(np.where(back, 2.0 - m, m) * T)
    sign = np.where(back, -1.0, 1.0)
    # u1, w1 odd about t1; u2, w2 even
    return y * np.stack([sign, np.ones_like(sign), sign, np.ones_like(sign)], axis=-1)


@dataclass(frozen=True, eq=False)
class Eigenfunction:
    """``u(t) = amplitude * U(rate * t)`` on ``[0, t0]``.

    ``U`` is the odd, ``2 t1``-periodic extension of the shooting solution
    ``base``; ``rate * t0 = n * t1`` so ``u`` has ``n - 1`` interior zeros.
    ``params.lam`` is the eigenvalue.
    """

    params: ProblemParams
    n: int
    base: ShootingResult
    amplitude: float
    rate: float

    @property
    def lam(self) -> float:
        return self.params.lam

    @property
    def t0(self) -> float:
        return self.params.t0

    @property
    def alpha(self) -> float:
        """``u'(0)``."""
        return self.amplitude * self.rate * self.base.alpha

    @property
    def beta(self) -> float:
        """Initial ``w2(0)`` in the rescaled system."""
        p = self.params.p
        return self.amplitude ** (p - 1) * self.rate ** (2 * p - 1) * self.base.beta

    def _states(self, ts):
        f = _state_factors(self.params.p, self.amplitude, self.rate)
        return _reflect(self.base, np.asarray(ts, dtype=float) * (self.n / self.t0)) * f

    def _check(self, ts):
        ta = np.asarray(ts, dtype=float)
        if ta.size and (ta.min() < -1e-12 * self.t0 or ta.max() > self.t0 * (1 + 1e-12)):
            raise DomainError("evaluation outside [0, t0]; use extend_periodic for all reals")
        return ta

    def state(self, ts):
        """``(u, u', w1, w2)`` at ``ts``, shape ``(..., 4)``, ``w1 = -spow(u'', p)``."""
        return self._states(self._check(ts))

    def u(self, ts):
        return self.state(ts)[..., 0]

    def du(self, ts):
        return self.state(ts)[..., 1]

    def d2u(self, ts):
        return -spow(self.state(ts)[..., 2], self.params.p_conj)

    __call__ = u

    def _base_integral(self, index: int, r: float) -> float:
        traj = self.base.trajectory
        return piecewise_power_integral(lambda s: traj(s)[..., index], traj.t, r)

    def norm(self, r: float, which: str = "u") -> float:
        """``||u||_r`` or (``which="d2u"``) ``||u''||_r`` over ``[0, t0]``."""
        if which == "u":
            c = self.amplitude
            integral = self._base_integral(0, r)
        elif which == "d2u":
            # |u''|^r = (a b^2)^r |w1|^(r (p' - 1)) at the rescaled time
            c = self.amplitude * self.rate ** 2
            integral = self._base_integral(2, r * (self.params.p_conj - 1.0))
        else:
            raise DomainError(f"unknown function {which!r}")
        return c * (self.n * integral / self.rate) ** (1.0 / r)

    def ratio(self) -> float:
        """``||u''||_p^p / ||u||_q^q``, which equals the eigenvalue."""
        p, q = self.params.p, self.params.q
        return self.norm(p, "d2u") ** p / self.norm(q, "u") ** q

    def scaled(self, c: float) -> "Eigenfunction":
        """``c * u``, an eigenfunction for ``lam * c^(p-q)``."""
        if not c > 0:
            raise DomainError("scale factor must be positive")
        p, q = self.params.p, self.params.q
        return Eigenfunction(self.params.replace(lam=self.lam * c ** (p - q)), self.n, self.base,
                             self.amplitude * c, self.rate)

    def zeros(self, which: str = "u", grid: int = 4097) -> np.ndarray:
        """Interior sign changes of ``u`` or ``u''``, refined by Brent's method."""
        func = {"u": self.u, "d2u": self.d2u}.get(which)
        if func is None:
            raise DomainError(f"unknown function {which!r}")
        ts = np.linspace(0.0, self.t0, grid)
        # one-sided nudges keep the boundary zeros out of the scan
        ts[0], ts[-1] = 1e-9 * self.t0, self.t0 * (1 - 1e-9)
        vals = func(ts)
        out = []
        for k in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
            out.append(brentq(lambda t: float(func(t)), ts[k], ts[k + 1], xtol=1e-15, rtol=1e-15))
        # zeros landing exactly on grid points
        for k in np.flatnonzero(vals[1:-1] == 0.0) + 1:
            if vals[k - 1] * vals[k + 1] < 0:
                out.append(float(ts[k]))
        return np.sort(np.array(out))

    def invariants(self, grid: int = 4097) -> dict:
        """Residuals of the boundary, zero-location and symmetry properties."""
        t0 = self.t0
        ends = self.state(np.array([0.0, t0]))
        d2 = -spow(ends[:, 2], self.params.p_conj)
        zs = self.zeros("u", grid)
        expected = np.arange(1, self.n) * t0 / self.n
        ts = np.linspace(0.0, t0, grid)
        uu = self.u(ts)
        out = {
            "boundary": float(max(abs(ends[0, 0]), abs(ends[1, 0]), abs(d2[0]), abs(d2[1]))),
            "zero_count": int(zs.size),
            "zero_location": float(np.max(np.abs(zs - expected))) if zs.size == expected.size
            and zs.size else (0.0 if zs.size == expected.size else math.inf),
            "ratio": abs(self.ratio() / self.lam - 1.0),
        }
        if self.n == 1:
            out["symmetry"] = float(np.max(np.abs(uu - uu[::-1])) / np.max(np.abs(uu)))
        return out

    def header(self) -> dict:
        return {
            "p": self.params.p,
            "q": self.params.q,
            "lambda": self.lam,
            "t0": self.t0,
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "shooting_residual": self.base.residual,
            "shooting_gap": self.base.gap,
        }

    def to_csv(self, target=None, samples: int = 4097) -> str | None:
        """Write ``t,u,du,d2u`` on a uniform grid; return the text if no target."""
        ts = np.linspace(0.0, self.t0, samples)
        st = self.state(ts)
        d2 = -spow(st[:, 2], self.params.p_conj)
        rows = [[t, a, b, c] for t, a, b, c in zip(ts, st[:, 0], st[:, 1], d2)]
        return _write_csv(target, ["t", "u", "du", "d2u"], rows)

    def to_json(self, samples: int = 0) -> str:
        data = dict(self.header())
        if samples:
            ts = np.linspace(0.0, self.t0, samples)
            data["t"] = ts.tolist()
            data["u"] = self.u(ts).tolist()
        return json.dumps(data, indent=2)


def solve_eigenproblem(p: float, q: float, t0: float = 1.0, lam: float | None = None, *,
                       normalization: str | None = None, alpha: float = 1.0,
                       rtol: float = SHOOT_RTOL, atol: float = SHOOT_ATOL) -> Eigenfunction:
    """Positive first eigenfunction on ``[0, t0]``.

    For ``p != q`` the amplitude is chosen so that the eigenvalue is ``lam``
    (default 1), or, with ``normalization="spectral"``, so that
    ``||u''||_p = 1``. For ``p == q`` the problem is homogeneous: the
    eigenvalue is fixed by ``t0``, ``lam`` is ignored and the amplitude is
    always the spectral one. ``alpha`` is the slope used while shooting;
    the result does not depend on it.
    """
    params = ProblemParams(p, q, 1.0, t0)
    if normalization not in (None, "spectral"):
        raise DomainError(f"unknown normalization {normalization!r}")
    if lam is not None and normalization is not None:
        raise DomainError("give either lam or normalization, not both")
    base = solve_first(params.p, params.q, 1.0, alpha=alpha, rtol=rtol, atol=atol)
    b = base.t1 / params.t0
    eig = Eigenfunction(params.replace(lam=b ** (2 * params.p)), 1, base, 1.0, b)
    if normalization == "spectral" or params.p == params.q:
        return eig.scaled(1.0 / eig.norm(params.p, "d2u"))
    target = 1.0 if lam is None else float(lam)
    if not (math.isfinite(target) and target > 0):
        raise DomainError("target eigenvalue must be positive")
    # lam_target = b^(2p) a^(p-q)
    a = (target / eig.lam) ** (1.0 / (params.p - params.q))
    eig = eig.scaled(a)
    return Eigenfunction(eig.params.replace(lam=target), 1, base, eig.amplitude, b)


def nth_eigenfunction(eig1: Eigenfunction, n: int, t0: float = 1.0) -> Eigenfunction:
    """``(t0^(2 - 1/p) / n^2) f(n t / t0)`` with ``f`` the odd periodic extension of ``eig1``.

    For a spectrally normalised ``eig1`` on ``[0, 1]`` this is the ``n``-th
    member of the spectral chain on ``[0, t0]``. An ``eig1`` on ``[0, T]``
    is first mapped to ``[0, 1]``.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if eig1.n != 1:
        raise DomainError("nth_eigenfunction expects a first eigenfunction")
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    p, q = eig1.params.p, eig1.params.q
    # u(t) = A f(c t) keeps ||u''||_p and packs n half-periods into [0, t0]
    A = (t0 / eig1.t0) ** (2.0 - 1.0 / p) / n ** 2
    c = n * eig1.t0 / t0
    lam = eig1.lam * A ** (p - q) * c ** (2 * p)
    return Eigenfunction(eig1.params.replace(lam=lam, t0=t0), int(n), eig1.base,
                         eig1.amplitude * A, eig1.rate * c)


@dataclass(frozen=True, eq=False)
class PeriodicExtension:
    """Odd ``2 t0``-periodic extension of a first eigenfunction to all of R."""

    eig: Eigenfunction

    @property
    def period(self) -> float:
        return 2.0 * self.eig.t0

    def state(self, ts):
        return self.eig._states(ts)

    def __call__(self, ts):
        return self.state(ts)[..., 0]

    def du(self, ts):
        return self.state(ts)[..., 1]

    def d2u(self, ts):
        return -spow(self.state(ts)[..., 2], self.eig.params.p_conj)

    def junction_mismatch(self) -> float:
        """``|u'(t0) + u'(0)|``; vanishes for a solution symmetric about ``t0/2``."""
        d = self.eig.state(np.array([0.0, self.eig.t0]))[:, 1]
        return float(abs(d[0] + d[1]))


def extend_periodic(eig: Eigenfunction) -> PeriodicExtension:
    if eig.n != 1:
        raise DomainError("extend_periodic expects a first eigenfunction")
    return PeriodicExtension(eig)
