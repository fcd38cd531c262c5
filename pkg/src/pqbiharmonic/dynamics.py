"""The first-order system behind the pq-biharmonic equation.

With ``u1 = u``, ``u2 = u'``, ``w1 = -spow(u'', p)`` and ``w2 = w1'`` the
equation ``(spow(u'', p))'' = lam * spow(u, q)`` becomes

    u1' = u2,   u2' = -spow(w1, p'),   w1' = w2,   w2' = -lam * spow(u1, q).

This module integrates that system with an embedded Dormand-Prince 5(4)
pair, records sign changes of every component, and detects finite-time
blow-up.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, IntegrationError, StiffnessError

__all__ = [
    "COMPONENTS",
    "BlowupReport",
    "ComparisonReport",
    "Event",
    "ProblemParams",
    "StateVec",
    "Trajectory",
    "compare_trajectories",
    "detect_blowup",
    "integrate",
    "monotone_cone",
    "spow",
    "vector_field",
]

COMPONENTS = ("u1", "u2", "w1", "w2")


def spow(x, r: float):
    """Signed power ``|x|^(r-1) sgn(x)``.

    ``spow(spow(x, r), r')`` returns ``x`` when ``r'`` is the conjugate
    exponent of ``r``.
    """
    if isinstance(x, (float, int)):
        return math.copysign(abs(x) ** (r - 1.0), x) if x != 0 else 0.0
    xa = np.asarray(x, dtype=float)
    return np.sign(xa) * np.abs(xa) ** (r - 1.0)


@dataclass(frozen=True)
class ProblemParams:
    """Exponents ``p, q``, eigenvalue parameter ``lam`` and interval length ``t0``."""

    p: float
    q: float
    lam: float = 1.0
    t0: float = 1.0

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 1):
                raise DomainError(f"{name} must be a finite number > 1, got {v!r}")
        for name in ("lam", "t0"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a finite number > 0, got {v!r}")
        for name in ("p", "q", "lam", "t0"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    def replace(self, **changes) -> "ProblemParams":
        kw = {"p": self.p, "q": self.q, "lam": self.lam, "t0": self.t0}
        kw.update(changes)
        return ProblemParams(**kw)


class StateVec(NamedTuple):
    """State ``(u1, u2, w1, w2)``; ``u'' = -spow(w1, p')``."""

    u1: float
    u2: float
    w1: float
    w2: float


def vector_field(params: ProblemParams, state) -> StateVec:
    """Time derivative of ``state`` under the first-order system."""
    u1, u2, w1, w2 = (float(v) for v in state)
    return StateVec(u2, -spow(w1, params.p_conj), w2, -params.lam * spow(u1, params.q))


def _make_rhs(params: ProblemParams):
    pc1 = params.p_conj - 1.0
    q1 = params.q - 1.0
    lam = params.lam
    cs = math.copysign

    def rhs(y):
        u1, u2, w1, w2 = y
        return (u2, -cs(abs(w1) ** pc1, w1), w2, -lam * cs(abs(u1) ** q1, u1))

    return rhs


# -- Dormand-Prince 5(4) tableau with Shampine's quartic dense output --------

_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    -71 / 57600, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40,
)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_R = range(4)


def _dp_step(rhs, y, k1, h):
    k2 = rhs([y[i] + h * (_A21 * k1[i]) for i in _R])
    k3 = rhs([y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in _R])
    k4 = rhs([y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in _R])
    k5 = rhs([y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]) for i in _R])
    k6 = rhs([y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i]
                          + _A65 * k5[i]) for i in _R])
    yn = tuple(y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
               for i in _R)
    k7 = rhs(yn)
    err = [h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i]
                + _E7 * k7[i]) for i in _R]
    return yn, k7, (k1, k2, k3, k4, k5, k6, k7), err


def _err_norm(err, y, yn, rtol, atol):
    acc = 0.0
    for i in _R:
        sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
        acc += (err[i] / sc) ** 2
    return math.sqrt(acc / 4.0)


def _step_poly(ks):
    return np.asarray(ks, dtype=float).T @ _P


def _poly_value(y0, h, qrow, theta):
    th = theta
    return y0 + h * th * (qrow[0] + th * (qrow[1] + th * (qrow[2] + th * qrow[3])))


def _root_in_step(y0, h, qrow):
    f = lambda th: _poly_value(y0, h, qrow, th)
    f0, f1 = f(0.0), f(1.0)
    if f0 == 0.0:
        return 0.0
    if f0 * f1 > 0:
        # rounding at the right end; the crossing sits at the end of the step
        return 1.0
    return brentq(f, 0.0, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200)


@dataclass(frozen=True)
class Event:
    """A sign change of one component: ``direction`` is +1 (up) or -1 (down)."""

    component: str
    time: float
    direction: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Dense numerical solution of the first-order system.

    ``t`` holds the step nodes, ``y`` the states at the nodes and ``q`` the
    per-step coefficients of the quartic interpolant
    ``y(t_k + th h) = y_k + h * q_k @ [th, th^2, th^3, th^4]``.
    """

    params: ProblemParams
    t: np.ndarray
    y: np.ndarray
    q: np.ndarray
    events: tuple[Event, ...]
    status: str
    blowup_time: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        for arr in (self.t, self.y, self.q):
            arr.setflags(write=False)

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def init(self) -> StateVec:
        return StateVec(*map(float, self.y[0]))

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    def __call__(self, ts):
        """States at times ``ts`` (within ``[0, t_end]``), shape ``(..., 4)``."""
        ta = np.asarray(ts, dtype=float)
        flat = np.atleast_1d(ta).ravel()
        if flat.size and (flat.min() < self.t[0] - 1e-12 * max(1.0, self.t_end)
                          or flat.max() > self.t_end * (1 + 1e-12) + 1e-300):
            raise DomainError("evaluation time outside the computed trajectory")
        if self.n_steps == 0:
            out = np.repeat(self.y[:1], flat.size, axis=0)
        else:
            idx = np.clip(np.searchsorted(self.t, flat, side="right") - 1, 0, self.n_steps - 1)
            h = self.t[idx + 1] - self.t[idx]
            th = np.clip((flat - self.t[idx]) / h, 0.0, 1.0)
            powers = np.stack([th, th ** 2, th ** 3, th ** 4], axis=1)
            out = self.y[idx] + h[:, None] * np.einsum("nij,nj->ni", self.q[idx], powers)
            at_end = flat >= self.t_end
            out[at_end] = self.y[-1]
        return out.reshape(ta.shape + (4,))

    def component(self, name: str, ts):
        return self(ts)[..., COMPONENTS.index(name)]

    def event_times(self, component: str) -> np.ndarray:
        return np.array([e.time for e in self.events if e.component == component])

    def first_zero(self, component: str) -> float | None:
        for e in self.events:
            if e.component == component:
                return e.time
        return None

    def to_csv(self, target=None, samples: int = 1001) -> str | None:
        """Write ``t,u1,u2,w1,w2`` at ``samples`` uniform times; return text if no target."""
        ts = np.linspace(0.0, self.t_end, samples)
        ys = self(ts)
        rows = [[t, *row] for t, row in zip(ts, ys)]
        return _write_csv(target, ["t", *COMPONENTS], rows)

    def events_to_csv(self, target=None) -> str | None:
        rows = [[e.component, e.time, e.direction] for e in self.events]
        return _write_csv(target, ["component", "time", "direction"], rows)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.16e}"
    return str(v)


def _write_csv(target, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(float(v)) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    text = buf.getvalue()
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", newline="") as fh:
            fh.write(text)
    return None


def _initial_step(rhs, y, f, rtol, atol, horizon):
    sc = [atol + rtol * abs(v) for v in y]
    d0 = math.sqrt(sum((y[i] / sc[i]) ** 2 for i in _R) / 4)
    d1 = math.sqrt(sum((f[i] / sc[i]) ** 2 for i in _R) / 4)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, horizon)
    y1 = [y[i] + h0 * f[i] for i in _R]
    f1 = rhs(y1)
    d2 = math.sqrt(sum(((f1[i] - f[i]) / sc[i]) ** 2 for i in _R) / 4) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, horizon)


def integrate(
    params: ProblemParams,
    init,
    horizon: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    threshold: float = 1e8,
    stop: Callable[[float, tuple, list], bool] | None = None,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Integrate the system from ``init`` at ``t = 0`` up to ``horizon``.

    Steps whose end points straddle a zero of ``u1`` or ``w1`` are cut at the
    zero, which is located on the interpolant and then polished by a Newton
    iteration on the step length; the signed powers are not Lipschitz there.
    Sign changes of ``u2`` and ``w2`` are located on the interpolant.

    Integration stops early when ``|u1| + |u2| + |w1| + |w2|`` reaches
    ``threshold`` (``status == "blowup"``, crossing time in
    ``blowup_time``) or when ``stop(t, y, events)`` returns true
    (``status == "stopped"``).

    Raises
    ------
    StiffnessError
        The step size fell below ``1e-14 * horizon`` while the state stayed
        bounded.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon!r}")
    y = tuple(float(v) for v in init)
    if len(y) != 4 or not all(math.isfinite(v) for v in y):
        raise DomainError("initial state must be four finite numbers")
    empty_q = np.zeros((0, 4, 4))
    if all(v == 0.0 for v in y):
        return Trajectory(params, np.array([0.0]), np.array([y]), empty_q, (), "trivial",
                          rtol=rtol, atol=atol)

    rhs = _make_rhs(params)
    f = rhs(y)
    t = 0.0
    h = _initial_step(rhs, y, f, rtol, atol, horizon)
    hmin = 1e-14 * horizon
    norm0 = sum(abs(v) for v in y)

    ts = [0.0]
    ys = [y]
    ks = []
    events: list[Event] = []
    status = "horizon"
    blowup_time = None

    for _ in range(max_steps):
        if t >= horizon:
            break
        h = min(h, horizon - t)
        if h < hmin and horizon - t > hmin:
            norm = sum(abs(v) for v in y)
            if norm > 1e4 * max(norm0, 1.0):
                status, blowup_time = "blowup", t
                break
            raise StiffnessError(f"step size collapsed to {h:.3e} at t={t:.15g}")
        yn, fn, kk, err = _dp_step(rhs, y, f, h)
        en = _err_norm(err, y, yn, rtol, atol)
        if not math.isfinite(en) or not all(math.isfinite(v) for v in yn):
            h *= 0.2
            continue
        if en > 1.0:
            h *= max(0.2, 0.9 * en ** -0.2)
            continue
        fac = 10.0 if en == 0.0 else min(10.0, max(0.2, 0.9 * en ** -0.2))
        h_next = h * fac

        crossing = [i for i in (0, 2) if y[i] * yn[i] < 0.0]
        if crossing:
            qstep = _step_poly(kk)
            thetas = {i: _root_in_step(y[i], h, qstep[i]) for i in crossing}
            i = min(thetas, key=thetas.get)
            hs = thetas[i] * h
            if hs <= 4e-16 * max(1.0, t):
                # the zero sits on the current node
                y = tuple(0.0 if j == i else y[j] for j in _R)
                ys[-1] = y
                f = rhs(y)
                events.append(Event(COMPONENTS[i], t, 1 if y[i + 1] > 0 else -1))
                h = h_next
                continue
            for _ in range(6):
                ys_, fs_, ks_, _err = _dp_step(rhs, y, f, hs)
                v, dv = ys_[i], ys_[i + 1]
                if abs(v) <= 1e-16 * max(abs(ys_[i + 1]) * hs, 1e-300) or dv == 0.0:
                    break
                hs_new = hs - v / dv
                if not (0.0 < hs_new <= h):
                    break
                if hs_new == hs:
                    break
                hs = hs_new
            yn = [0.0 if j == i else ys_[j] for j in _R]
            events.append(Event(COMPONENTS[i], t + hs, 1 if yn[i + 1] > 0 else -1))
            for j in crossing:
                # the other component may vanish within rounding of the same point
                if j != i and y[j] * yn[j] <= 0.0:
                    yn[j] = 0.0
                    events.append(Event(COMPONENTS[j], t + min(thetas[j] * h, hs),
                                        1 if yn[j + 1] > 0 else -1))
            yn = tuple(yn)
            fn = rhs(yn)
            kk = ks_
            h = hs

        qstep = None
        for i in (1, 3):
            if y[i] * yn[i] < 0.0:
                if qstep is None:
                    qstep = _step_poly(kk)
                th = _root_in_step(y[i], h, qstep[i])
                events.append(Event(COMPONENTS[i], t + th * h, 1 if yn[i] > y[i] else -1))
        if crossing and len(events) >= 2 and events[-1].time < events[-2].time:
            events.sort(key=lambda e: e.time)

        t_prev, y_prev = t, y
        t = horizon if horizon - (t + h) <= 1e-15 * horizon else t + h
        y, f = yn, fn
        ts.append(t)
        ys.append(y)
        ks.append(kk)
        h = h_next

        norm = sum(abs(v) for v in y)
        if norm >= threshold:
            status = "blowup"
            if qstep is None:
                qstep = _step_poly(kk)
            hh = t - t_prev
            g = lambda th: sum(abs(_poly_value(y_prev[j], hh, qstep[j], th)) for j in _R) - threshold
            if g(0.0) < 0 < g(1.0):
                blowup_time = t_prev + hh * brentq(g, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
            else:
                blowup_time = t
            break
        if stop is not None and stop(t, y, events):
            status = "stopped"
            break
    else:
        raise IntegrationError(f"maximum number of steps ({max_steps}) exceeded at t={t:.6g}")

    k_arr = np.asarray(ks, dtype=float).reshape(len(ks), 7, 4)
    q = np.einsum("nkj,kp->njp", k_arr, _P) if ks else empty_q
    return Trajectory(
        params, np.asarray(ts), np.asarray(ys, dtype=float), q, tuple(events), status,
        blowup_time, rtol, atol,
    )


# -- blow-up -----------------------------------------------------------------

def monotone_cone(state) -> str | None:
    """Which invariant monotone cone ``state`` lies in, if any.

    ``"increasing"``: ``u1 >= 0, u2 > 0, w1 <= 0, w2 < 0`` (then the u's grow
    and the w's decrease for all later times); ``"decreasing"`` is the
    mirror image.
    """
    u1, u2, w1, w2 = state
    if u1 >= 0 and u2 > 0 and w1 <= 0 and w2 < 0:
        return "increasing"
    if u1 <= 0 and u2 < 0 and w1 >= 0 and w2 > 0:
        return "decreasing"
    return None


@dataclass(frozen=True)
class BlowupReport:
    """Outcome of :func:`detect_blowup`.

    ``status`` is ``"finite-detected"``, ``"none-up-to-horizon"`` or
    ``"trivial"``. ``crossings`` lists ``(threshold, time)`` pairs used for
    the extrapolated ``t_inf``; ``bracket`` is a heuristic uncertainty
    interval around it.
    """

    status: str
    t_inf: float | None = None
    bracket: tuple[float, float] | None = None
    crossings: tuple[tuple[float, float], ...] = ()
    cone: str | None = None
    cone_time: float | None = None
    t_end: float | None = None

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "t_inf_estimate": self.t_inf,
            "bracket": list(self.bracket) if self.bracket else None,
            "crossings": [list(c) for c in self.crossings],
            "cone": self.cone,
            "cone_time": self.cone_time,
            "t_end": self.t_end,
        }


def _cone_entry(traj: Trajectory):
    for t, y in zip(traj.t, traj.y):
        c = monotone_cone(y)
        if c is not None:
            return c, float(t)
    return None, None


def detect_blowup(
    params: ProblemParams,
    init,
    threshold: float = 1e8,
    horizon: float = 50.0,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> BlowupReport:
    """Look for a finite singular time of the trajectory started at ``init``.

    When ``threshold`` is reached, the crossing times ``t_k`` for thresholds
    ``M, 10 M, 100 M`` are fitted to ``t_k = t_inf - c M_k^(-gamma)``, which
    yields the extrapolated ``t_inf``.
    """
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    first = integrate(params, init, horizon, rtol=rtol, atol=atol, threshold=threshold)
    if first.status == "trivial":
        return BlowupReport("trivial", t_end=0.0)
    cone, cone_time = _cone_entry(first)
    if first.status != "blowup":
        return BlowupReport("none-up-to-horizon", cone=cone, cone_time=cone_time,
                            t_end=first.t_end)

    crossings = [(threshold, first.blowup_time)]
    for factor in (10.0, 100.0):
        tr = integrate(params, init, horizon, rtol=rtol, atol=atol, threshold=threshold * factor)
        if tr.status != "blowup":
            break
        crossings.append((threshold * factor, tr.blowup_time))
    times = [c[1] for c in crossings]
    if len(times) < 3:
        t_inf = times[-1]
        return BlowupReport("finite-detected", t_inf, (times[-1], math.inf), tuple(crossings),
                            cone, cone_time, times[-1])
    d1, d2 = times[1] - times[0], times[2] - times[1]
    if d1 > 0 and 0 < d2 < d1:
        rho = d2 / d1
        correction = d2 * rho / (1.0 - rho)
        t_inf = times[2] + correction
        bracket = (times[2], t_inf + correction)
    else:
        # oscillatory or irregular approach; fall back to the last crossing
        t_inf = times[2]
        bracket = (times[2], math.inf)
    return BlowupReport("finite-detected", t_inf, bracket, tuple(crossings), cone, cone_time,
                        times[2])


# -- comparison --------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    """Minimal margins of the orderings between two shooting trajectories.

    ``margins`` holds ``min_t`` of ``u_k^1 - u_k^2`` and ``w_k^2 - w_k^1``;
    ``rate_margins`` the minima of ``u_1^1 - u_1^2 - (a1 - a2) t`` and
    ``w_1^2 - w_1^1 - (b2 - b1) t``. ``violation`` names the first quantity
    and time where a margin drops below ``-tol``.
    """

    margins: dict
    rate_margins: dict
    violation: tuple[str, float] | None

    @property
    def ok(self) -> bool:
        return self.violation is None

    @property
    def min_margin(self) -> float:
        return min(min(self.margins.values()), min(self.rate_margins.values()))


def compare_trajectories(
    params: ProblemParams,
    alpha1: float,
    beta1: float,
    alpha2: float,
    beta2: float,
    t1: float,
    *,
    grid: int = 2001,
    tol: float = 1e-9,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> ComparisonReport:
    """Check the ordering of trajectories started at ``(0, a, 0, b)``.

    For ``alpha2 <= alpha1`` and ``beta1 <= beta2`` the u-components of the
    first trajectory dominate those of the second and the w-components are
    dominated, with the linear rate bounds on ``u1`` and ``w1``.
    """
    if not (alpha2 <= alpha1 and beta1 <= beta2):
        raise DomainError("compare_trajectories needs alpha2 <= alpha1 and beta1 <= beta2")
    if not t1 > 0:
        raise DomainError("t1 must be positive")
    tr1 = integrate(params, (0.0, alpha1, 0.0, beta1), t1, rtol=rtol, atol=atol)
    tr2 = integrate(params, (0.0, alpha2, 0.0, beta2), t1, rtol=rtol, atol=atol)
    for tr in (tr1, tr2):
        if tr.status == "blowup":
            raise DomainError("trajectory is not finite on [0, t1]")
    ts = np.linspace(0.0, t1, grid)[1:]
    y1, y2 = tr1(ts), tr2(ts)
    diffs = {
        "u1": y1[:, 0] - y2[:, 0],
        "u2": y1[:, 1] - y2[:, 1],
        "w1": y2[:, 2] - y1[:, 2],
        "w2": y2[:, 3] - y1[:, 3],
    }
    rates = {
        "u1": diffs["u1"] - (alpha1 - alpha2) * ts,
        "w1": diffs["w1"] - (beta2 - beta1) * ts,
    }
    margins = {k: float(v.min()) for k, v in diffs.items()}
    rate_margins = {k: float(v.min()) for k, v in rates.items()}
    violation = None
    for label, group in (("", diffs), ("rate:", rates)):
        for k, v in group.items():
            bad = np.flatnonzero(v < -tol)
            if bad.size and (violation is None or ts[bad[0]] < violation[1]):
                violation = (label + k, float(ts[bad[0]]))
    return ComparisonReport(margins, rate_margins, violation)

