"""Self-check suites run by ``pqbiharmonic verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sp_integrate

from . import gentrig
from .dynamics import ProblemParams, compare_trajectories, detect_blowup, integrate
from .shooting import (
    extend_periodic,
    mismatch,
    nth_eigenfunction,
    rescale,
    solve_eigenproblem,
    solve_first,
)
from .spectral import (
    closed_form_norm_qpprime,
    embedding_norm,
    first_order_norm,
    mean_zero_norm,
)

__all__ = ["Check", "SUITES", "run_suite", "scalar_blowup_time"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tol": self.tol,
                "status": "pass" if self.passed else "fail"}


def _le(name: str, value: float, tol: float) -> Check:
    value = float(value)
    return Check(name, value, tol, bool(value <= tol))


def scalar_blowup_time() -> float:
    """Blow-up time of ``u'' = u^2``, ``u(0) = 0``, ``u'(0) = 1``.

    Energy gives ``u' = sqrt(1 + 2 u^3 / 3)``, so the time is
    ``int_0^inf du / sqrt(1 + 2 u^3 / 3)``.
    """
    f = lambda u: 1.0 / math.sqrt(1.0 + 2.0 * u ** 3 / 3.0)
    a, _ = sp_integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-13)
    b, _ = sp_integrate.quad(f, 1.0, math.inf, epsabs=0.0, epsrel=1e-13)
    return a + b


def _identities():
    out = []
    for r, s in [(2.0, 2.0), (2.0, 3.0), (3.0, 1.5), (1.5, 4.0)]:
        gp = gentrig.GenTrigParams(r, s)
        x = np.linspace(-2 * gp.period, 2 * gp.period, 2001)
        sn, cs = gentrig.sincos_rs(gp, x)
        out.append(_le(f"pythagoras r={r} s={s}", np.max(np.abs(np.abs(sn) ** s + np.abs(cs) ** r - 1)), 1e-13))
        t = np.linspace(0.0, 1.0, 101)
        out.append(_le(f"sum formula r={r} s={s}", np.max(np.abs(gentrig.check_sum_formula(r, s, t))), 1e-12))
        dual = gp.dual()
        out.append(_le(f"dual half-period r={r} s={s}",
                       abs(s * gentrig.pi_rs(gp) - gp.r_conj * gentrig.pi_rs(dual)), 1e-13))
    x = np.linspace(-7.0, 7.0, 1001)
    out.append(_le("r=s=2 is the circular sine", np.max(np.abs(gentrig.sin_rs((2, 2), x) - np.sin(x))), 1e-13))
    return out


def _symmetry():
    out = []
    for p, q in [(1.5, 3.0), (2.5, 1.5), (2.2, 1.7)]:
        eig = solve_eigenproblem(p, q, 1.0)
        inv = eig.invariants()
        out.append(_le(f"symmetry p={p} q={q}", inv["symmetry"], 1e-8))
        out.append(_le(f"boundary p={p} q={q}", inv["boundary"], 1e-9))
        out.append(_le(f"junction slope p={p} q={q}", extend_periodic(eig).junction_mismatch(), 1e-8))
        e3 = nth_eigenfunction(eig, 3, 1.0)
        inv3 = e3.invariants()
        out.append(_le(f"n=3 zeros p={p} q={q}", inv3["zero_location"], 1e-8))
    return out


def _rescaling():
    out = []
    rng = np.random.default_rng(7)
    base = solve_first(2.2, 1.7)
    for a, b in rng.uniform(0.5, 2.0, size=(4, 2)):
        sol = rescale(base, a, b)
        tr = integrate(sol.params, sol.init, sol.t1, rtol=1e-12, atol=1e-14)
        ts = np.linspace(0.0, sol.t1, 257)
        err = np.max(np.abs(tr(ts)[:, 0] - sol(ts)[:, 0]))
        out.append(_le(f"rescaled a={a:.3f} b={b:.3f}", err, 1e-9))
    return out


def _closed_form():
    out = []
    for p in (1.25, 1.5, 3.0):
        pc = gentrig.conj(p)
        gp = gentrig.GenTrigParams(2.0, pc)
        pi = gentrig.pi_rs(gp)
        eig = solve_eigenproblem(p, pc, pi, (pc / 2) ** p)
        ts = np.linspace(0.0, pi, 4097)
        out.append(_le(f"shooting vs sin_(2,p') p={p}",
                       np.max(np.abs(eig.u(ts) - gentrig.sin_rs(gp, ts))), 1e-6))
        cf = closed_form_norm_qpprime(p)
        out.append(_le(f"embedding norm p={p}", abs(embedding_norm(p, pc, pi) / cf - 1), 1e-6))
        n1n2 = first_order_norm(2.0, pc, pi) * mean_zero_norm(p, pi)
        out.append(_le(f"N1 N2 p={p}", abs(n1n2 / cf - 1), 1e-9))
    return out


def _monotonicity():
    out = []
    for p, q in [(1.5, 3.0), (2.5, 1.5), (3.2, 2.1)]:
        params = ProblemParams(p, q)
        worst = -math.inf
        for beta in (0.3, 0.8, 1.0, 1.5, 4.0):
            g1 = mismatch(params, 1.0, beta, strict=False)
            g2 = mismatch(params, 1.0, 1.01 * beta, strict=False)
            if math.isfinite(g1) and math.isfinite(g2):
                worst = max(worst, g2 - g1)
            elif g2 == g1 or g2 < g1:
                worst = max(worst, 0.0)
            else:
                worst = math.inf
        out.append(_le(f"mismatch nonincreasing p={p} q={q}", max(worst, 0.0), 0.0))
        t1 = solve_first(p, q).t1
        rep = compare_trajectories(params, 1.0, 1.0, 0.9, 1.2, t1)
        out.append(_le(f"comparison p={p} q={q}", -rep.min_margin, 1e-9))
    return out


def _appendix():
    oracle = scalar_blowup_time()
    out = []
    for p in (4.0 / 3.0, 1.5):
        rep = detect_blowup(ProblemParams(p, 3.0), (0.0, 1.0, 0.0, -1.0))
        err = abs(rep.t_inf - oracle) if rep.t_inf is not None else math.inf
        out.append(_le(f"blow-up time p={p:.4f} q=3 vs scalar oracle", err, 1e-4))
    rep = detect_blowup(ProblemParams(2.5, 1.5), (1.5, 0.5, -1.5, -0.5), horizon=50.0)
    out.append(Check("no blow-up p=2.5 q=1.5 cone data", float(rep.t_end or 0.0), 50.0,
                     rep.status == "none-up-to-horizon"))
    return out


SUITES = {
    "identities": _identities,
    "symmetry": _symmetry,
    "rescaling": _rescaling,
    "closed-form": _closed_form,
    "monotonicity": _monotonicity,
    "appendix": _appendix,
}


def run_suite(name: str) -> list[Check]:
    try:
        suite = SUITES[name]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return suite()
