"""Spectral couples, embedding norms and s-numbers of ``W^{2,p}_D -> L^q``.

A spectral couple is a first (or n-th) eigenfunction ``f`` normalised by
``||f''||_p = 1`` and ``f'(0) > 0`` together with its spectral number
``(||f''||_p / ||f||_q)^q``. Everything in this module is derived from the
first spectral number ``lam1(p, q)`` on ``[0, 1]``.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import gentrig
from .dynamics import _write_csv
from .errors import DomainError
from .gentrig import beta, conj
from .quadrature import lq_norm
from .shooting import Eigenfunction, nth_eigenfunction, solve_eigenproblem

__all__ = [
    "SNumberReport",
    "SpectralCouple",
    "check_lp_ratio",
    "closed_form_lambda",
    "closed_form_norm_qpprime",
    "embedding_norm",
    "first_couple",
    "first_order_norm",
    "first_spectral_number",
    "lp_ratio_extrema",
    "lq_norm",
    "mean_zero_norm",
    "normalize_spectral",
    "s_number_bounds",
    "s_numbers_to_csv",
    "s_numbers_to_json",
    "spectral_chain",
]


@dataclass(frozen=True, eq=False)
class SpectralCouple:
    """``(f, lam)`` with ``||f''||_p = 1``, ``f'(0) > 0`` and ``lam = 1 / ||f||_q^q``."""

    f: Eigenfunction
    lam: float
    n: int = 1

    @property
    def t0(self) -> float:
        return self.f.t0

    def residuals(self) -> dict:
        p, q = self.f.params.p, self.f.params.q
        d2 = self.f.norm(p, "d2u")
        return {
            "normalization": abs(d2 - 1.0),
            "ratio": abs(d2 ** p / self.f.norm(q, "u") ** q / self.lam - 1.0),
            "slope": self.f.alpha,
        }


def normalize_spectral(eig: Eigenfunction) -> SpectralCouple:
    """Scale ``eig`` to ``||f''||_p = 1`` and attach its spectral number."""
    p = eig.params.p
    d2 = eig.norm(p, "d2u")
    if not (d2 > 0 and eig.alpha != 0):
        raise DomainError("cannot normalise a vanishing eigenfunction")
    # our eigenfunctions start upwards, so sgn f'(0) = 1
    f = eig.scaled(1.0 / d2)
    # with ||f''||_p = 1 the eigenvalue equals (||f''||_p / ||f||_q)^q; take it
    # from the scaling law and leave the quadrature of ||f||_q as a check
    return SpectralCouple(f, f.lam, eig.n)


def spectral_chain(couple1: SpectralCouple, n: int, t0: float = 1.0) -> SpectralCouple:
    """The ``n``-th couple on ``[0, t0]`` built from the first couple on ``[0, 1]``.

    Its spectral number is ``n^(2q) t0^(q/p - 1 - 2q) lam1``.
    """
    if couple1.n != 1:
        raise DomainError("spectral_chain starts from the first couple")
    if not math.isclose(couple1.t0, 1.0, rel_tol=1e-12):
        raise DomainError("the first couple must live on [0, 1]")
    p, q = couple1.f.params.p, couple1.f.params.q
    f = nth_eigenfunction(couple1.f, n, t0)
    sn = n ** (2 * q) * t0 ** (q / p - 1.0 - 2 * q) * couple1.lam
    return SpectralCouple(f, sn, int(n))


@functools.lru_cache(maxsize=256)
def _first_couple(p: float, q: float) -> SpectralCouple:
    return normalize_spectral(solve_eigenproblem(p, q, 1.0))


def first_spectral_number(p: float, q: float) -> float:
    """``lam1`` on ``[0, 1]``; memoised per ``(p, q)``."""
    return _first_couple(float(p), float(q)).lam


def first_couple(p: float, q: float) -> SpectralCouple:
    return _first_couple(float(p), float(q))


def embedding_norm(p: float, q: float, t0: float = 1.0) -> float:
    """``||E2||`` of ``W^{2,p}_D(0, t0) -> L^q(0, t0)``: ``t0^(1/q - 1/p + 2) lam1^(-1/q)``."""
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    lam1 = first_spectral_number(p, q)
    return t0 ** (1.0 / q - 1.0 / p + 2.0) * lam1 ** (-1.0 / q)


# -- closed forms on the line q = p' ------------------------------------------

def closed_form_norm_qpprime(p: float) -> float:
    """``||E2||`` for ``q = p'`` on ``[0, pi_{2,p'}]``."""
    if not p > 1:
        raise DomainError("p must exceed 1")
    pc = conj(p)
    return (2.0 / pc) ** (2.0 / pc) * beta(0.5, (pc + 1.0) / pc) ** (1.0 / pc - 1.0 / p)


def closed_form_lambda(p: float, n: int = 1, c: float = 1.0, t0: float | None = None):
    """Eigenvalue and eigenfunction ``c sin_{2,p'}(pi_{2,p'} n x / t0)`` for ``q = p'``.

    Returns ``(lam, f)`` where ``f`` is a vectorised callable. ``t0``
    defaults to ``pi_{2,p'}``.
    """
    if not (p > 1 and c > 0 and n >= 1):
        raise DomainError("closed_form_lambda needs p > 1, c > 0, n >= 1")
    pc = conj(p)
    gp = gentrig.GenTrigParams(2.0, pc)
    pi = gentrig.pi_rs(gp)
    if t0 is None:
        t0 = pi
    lam = (pc * pi ** 2 * n ** 2 / (2.0 * t0 ** 2)) ** p * c ** (p - pc)
    return lam, lambda x: c * gentrig.sin_rs(gp, pi * n * np.asarray(x, dtype=float) / t0)


def first_order_norm(r: float, s: float, t0: float = 1.0) -> float:
    """``sup ||f||_s / ||f'||_r`` over ``W^{1,r}_0(0, t0)``."""
    if not (r > 1 and s > 1 and t0 > 0):
        raise DomainError("first_order_norm needs r, s > 1 and t0 > 0")
    rc = conj(r)
    return (t0 ** (1.0 / rc + 1.0 / s) * (rc + s) ** (1.0 / r - 1.0 / s) * rc ** (1.0 / s)
            * s ** (1.0 / rc) / (2.0 * beta(1.0 / s, 1.0 / rc)))


def mean_zero_norm(p: float, t0: float = 1.0) -> float:
    """``sup ||u||_2 / ||u'||_p`` over mean-zero ``u`` on ``(0, t0)``."""
    if not (p > 1 and t0 > 0):
        raise DomainError("mean_zero_norm needs p > 1 and t0 > 0")
    pc = conj(p)
    return (t0 ** (1.0 / pc + 0.5) * (pc + 2.0) ** (1.0 / p - 0.5) * math.sqrt(pc)
            / (2.0 ** (1.0 / p) * beta(0.5, 1.0 / pc)))


# -- discrete norm ratios --------------------------------------------------------

def lp_ratio_extrema(p: float, q: float, n: int) -> float:
    """Extremal value ``n^(1/q - 1/p)`` of ``|x|_q / |x|_p`` on ``R^n``.

    It is the infimum for ``p <= q`` and the supremum for ``q <= p``; equal
    magnitudes attain it.
    """
    if not n >= 1:
        raise DomainError("n must be a positive integer")
    return float(n) ** (1.0 / q - 1.0 / p)


def check_lp_ratio(p: float, q: float, n: int, samples: int = 1000, seed: int = 0) -> float:
    """Largest violation of the extremal bound over random vectors (0 if none)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, n)) * rng.lognormal(size=(samples, 1))
    ratio = (np.sum(np.abs(x) ** q, axis=1) ** (1 / q)) / (np.sum(np.abs(x) ** p, axis=1) ** (1 / p))
    bound = lp_ratio_extrema(p, q, n)
    viol = bound - ratio if p <= q else ratio - bound
    return float(max(0.0, viol.max()))


# -- s-numbers ---------------------------------------------------------------------

EQUALITY_NOTE = ("equality of the listed s-numbers with the common value is quoted from "
                 "the literature; it is not re-derived here")


@dataclass(frozen=True)
class SNumberReport:
    """Common value ``sn_n^(-1/q)`` of the s-numbers of ``E2`` on ``[0, t0]``.

    ``kind`` says which bound holds unconditionally: ``"isomorphism-lower"``
    (``i_n >= value``, ``p < q``) or ``"approximation-upper"``
    (``a_n <= value``, ``p >= q``). ``equalities`` names the s-numbers that
    coincide with ``value`` (``kind`` of the equality is
    ``"strict-equality"``).
    """

    p: float
    q: float
    t0: float
    n: int
    sn_n: float
    value: float
    kind: str
    equalities: tuple[str, ...]
    equality_kind: str = "strict-equality"
    note: str = EQUALITY_NOTE

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "sn_n": self.sn_n,
            "value": self.value,
            "kind": self.kind,
            "equalities": list(self.equalities),
            "equality_kind": self.equality_kind,
        }


def s_number_bounds(p: float, q: float, t0: float = 1.0, n_max: int = 5) -> list[SNumberReport]:
    """Reports for ``n = 1 .. n_max``."""
    if not (isinstance(n_max, (int, np.integer)) and n_max >= 1):
        raise DomainError("n_max must be a positive integer")
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    lam1 = first_spectral_number(p, q)
    kind = "isomorphism-lower" if p < q else "approximation-upper"
    equalities = []
    if p <= q:
        equalities += ["i_n", "b_n"]
    if q <= p:
        equalities += ["a_n", "d_n"]
    out = []
    for n in range(1, n_max + 1):
        sn = n ** (2 * q) * t0 ** (q / p - 1.0 - 2 * q) * lam1
        value = t0 ** (1.0 / q + 2.0 - 1.0 / p) / (n ** 2 * lam1 ** (1.0 / q))
        out.append(SNumberReport(float(p), float(q), float(t0), n, sn, value, kind,
                                 tuple(equalities)))
    return out


def s_numbers_to_csv(reports, target=None) -> str | None:
    rows = [[r.n, r.sn_n, r.value, r.kind] for r in reports]
    return _write_csv(target, ["n", "sn_n", "value", "kind"], rows)


def s_numbers_to_json(reports) -> str:
    """JSON table with the first couple's provenance."""
    if not reports:
        raise DomainError("no reports")
    r0 = reports[0]
    couple = first_couple(r0.p, r0.q)
    base = couple.f.base
    data = {
        "p": r0.p,
        "q": r0.q,
        "t0": r0.t0,
        "lambda1": couple.lam,
        "shooting": {"alpha": base.alpha, "beta": base.beta, "t1": base.t1,
                     "residual": base.residual, "gap": base.gap},
        "note": r0.note,
        "rows": [r.as_dict() for r in reports],
    }
    return json.dumps(data, indent=2)
