import json
import math

import numpy as np
import pytest
from scipy import integrate

from pqbiharmonic import gentrig
from pqbiharmonic.dynamics import ProblemParams, spow
from pqbiharmonic.dynamics import integrate as integrate_system
from pqbiharmonic.errors import DomainError, NoZeroFound
from pqbiharmonic.shooting import (
    Eigenfunction,
    extend_periodic,
    mismatch,
    nth_eigenfunction,
    rescale,
    solve_eigenproblem,
    solve_first,
)

from oracles import PI_23, reference_solution, sup

GRID = np.linspace(0.0, 1.0, 4097)


# -- mismatch ------------------------------------------------------------------

def test_mismatch_vanishes_in_linear_case():
    assert abs(mismatch(ProblemParams(2, 2), 1.0, 1.0)) <= 1e-12


def test_mismatch_signs_oppose_in_linear_case():
    params = ProblemParams(2, 2)
    lo = mismatch(params, 1.0, 0.5, strict=False)
    hi = mismatch(params, 1.0, 2.0, strict=False)
    assert lo > 0 > hi


def test_mismatch_reports_missing_zero():
    # u = 1.5 sin t - 0.5 sinh t, w1 = 1.5 sin t + 0.5 sinh t never returns to 0
    with pytest.raises(NoZeroFound, match="w1"):
        mismatch(ProblemParams(2, 2), 1.0, 2.0)


def test_mismatch_changes_sign_on_scan_range():
    params = ProblemParams(1.5, 3.0)
    assert mismatch(params, 1.0, 1e-3, strict=False) > 0
    assert mismatch(params, 1.0, 1e3, strict=False) < 0


def test_mismatch_rejects_nonpositive_data():
    with pytest.raises(DomainError):
        mismatch(ProblemParams(2, 2), 0.0, 1.0)


# -- solve_first -----------------------------------------------------------------

def test_solve_first_linear():
    res = solve_first(2, 2)
    assert res.beta == pytest.approx(1.0, abs=1e-9)
    assert res.t1 == pytest.approx(math.pi, abs=1e-9)
    assert res.alpha == 1.0


def test_solve_first_on_closed_form_line():
    lam = 1.5 ** 1.5
    res = solve_first(1.5, 3.0, lam)
    assert res.t1 == pytest.approx(PI_23, abs=1e-7)
    ts = np.linspace(0, res.t1, 1025)
    # alpha = 1 matches the slope of sin_{2,3} at the origin
    assert sup(res.trajectory(ts)[:, 0] - gentrig.sin_rs((2, 3), ts)) < 1e-7


@pytest.mark.parametrize("p,q", [(2.5, 1.5), (2.2, 1.7), (1.3, 3.5), (3.8, 1.2)])
def test_solve_first_invariants(p, q):
    res = solve_first(p, q)
    assert res.alpha > 0 and res.beta > 0
    assert res.residual <= 1e-9 * max(res.alpha, res.beta)
    assert abs(res.gap) <= 1e-12 * max(1.0, res.t1)
    ts = np.linspace(0, res.t1, 2001)[1:-1]
    ys = res.trajectory(ts)
    assert np.all(ys[:, 0] > 0) and np.all(ys[:, 2] > 0)
    assert res.trajectory.t_end == res.t1


@pytest.mark.parametrize("p,q", [(2.5, 1.5), (1.3, 3.5)])
def test_simultaneous_zero_with_independent_integrator(p, q):
    res = solve_first(p, q)
    ref = reference_solution(p, q, 1.0, (0, res.alpha, 0, res.beta), res.t1)
    end = ref.y[:, -1]
    assert abs(end[0]) < 1e-8 and abs(end[2]) < 1e-8


def test_solve_first_is_memoised():
    assert solve_first(2.5, 1.5) is solve_first(2.5, 1.5)


# -- rescale ---------------------------------------------------------------------

def test_rescale_identity():
    res = solve_first(2.2, 1.7)
    sol = rescale(res, 1.0, 1.0)
    ts = np.linspace(0, res.t1, 101)
    np.testing.assert_array_equal(sol(ts), res.trajectory(ts))
    assert sol.lam == res.params.lam


def test_rescale_homogeneous_case_ignores_amplitude():
    res = solve_first(2, 2)
    assert rescale(res, 3.0, 1.5).lam == pytest.approx(1.5 ** 4, rel=1e-15)
    assert rescale(res, 0.2, 1.5).lam == pytest.approx(1.5 ** 4, rel=1e-15)


@pytest.mark.parametrize("a,b", [(0.7, 1.3), (1.8, 0.6)])
def test_rescale_reintegration(a, b):
    res = solve_first(2.2, 1.7)
    sol = rescale(res, a, b)
    assert sol.init == pytest.approx((0.0, a * b, 0.0, a ** 1.2 * b ** 3.4 * res.beta), rel=1e-14)
    tr = integrate_system(sol.params, sol.init, sol.t1, rtol=1e-12, atol=1e-14)
    ts = np.linspace(0, sol.t1, 513)
    assert sup(tr(ts)[:, 0] - a * res.trajectory(b * ts)[:, 0]) < 1e-9


def test_rescale_rejects_nonpositive():
    with pytest.raises(DomainError):
        rescale(solve_first(2, 2), -1.0, 1.0)


# -- eigenfunctions ----------------------------------------------------------------

def test_linear_beam():
    eig = solve_eigenproblem(2, 2, 1.0)
    assert eig.lam == pytest.approx(math.pi ** 4, rel=1e-6)
    # ||u''||_2 = 1 fixes the amplitude
    c = math.sqrt(2) / math.pi ** 2
    assert sup(eig.u(GRID) - c * np.sin(math.pi * GRID)) < 1e-8
    assert sup(eig.d2u(GRID) + c * math.pi ** 2 * np.sin(math.pi * GRID)) < 1e-7


def test_closed_form_eigenfunction():
    lam = 1.5 ** 1.5
    eig = solve_eigenproblem(1.5, 3.0, PI_23, lam)
    ts = np.linspace(0, PI_23, 4097)
    assert sup(eig.u(ts) - gentrig.sin_rs((2, 3), ts)) < 1e-6
    assert eig.lam == lam


def test_ratio_identity_with_independent_quadrature():
    p, q = 2.2, 1.7
    eig = solve_eigenproblem(p, q, 1.0, 1.0)
    assert eig.ratio() == pytest.approx(1.0, rel=1e-6)
    num, _ = integrate.quad(lambda t: abs(float(eig.d2u(t))) ** p, 0, 1, limit=400,
                            epsabs=0, epsrel=1e-11)
    den, _ = integrate.quad(lambda t: abs(float(eig.u(t))) ** q, 0, 1, limit=400,
                            epsabs=0, epsrel=1e-11)
    assert num / den == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("p,q,lam", [(2.2, 1.7, 1.0), (1.5, 3.0, 4.0), (3.0, 2.0, 0.5)])
def test_eigenfunction_invariants(p, q, lam):
    eig = solve_eigenproblem(p, q, 1.3, lam)
    inv = eig.invariants()
    assert inv["boundary"] <= 1e-9
    assert inv["zero_count"] == 0
    assert inv["symmetry"] <= 1e-8
    assert inv["ratio"] <= 1e-6
    assert eig.lam == pytest.approx(lam)


def test_uniqueness_across_gauges():
    a = solve_eigenproblem(2.5, 1.5, 1.0, 2.0)
    b = solve_eigenproblem(2.5, 1.5, 1.0, 2.0, alpha=0.01)
    assert sup(a.u(GRID) - b.u(GRID)) <= 1e-8
    c = solve_eigenproblem(2, 2, 1.0)
    d = solve_eigenproblem(2, 2, 1.0, alpha=5.0)
    assert sup(c.u(GRID) - d.u(GRID)) <= 1e-8


def test_spectral_normalization():
    eig = solve_eigenproblem(1.5, 3.0, 1.0, normalization="spectral")
    assert eig.norm(1.5, "d2u") == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        solve_eigenproblem(1.5, 3.0, 1.0, 2.0, normalization="spectral")
    with pytest.raises(DomainError):
        solve_eigenproblem(1.5, 3.0, 1.0, normalization="other")


def test_scaled_eigenvalue():
    eig = solve_eigenproblem(2.5, 1.5, 1.0, 1.0)
    big = eig.scaled(2.0)
    assert big.lam == pytest.approx(2.0 ** 1.0, rel=1e-14)
    assert big.ratio() == pytest.approx(big.lam, rel=1e-8)
    with pytest.raises(DomainError):
        eig.scaled(0.0)


def test_evaluation_domain():
    eig = solve_eigenproblem(2, 2, 1.0)
    with pytest.raises(DomainError):
        eig.u(1.5)
    assert eig.u(0.5) == pytest.approx(math.sqrt(2) / math.pi ** 2, rel=1e-10)


# -- periodic extension ------------------------------------------------------------

def test_periodic_extension():
    eig = solve_eigenproblem(1.5, 3.0, 1.0)
    ext = extend_periodic(eig)
    t = np.linspace(-3, 3, 1201)
    assert sup(ext(-t) + ext(t)) <= 1e-9
    np.testing.assert_allclose(ext(t + ext.period), ext(np.mod(t + ext.period, ext.period)), atol=1e-13)
    assert sup(ext(t + 2.0) - ext(t)) <= 1e-12
    assert ext.junction_mismatch() <= 1e-8
    s = np.linspace(0.01, 0.99, 99)
    assert sup(ext(1.0 + s) + ext(1.0 - s)) <= 1e-9


@pytest.mark.parametrize("p,q", [(1.5, 3.0), (2.2, 1.7)])
def test_extension_solves_equation_on_second_half(p, q):
    eig = solve_eigenproblem(p, q, 1.0)
    ext = extend_periodic(eig)
    t = np.linspace(1.02, 1.98, 97)
    h = 1e-4
    g = lambda s: spow(ext.d2u(s), p)
    rhs = eig.lam * spow(ext(t), q)
    res = (g(t + h) - 2 * g(t) + g(t - h)) / h ** 2 - rhs
    assert sup(res) / sup(rhs) <= 1e-6


def test_extension_needs_first_eigenfunction():
    eig = nth_eigenfunction(solve_eigenproblem(2, 2, 1.0), 2, 1.0)
    with pytest.raises(DomainError):
        extend_periodic(eig)


# -- chains --------------------------------------------------------------------------

def test_nth_identity():
    eig = solve_eigenproblem(1.5, 3.0, 1.0, normalization="spectral")
    same = nth_eigenfunction(eig, 1, 1.0)
    assert same.lam == pytest.approx(eig.lam, rel=1e-14)
    assert sup(same.u(GRID) - eig.u(GRID)) == 0.0


def test_nth_linear():
    eig = solve_eigenproblem(2, 2, 1.0)
    e3 = nth_eigenfunction(eig, 3, 1.0)
    assert e3.lam == pytest.approx(3 ** 4 * math.pi ** 4, rel=1e-6)
    np.testing.assert_allclose(e3.zeros(), [1 / 3, 2 / 3], atol=1e-8)


@pytest.mark.parametrize("p,q,n,t0", [(1.5, 3.0, 3, 2.0), (2.5, 1.5, 4, 0.7)])
def test_nth_preserves_normalization(p, q, n, t0):
    eig = solve_eigenproblem(p, q, 1.0, normalization="spectral")
    en = nth_eigenfunction(eig, n, t0)
    breaks = [j * t0 / n for j in range(1, n)]
    val, _ = integrate.quad(lambda t: abs(float(en.d2u(t))) ** p, 0, t0, points=breaks,
                            limit=400, epsabs=0, epsrel=1e-12)
    assert val ** (1 / p) == pytest.approx(1.0, abs=1e-7)
    lam1 = eig.lam
    assert en.lam == pytest.approx(n ** (2 * q) * t0 ** (q / p - 1 - 2 * q) * lam1, rel=1e-12)
    inv = en.invariants()
    assert inv["zero_count"] == n - 1 and inv["zero_location"] <= 1e-8
    assert inv["ratio"] <= 1e-6


@pytest.mark.parametrize("n", range(1, 7))
def test_interlacing_of_zeros(n):
    eig = nth_eigenfunction(solve_eigenproblem(2.5, 1.5, 1.0, normalization="spectral"), n, 1.0)
    assert eig.zeros("u").size == eig.zeros("d2u").size == n - 1


def test_nth_rejects_bad_index():
    eig = solve_eigenproblem(2, 2, 1.0)
    with pytest.raises(DomainError):
        nth_eigenfunction(eig, 0, 1.0)


# -- export ----------------------------------------------------------------------------

def test_export(tmp_path):
    eig = solve_eigenproblem(2.2, 1.7, 1.0)
    text = eig.to_csv(samples=9)
    assert text.splitlines()[0] == "t,u,du,d2u"
    path = tmp_path / "eig.csv"
    eig.to_csv(path, samples=33)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (33, 4)
    np.testing.assert_allclose(data[:, 1], eig.u(data[:, 0]), rtol=1e-15, atol=0)
    header = json.loads(eig.to_json())
    for key in ("p", "q", "lambda", "t0", "n", "alpha", "beta", "shooting_residual"):
        assert key in header
    assert isinstance(eig, Eigenfunction)
