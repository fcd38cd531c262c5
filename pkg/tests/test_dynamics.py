import math

import numpy as np
import pytest

from pqbiharmonic.dynamics import (
    ProblemParams,
    StateVec,
    Trajectory,
    compare_trajectories,
    detect_blowup,
    integrate,
    monotone_cone,
    spow,
    vector_field,
)
from pqbiharmonic.errors import DomainError

from oracles import SCALAR_BLOWUP_TIME, reference_solution


def test_spow_scalar_and_array():
    assert spow(-8.0, 2.0) == -8.0
    assert spow(4.0, 1.5) == pytest.approx(2.0)
    assert spow(-4.0, 1.5) == pytest.approx(-2.0)
    assert spow(0.0, 1.3) == 0.0
    x = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_allclose(spow(x, 3.0), [-4.0, 0.0, 9.0])


@pytest.mark.parametrize("r", [1.2, 1.5, 2.0, 3.7])
def test_spow_inverse_under_conjugation(r):
    x = np.linspace(-5, 5, 101)
    rc = r / (r - 1)
    np.testing.assert_allclose(spow(spow(x, r), rc), x, rtol=1e-13, atol=1e-13)


def test_problem_params_validation():
    pp = ProblemParams(1.5, 3)
    assert pp.p_conj == pytest.approx(3.0)
    assert isinstance(pp.q, float)
    assert pp.replace(lam=2.0).lam == 2.0
    for bad in [dict(p=1.0, q=2), dict(p=2, q=0.5), dict(p=2, q=2, lam=0.0),
                dict(p=2, q=2, t0=-1.0), dict(p=float("nan"), q=2)]:
        with pytest.raises(DomainError):
            ProblemParams(**bad)


def test_vector_field():
    v = vector_field(ProblemParams(1.5, 3.0, lam=2.0), (1.0, 2.0, -2.0, 4.0))
    assert isinstance(v, StateVec)
    # p' = 3: -spow(-2, 3) = 4; -lam * spow(1, 3) = -2
    assert v == pytest.approx((2.0, 4.0, 4.0, -2.0))


def test_linear_case_is_sine():
    tr = integrate(ProblemParams(2, 2), (0.0, 1.0, 0.0, 1.0), 10.0)
    ts = np.linspace(0, 10, 1001)
    ys = tr(ts)
    assert ys.shape == (1001, 4)
    np.testing.assert_allclose(ys[:, 0], np.sin(ts), atol=1e-9)
    np.testing.assert_allclose(ys[:, 1], np.cos(ts), atol=1e-9)
    np.testing.assert_allclose(ys[:, 2], np.sin(ts), atol=1e-9)
    zeros = tr.event_times("u1")
    np.testing.assert_allclose(zeros, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)
    np.testing.assert_allclose(tr.event_times("w1"), zeros, atol=1e-12)
    np.testing.assert_allclose(tr.event_times("u2"), [math.pi / 2 + k * math.pi for k in range(3)],
                               atol=1e-10)
    assert tr.status == "horizon"
    assert tr.t_end == 10.0


def test_dense_output_matches_independent_integrator():
    params = ProblemParams(2.2, 1.7, lam=1.3)
    init = (0.0, 1.0, 0.0, 0.8)
    tr = integrate(params, init, 2.5, rtol=1e-12, atol=1e-14)
    ref = reference_solution(2.2, 1.7, 1.3, init, 2.5)
    ts = np.linspace(0, 2.5, 777)
    np.testing.assert_allclose(tr(ts), ref.sol(ts).T, atol=1e-9)


def test_zero_snapping_and_event_direction():
    tr = integrate(ProblemParams(1.5, 3.0), (0.0, 1.0, 0.0, 1.0), 4.0)
    t_u = tr.first_zero("u1")
    assert t_u is not None
    k = int(np.searchsorted(tr.t, t_u))
    assert tr.t[k] == t_u
    assert tr.y[k, 0] == 0.0
    ev = [e for e in tr.events if e.component == "u1"][0]
    assert ev.direction == -1


def test_trajectory_is_immutable_and_bounded():
    tr = integrate(ProblemParams(2, 2), (0.0, 1.0, 0.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        tr.y[0, 0] = 1.0
    with pytest.raises(DomainError):
        tr(1.5)


def test_trivial_state():
    tr = integrate(ProblemParams(2, 3), (0, 0, 0, 0), 5.0)
    assert tr.status == "trivial"
    assert detect_blowup(ProblemParams(2, 3), (0, 0, 0, 0)).status == "trivial"


def test_integrate_rejects_bad_input():
    with pytest.raises(DomainError):
        integrate(ProblemParams(2, 2), (0, 1, 0), 1.0)
    with pytest.raises(DomainError):
        integrate(ProblemParams(2, 2), (0, 1, 0, 1), -1.0)


def test_stop_callback():
    seen = []

    def stop(t, y, events):
        seen.append(t)
        return t > 1.0

    tr = integrate(ProblemParams(2, 2), (0, 1, 0, 1), 10.0, stop=stop)
    assert tr.status == "stopped"
    assert 1.0 < tr.t_end < 2.0


def test_threshold_crossing_time():
    # linear case with u = sinh t: |u1| + |u2| + |w1| + |w2| = 2 e^t
    tr = integrate(ProblemParams(2, 2), (0, 1, 0, -1), 30.0, threshold=1e6)
    assert tr.status == "blowup"
    assert tr.blowup_time == pytest.approx(math.log(5e5), abs=1e-8)


def test_monotone_cone():
    assert monotone_cone((1.0, 1.0, -1.0, -1.0)) == "increasing"
    assert monotone_cone((-1.0, -1.0, 1.0, 1.0)) == "decreasing"
    assert monotone_cone((0.0, 1.0, 0.0, 1.0)) is None


def test_blowup_on_reducible_line_matches_scalar_oracle():
    # for p' = q the choice w1 = -u1 reduces the system to u'' = spow(u, q)
    rep = detect_blowup(ProblemParams(1.5, 3.0), (0.0, 1.0, 0.0, -1.0))
    assert rep.status == "finite-detected"
    assert rep.t_inf == pytest.approx(SCALAR_BLOWUP_TIME, abs=1e-4)
    lo, hi = rep.bracket
    assert lo <= rep.t_inf <= hi
    assert len(rep.crossings) == 3
    assert rep.cone == "increasing"


def test_no_blowup_from_cone_data():
    rep = detect_blowup(ProblemParams(2.5, 1.5), (1.5, 0.5, -1.5, -0.5), horizon=50.0)
    assert rep.status == "none-up-to-horizon"
    assert rep.t_end == 50.0
    d = rep.as_dict()
    assert d["t_inf_estimate"] is None


def test_comparison_holds():
    params = ProblemParams(2.5, 1.5)
    rep = compare_trajectories(params, 1.0, 0.9, 0.8, 1.1, 2.5)
    assert rep.ok
    assert rep.min_margin >= -1e-9
    assert rep.margins["u1"] > 0


def test_comparison_requires_ordering():
    with pytest.raises(DomainError):
        compare_trajectories(ProblemParams(2, 2), 1.0, 1.0, 1.1, 1.0, 1.0)


def test_csv_export(tmp_path):
    tr = integrate(ProblemParams(2, 2), (0, 1, 0, 1), 4.0)
    text = tr.to_csv(samples=5)
    lines = text.strip().splitlines()
    assert lines[0] == "t,u1,u2,w1,w2"
    assert len(lines) == 6
    path = tmp_path / "traj.csv"
    tr.to_csv(path, samples=11)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[:, 1], np.sin(data[:, 0]), atol=1e-9)
    ev = tr.events_to_csv()
    assert ev.splitlines()[0] == "component,time,direction"


def test_trajectory_from_arrays():
    tr = integrate(ProblemParams(2, 2), (0, 1, 0, 1), 1.0)
    assert isinstance(tr, Trajectory)
    assert tr.n_steps == len(tr.t) - 1
    assert tr.init == (0.0, 1.0, 0.0, 1.0)
