import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swrom.diagnostics import (
    TimingReport,
    benchmark_report,
    conservation_drift,
    error_report,
    relative_drift,
    summary_table,
    time_avg_relative_l2,
)
from swrom.integrator import Trajectory


def states(rng, K=6, N=5):
    X = rng.standard_normal((K, 3 * N))
    X[:, 2 * N :] += 2.0
    return X


def test_identical_is_zero(rng):
    X = states(rng)
    assert time_avg_relative_l2(X, X) == {"u_tilde": 0.0, "v_tilde": 0.0, "h": 0.0}


def test_doubling_gives_one(rng):
    X = states(rng)
    errs = time_avg_relative_l2(Trajectory(0.1, 5, X), 2 * X)
    assert all(v == pytest.approx(1.0, abs=1e-15) for v in errs.values())


@given(st.floats(-0.5, 0.5))
def test_scaling_gives_epsilon(eps):
    X = states(np.random.default_rng(1))
    errs = time_avg_relative_l2(X, (1 + eps) * X)
    assert all(v == pytest.approx(abs(eps), abs=1e-14) for v in errs.values())


def test_initial_state_skipped_by_default(rng):
    X = states(rng)
    Y = X.copy()
    Y[0] *= 5
    assert time_avg_relative_l2(X, Y)["h"] == 0.0
    assert time_avg_relative_l2(X, Y, skip_initial=False)["h"] > 0


def test_metric_errors(rng):
    X = states(rng)
    with pytest.raises(ValueError):
        time_avg_relative_l2(X, X[:-1])
    Z = X.copy()
    Z[3, :5] = 0.0
    with pytest.raises(ZeroDivisionError):
        time_avg_relative_l2(Z, X)


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e6, 1e6)))
def test_drift_nonnegative_starting_at_zero(v):
    d = conservation_drift(v)
    assert d.series[0] == 0.0 and np.all(d.series >= 0)
    assert d.series.shape == v.shape


def test_drift_examples():
    assert conservation_drift(np.full(5, 3.0)).mean == 0.0
    d = conservation_drift([1.0, 2.0, 0.0, 1.5], reference=1.0)
    assert d.mean == pytest.approx((1 + 1 + 0.5) / 3)
    assert relative_drift([2.0, 2.2, 1.9]) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        conservation_drift([])


def test_error_report(rng):
    X = states(rng)
    cons = np.tile([1.0, 2.0, 3.0, 4.0], (6, 1))
    rc = cons.copy()
    rc[:, 0] += 0.1
    rep = error_report(X, X, cons, rc)
    assert rep.drift["energy"] == pytest.approx(0.1) and rep.drift["enstrophy"] == 0.0
    assert rep.series["energy"].shape == (5,)
    assert len(rep.rows("pod_")) == 5


def test_timing_report():
    rep = benchmark_report({"fom": 2.0, "pod_basis": 0.5, "pod_online": [2.0, 1.0, 3.0]})
    assert rep.pod_speedup == 1.0
    assert rep.deim_speedup is None
    rep = benchmark_report({"fom": 10.0, "deim_basis": 1.0, "deim_online": 2.0})
    assert rep.deim_speedup == pytest.approx(5.0)
    assert dict(rep.rows())["speedup_deim"] == pytest.approx(5.0)


def test_timing_report_errors():
    with pytest.raises(KeyError):
        benchmark_report({"pod_online": 1.0, "pod_basis": 1.0})
    with pytest.raises(KeyError):
        benchmark_report({"fom": 1.0, "pod_online": 1.0})
    with pytest.raises(ValueError):
        benchmark_report({"fom": 1.0, "gpu": 1.0})
    with pytest.raises(ValueError):
        TimingReport(fom=0.0)


def test_summary_table():
    text = summary_table([("error_h", 7.261e-3)], "POD")
    assert "error_h" in text and "7.2610e-03" in text
