import math

import numpy as np
import pytest
from scipy import integrate

from hammersley_lab import burgers
from hammersley_lab.experiments import (CSV_VERSION_LINE, RESULT_COLUMNS, CaseMismatch,
                                        ExperimentResult, ScalingParams, benchmark_residual,
                                        error_exponent, fit_error_exponent, initial_particles,
                                        run_sweep, thm1_residual, thm2_statistic, thm2_target,
                                        thm3_residual, thm4_prediction, thm4_residual, translation)

ZERO = burgers.constant(0.0)


def _params(**kw):
    base = dict(n=30, nu=1.0, beta=0.4, q=1.0, t=1.0, seeds=(0, 1))
    base.update(kw)
    return ScalingParams(**base)


def test_translation_examples():
    assert translation(10, 1.0, 1.0, 0.5) == 10
    assert translation(37, 1.3, 2.0, 0.0) == 0
    assert translation(4, 1.5, 1.0, 1.0) == 16


def test_error_exponent_examples():
    assert abs(error_exponent(1.0, 0.2) - 0.6) < 1e-15
    assert error_exponent(1.0, 0.5) == 1.0 / 3.0
    # both branches meet at nu = 3 beta
    assert abs(error_exponent(1.2, 0.4) - 0.4) < 1e-15


def test_scaling_params_validation_and_flags():
    for bad in (dict(n=0), dict(nu=0.9), dict(beta=0.0), dict(q=-1.0), dict(t=-0.1)):
        with pytest.raises(ValueError):
            _params(**bad)
    p = _params(nu=1.25, beta=0.25)
    assert p.case_flags == {"nu_vs_1_plus_beta": "=", "nu_vs_3beta": ">"}
    assert _params(nu=1.0, beta=0.5).case_flags == {"nu_vs_1_plus_beta": "<", "nu_vs_3beta": "<"}
    assert p.time == 30 ** 1.25 and p.shift == translation(30, 1.25, 1.0, 1.0)


def test_initial_particles_anchor_and_extension():
    prof = _params().profile(burgers.tent())
    a = initial_particles(prof, -20, 10, 3)
    b = initial_particles(prof, -50, 40, 3)
    assert a[0] == 0.0 and b[0] == 0.0
    # cumulative sums start from different labels, so agreement is up to rounding
    assert np.allclose(a.positions, b.positions[30:61], rtol=0, atol=1e-12)
    # the range is extended to contain label 0
    c = initial_particles(prof, 5, 9, 3)
    assert c.i_min == 0 and c[0] == 0.0


def test_residuals_vanish_at_time_zero():
    p = _params(t=0.0, x=0.2, y=0.7)
    prof = p.profile(burgers.tent())
    assert all(r.residual == 0.0 for r in thm1_residual(p, prof))
    assert all(r.residual == 0.0 for r in thm3_residual(p, prof))


def test_profile_must_match_params():
    p = _params()
    with pytest.raises(ValueError):
        thm3_residual(p, _params(n=31).profile(ZERO))


def test_thm2_trivial_cases():
    p = _params(beta=0.25, t=0.5, n=20)
    zero_phi = thm2_statistic(p, p.profile(burgers.tent()), ZERO)
    assert all(r.statistic == 0.0 for r in zero_phi)
    assert thm2_target(ZERO, burgers.tent(), 0.5) == 0.0
    with pytest.raises(ValueError):
        thm2_statistic(p, p.profile(ZERO), burgers.constant(1.0))
    with pytest.raises(ValueError):
        thm2_statistic(p, p.profile(ZERO), burgers.tent(), method="x")


def test_thm2_warns_outside_beta_range():
    p = _params(beta=0.6, t=0.5, n=10, seeds=(0,))
    with pytest.warns(UserWarning):
        thm2_statistic(p, p.profile(ZERO), burgers.tent())


def test_thm2_target_matches_dense_quadrature():
    v0, phi, t = burgers.tent(), burgers.tent(), 0.5
    V0 = v0.antiderivative()
    want, _ = integrate.quad(lambda x: phi(x) * burgers.entropy_solution(V0, x, t), -1.0, 1.0,
                             points=[0.0], limit=400, epsabs=1e-13)
    assert abs(thm2_target(v0, phi, t) - want) < 1e-8
    assert thm2_target(v0, phi, t) != 0.0


def test_thm2_event_and_variational_agree():
    p = _params(beta=0.25, t=0.5, n=24, seeds=(0, 1, 2))
    prof = p.profile(burgers.tent())
    a = thm2_statistic(p, prof, burgers.tent(), method="event")
    b = thm2_statistic(p, prof, burgers.tent(), method="variational")
    assert [r.statistic for r in a] == [r.statistic for r in b]
    assert all(r.nu == 1.25 for r in a)


def test_benchmark_matches_thm1_up_to_recentering():
    p = _params(x=0.1, y=0.8, seeds=(0, 1, 2))
    prof = p.profile(burgers.tent())
    t1 = thm1_residual(p, prof)
    bm = benchmark_residual(p, prof)
    for a, b in zip(t1, bm):
        assert a.statistic == b.statistic
        # thm1 recenters by the initial window sum, the benchmark by n q (y - x)
        assert abs((a.residual - b.residual) - (b.target - a.target)) < 1e-9
    custom = benchmark_residual(p, prof, K=p.shift + 3)
    assert all(r.experiment == "benchmark" for r in custom)


def test_thm1_equilibrium_null():
    p = _params(n=50, seeds=tuple(range(50)), x=0.0, y=1.0)
    res = np.array([r.residual for r in thm1_residual(p, p.profile(ZERO))])
    assert abs(res.mean()) < 3 * res.std(ddof=1) / math.sqrt(res.size)


def test_thm4_case_checks():
    prof = _params(nu=1.0, beta=0.25).profile(ZERO)
    with pytest.raises(CaseMismatch):
        thm4_prediction(_params(nu=1.0, beta=0.25), prof, 1)
    with pytest.raises(CaseMismatch):
        thm4_prediction(_params(nu=1.0, beta=0.25), prof, 2)
    with pytest.raises(CaseMismatch):
        thm4_prediction(_params(nu=1.0, beta=0.25), prof, 4)
    # nu = 1.5 = 3 beta violates nu > 3 beta
    p = _params(nu=1.5, beta=0.5)
    with pytest.raises(CaseMismatch):
        thm4_prediction(p, p.profile(ZERO), 1)
    p = _params(nu=1.0, beta=0.25)
    assert thm4_prediction(p, p.profile(ZERO), 3)[0] == 0.0


def test_thm4_case1_prediction_uses_asymptotic_profile():
    p = _params(nu=2.0, beta=0.5, t=0.75)
    prof = p.profile(burgers.step([0.0], [1.0, -1.0]))
    P_n, scale = thm4_prediction(p, prof, 1)
    # slopes (1, -1): V at the origin is -t
    assert scale == 30.0 and abs(P_n - 30.0 * -0.75) < 1e-12


def test_thm4_case2_prediction():
    p = _params(nu=1.25, beta=0.25, t=0.5, x=0.3)
    prof = p.profile(burgers.tent())
    P_n, scale = thm4_prediction(p, prof, 2)
    assert scale == 30 ** 0.75
    assert abs(P_n - scale * burgers.V(prof.V0, 0.3, 0.5)) < 1e-12


def test_thm4_case2_with_zero_profile_equals_thm3():
    p = _params(nu=1.25, beta=0.25, t=0.5, seeds=(0, 1, 2))
    prof = p.profile(ZERO)
    a = thm4_residual(p, prof, 2)
    b = thm3_residual(p, prof)
    assert [r.residual for r in a] == [r.residual for r in b]


def test_thm4_case3_at_time_zero_is_centered():
    p = _params(nu=1.0, beta=0.25, t=0.0, x=0.5, n=40, seeds=tuple(range(200)))
    prof = p.profile(burgers.tent(0.5, 0.5, 1.0))
    res = np.array([r.residual for r in thm4_residual(p, prof, 3)])
    assert abs(res.mean()) < 3 * res.std(ddof=1) / math.sqrt(res.size)


def test_fit_error_exponent_examples():
    ns = [50, 100, 200, 400]
    slope, se = fit_error_exponent([(n, n ** 0.5) for n in ns])
    assert abs(slope - 0.5) < 1e-12 and se < 1e-12
    slope, se = fit_error_exponent([(n, 3.0) for n in ns])
    assert abs(slope) < 1e-12
    with pytest.raises(ValueError):
        fit_error_exponent([(50, 1.0), (50, 2.0), (100, 1.0)])
    with pytest.raises(ValueError):
        fit_error_exponent([(50, 1.0), (100, 0.0), (200, 1.0)])


def test_fit_error_exponent_recovers_noisy_power_law():
    rng = np.random.default_rng(4)
    ns = np.array([25, 50, 100, 200, 400, 800])
    hits = 0
    for _ in range(200):
        pairs = [(n, 2.0 * n ** 0.7 * math.exp(rng.normal(0, 0.1))) for n in ns]
        slope, se = fit_error_exponent(pairs)
        hits += abs(slope - 0.7) <= 2 * se
    # about 90% coverage for a t-based 2 SE band with 4 degrees of freedom
    assert hits >= 160


def test_sweep_is_independent_of_workers():
    base = _params(n=20, seeds=(0, 1, 2))
    one = run_sweep("thm3", base, [20, 30], burgers.tent(), workers=1)
    two = run_sweep("thm3", base, [20, 30], burgers.tent(), workers=2)
    assert one.rows == two.rows
    assert [(r.n, r.seed) for r in one.rows] == [(20, 0), (20, 1), (20, 2), (30, 0), (30, 1), (30, 2)]
    with pytest.raises(ValueError):
        run_sweep("thm9", base, [20], ZERO)


def test_sweep_fit_and_thm4_naming():
    base = _params(nu=1.25, beta=0.25, t=0.5, seeds=(0, 1, 2))
    res = run_sweep("thm3", base, [20, 40, 80], burgers.tent(), fit=True)
    assert res.fitted_exponent is not None and len(res.fitted_exponent) == 2
    res = run_sweep("thm4", base, [20], ZERO, case=2)
    assert res.experiment == "thm4_case2"


def test_result_csvs(tmp_path):
    base = _params(seeds=(0, 1))
    res = run_sweep("thm3", base, [20], burgers.tent())
    res.write_csv(tmp_path / "r.csv")
    res.write_summary_csv(tmp_path / "s.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == CSV_VERSION_LINE and lines[1] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 4
    summary = (tmp_path / "s.csv").read_text().splitlines()
    assert summary[0] == CSV_VERSION_LINE and len(summary) == 4
    s = res.summary()[0]
    col = res.column("residual", 20)
    assert s["count"] == 2 and s["mean_residual"] == float(col.mean())


def test_summary_recomputable_from_rows():
    res = ExperimentResult("thm3", run_sweep("thm3", _params(seeds=(0, 1, 2)), [20], ZERO).rows)
    s = res.summary()[0]
    col = res.column("normalized_residual")
    assert s["se_normalized"] == float(col.std(ddof=1) / math.sqrt(3))
