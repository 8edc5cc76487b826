import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from measurefit import (
    ConstantTail,
    DiracAtom,
    ExponentialRate,
    FitError,
    GammaKernel,
    NormalKernel,
    NormalLocation,
    OptimizerConfig,
    ParetoTail,
    RandomMeasure,
    WeightedDensity,
    amse,
    bootstrap_se,
    fit,
    generalized_loglik,
    make_dirac,
    make_gamma_bridge,
    make_right_censoring,
    per_point_loglik,
    sandwich,
    w_value,
    z_value,
)


def gamma_measure(x, s2):
    return RandomMeasure((WeightedDensity(1.0, GammaKernel(x / s2, 1.0 / s2)),))


def normal_measure(center, sd):
    return RandomMeasure((WeightedDensity(1.0, NormalKernel(center, sd)),))


# ---------------------------------------------------------------------------
# W and Z values


def test_w_value_exp_gamma(exp_family):
    # (x/s2) log(1 + s2 c) - log c at x = s2 = c = 1
    assert w_value(exp_family, 1.0, gamma_measure(1.0, 1.0)) == pytest.approx(
        math.log(2.0), rel=1e-9
    )


def test_w_value_dirac_is_negative_log_density(pareto_family):
    measure = make_dirac(2.0)
    assert w_value(pareto_family, 1.5, measure) == pytest.approx(
        -math.log(pareto_family.density(1.5, 2.0))
    )


def test_w_value_normal_normal(normal_family):
    # -log of a normal density with variance sigma1^2 + sd^2
    center, sd, c = 0.7, 0.5, 0.2
    s2 = 1.0 + sd * sd
    expected = 0.5 * math.log(2 * math.pi * s2) + (center - c) ** 2 / (2 * s2)
    assert w_value(normal_family, c, normal_measure(center, sd)) == pytest.approx(expected)


def test_w_value_infinite_when_integral_vanishes(pareto_family):
    assert w_value(pareto_family, 1.0, make_dirac(0.5)) == math.inf


def test_z_value_exp_gamma(exp_family):
    assert z_value(exp_family, 1.0, gamma_measure(1.0, 1.0)) == pytest.approx(-0.5)


def test_z_value_dirac_score_flip(exp_family):
    measure = make_dirac(2.0)
    assert z_value(exp_family, 1.0, measure) == pytest.approx(-(1.0 - 2.0))


def test_z_value_normal_zero_at_center(normal_family):
    assert z_value(normal_family, 0.7, normal_measure(0.7, 2.0)) == pytest.approx(0.0)


@pytest.mark.parametrize(
    "family,measure,c",
    [
        (ExponentialRate(), gamma_measure(1.7, 0.4), 0.8),
        (ParetoTail(1.0), make_gamma_bridge(1.5, 2.5, 0.6, "A"), 1.2),
        (ParetoTail(1.0), RandomMeasure((ConstantTail(2.0, 0.7),)), 0.9),
        (NormalLocation(1.0), RandomMeasure((WeightedDensity(1.0, NormalKernel(1.2, 0.3)),
                                             DiracAtom(0.4))), 0.5),
    ],
)
def test_z_value_matches_independent_differences(family, measure, c):
    z = z_value(family, c, measure)
    h = 3e-6 * max(abs(c), 1.0)
    fd = (w_value(family, c + h, measure) - w_value(family, c - h, measure)) / (2 * h)
    assert z == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_z_value_at_boundary_raises(exp_family):
    from measurefit import ParameterDomainError

    with pytest.raises(ParameterDomainError):
        z_value(exp_family, 0.0, gamma_measure(1.0, 1.0))


# ---------------------------------------------------------------------------
# log likelihood


def test_loglik_dirac_reduces_to_classical(exp_family, rng):
    xs = rng.exponential(2.0, size=40)
    sample = [make_dirac(x) for x in xs]
    classical = np.sum(np.log(exp_family.density(1.3, xs)))
    assert generalized_loglik(exp_family, 1.3, sample) == pytest.approx(classical)


def test_loglik_right_censoring_equals_survival_form(pareto_family, rng):
    xs = 1.0 * (1 - rng.random(60)) ** (-1.0 / 1.5)
    cens = 1.0 * (1 - rng.random(60)) ** (-1.0 / 2.0)
    paid = np.minimum(xs, cens)
    settled = (xs <= cens).astype(int)
    sample = [make_right_censoring(w, d) for w, d in zip(paid, settled)]
    c = 1.4
    direct = np.sum(
        settled * np.log(pareto_family.density(c, paid))
        + (1 - settled) * np.log(pareto_family.survival(c, paid))
    )
    assert abs(generalized_loglik(pareto_family, c, sample) - direct) < 1e-9


def test_loglik_single_exp_gamma(exp_family):
    assert generalized_loglik(exp_family, 1.0, [gamma_measure(1.0, 1.0)]) == pytest.approx(
        math.log(0.5), rel=1e-9
    )


def test_loglik_minus_infinity_with_count(pareto_family):
    sample = [make_dirac(2.0), make_dirac(0.5), make_dirac(0.2)]
    assert generalized_loglik(pareto_family, 1.0, sample) == -math.inf
    terms = per_point_loglik(pareto_family, 1.0, sample)
    assert int(np.isneginf(terms).sum()) == 2


# ---------------------------------------------------------------------------
# fitting


def test_fit_exp_gamma_closed_form(exp_family):
    # fixed draws with mean 2.5 and expert scale 0.5: root at 1/(2.5 - 0.5)
    xs = [1.0, 2.0, 3.0, 4.0]  # mean 2.5
    sample = [gamma_measure(x, 0.5) for x in xs]
    res = fit(exp_family, sample, method="zroot")
    assert res.estimate == pytest.approx(0.5, abs=1e-10)
    assert res.converged


@pytest.mark.parametrize("sd", [0.0, 0.5, 2.0, 10.0])
def test_fit_normal_center_mean_any_spread(normal_family, sd):
    centers = [1.0, 2.0, 3.0]
    if sd == 0.0:
        sample = [make_dirac(u) for u in centers]
    else:
        sample = [normal_measure(u, sd) for u in centers]
    res = fit(normal_family, sample, method="zroot")
    assert abs(res.estimate - 2.0) < 1e-8


def test_fit_pareto_dirac_hill_form(pareto_family, rng):
    xs = 1.0 * (1 - rng.random(80)) ** (-1.0 / 1.7)
    sample = [make_dirac(x) for x in xs]
    res = fit(pareto_family, sample, method="zroot")
    hill = len(xs) / np.log(xs / 1.0).sum()
    assert res.estimate == pytest.approx(hill, abs=1e-9)


def test_fit_methods_agree(exp_family, rng):
    xs = rng.exponential(2.0, size=120)
    sample = [gamma_measure(x, 0.25) for x in xs]
    a = fit(exp_family, sample, method="minimize", compute_sandwich=False)
    b = fit(exp_family, sample, method="zroot", compute_sandwich=False)
    assert abs(a.estimate - b.estimate) < 1e-7


def test_fit_zroot_expands_bracket(exp_family):
    sample = [gamma_measure(x, 0.5) for x in [1.0, 2.0, 3.0, 4.0]]
    config = OptimizerConfig(bracket=(50.0, 90.0))  # root is at 0.5, far below
    res = fit(exp_family, sample, config=config, method="zroot")
    assert res.estimate == pytest.approx(0.5, abs=1e-9)


def test_fit_empty_sample_rejected(exp_family):
    with pytest.raises(ValueError):
        fit(exp_family, [])


def test_fit_objective_infinite_everywhere(pareto_family):
    sample = [make_dirac(0.5)]  # below the threshold: zero density for every c
    with pytest.raises(FitError):
        fit(pareto_family, sample, method="minimize", compute_sandwich=False)


def test_fit_result_reports_sandwich(exp_family, rng):
    xs = rng.exponential(2.0, size=200)
    sample = [make_dirac(x) for x in xs]
    res = fit(exp_family, sample, method="zroot")
    assert res.v_hat is not None
    assert res.stderr == pytest.approx(math.sqrt(res.v_hat / res.n))


# ---------------------------------------------------------------------------
# sandwich


def test_sandwich_matches_classical_exponential(exp_family, rng):
    xs = rng.exponential(2.0, size=20000)
    sample = [make_dirac(x) for x in xs]
    res = fit(exp_family, sample, method="zroot", compute_sandwich=False)
    m, j, v = sandwich(exp_family, res.estimate, sample)
    # classical: slope 1/c^2, score moment Var(X), variance c^2 at the truth
    assert m == pytest.approx(1.0 / res.estimate**2, rel=1e-5)
    assert v == pytest.approx(0.25, rel=0.05)


def test_sandwich_invariant_to_reordering(exp_family, rng):
    xs = rng.exponential(2.0, size=50)
    sample = [gamma_measure(x, 0.5) for x in xs]
    m1, j1, v1 = sandwich(exp_family, 0.6, sample)
    m2, j2, v2 = sandwich(exp_family, 0.6, sample[::-1])
    assert v1 == pytest.approx(v2, rel=1e-12)


def test_sandwich_quadrature_sample(pareto_family, rng):
    # mixed atoms and bridges exercise the finite-difference slope path
    sample = [make_dirac(2.0), make_gamma_bridge(1.5, 3.0, 0.5), make_dirac(1.8)]
    m, j, v = sandwich(pareto_family, 1.2, sample)
    assert v > 0 and j > 0


def test_sandwich_normal_recovers_sum_variance(normal_family, rng):
    # centers are draws plus noise; asymptotic variance is Var(X + Y)
    n = 20000
    xs = 2.0 + rng.standard_normal(n)
    ys = 0.1 + 0.3 * rng.standard_normal(n)
    sample = [normal_measure(u, 0.7) for u in xs + ys]
    res = fit(normal_family, sample, method="zroot")
    assert res.v_hat == pytest.approx(1.0 + 0.09, rel=0.05)


# ---------------------------------------------------------------------------
# bootstrap and amse


def test_bootstrap_single_replicate_has_no_se(exp_family):
    sample = [make_dirac(x) for x in (1.0, 2.0, 3.0)]
    res = bootstrap_se(exp_family, sample, replicates=1, seed=0)
    assert res.standard_error is None
    assert res.percentile_interval is None


def test_bootstrap_identical_sample_zero_se(exp_family):
    sample = [make_dirac(2.0)] * 10
    res = bootstrap_se(exp_family, sample, replicates=25, seed=0, method="zroot")
    assert res.standard_error == pytest.approx(0.0, abs=1e-12)


def test_bootstrap_exponential_se_matches_classical(exp_family, rng):
    xs = rng.exponential(2.0, size=500)
    sample = [make_dirac(x) for x in xs]
    est = fit(exp_family, sample, method="zroot", compute_sandwich=False).estimate
    res = bootstrap_se(exp_family, sample, replicates=500, seed=42, method="zroot")
    classical = math.sqrt(est**2 / len(xs))
    assert abs(res.standard_error - classical) / classical < 0.25
    assert res.n_failures == 0


def test_bootstrap_deterministic(exp_family, rng):
    xs = rng.exponential(2.0, size=60)
    sample = [make_dirac(x) for x in xs]
    a = bootstrap_se(exp_family, sample, replicates=40, seed=9, method="zroot")
    b = bootstrap_se(exp_family, sample, replicates=40, seed=9, method="zroot")
    assert np.array_equal(a.estimates, b.estimates)


def test_amse_values():
    assert amse(0.25, 0.5, 0.5, 100) == pytest.approx(0.0025)
    assert amse(0.25, 0.5, 0.5, 1) == pytest.approx(0.25)
    assert amse(0.3, 0.7, 0.5, 10**9) == pytest.approx(0.04, rel=1e-6)
    with pytest.raises(ValueError):
        amse(0.25, 0.5, 0.5, 0)
    with pytest.raises(ValueError):
        amse(-0.1, 0.5, 0.5, 10)


@settings(max_examples=30, deadline=None)
@given(
    xs=st.lists(st.floats(0.1, 10.0), min_size=3, max_size=12),
    s2=st.floats(0.01, 0.9),
)
def test_zroot_matches_algebraic_root(xs, s2):
    # root of the estimating equation in closed form: 1/(mean - s2)
    mean = sum(xs) / len(xs)
    if mean - s2 < 0.05:
        return
    family = ExponentialRate()
    sample = [gamma_measure(x, s2) for x in xs]
    res = fit(family, sample, method="zroot", compute_sandwich=False)
    assert res.estimate == pytest.approx(1.0 / (mean - s2), abs=1e-8)
