"""Sampler, distribution, and kernel layer tests."""

import itertools
import math

import numpy as np
import pytest

from ustatlab import model
from ustatlab.errors import (
    ArityError,
    BudgetError,
    InsufficientSample,
    PresetError,
    ValidationError,
)


# ---------------------------------------------------------------------------
# Counter-based streams
# ---------------------------------------------------------------------------

def test_stream_generator_is_reproducible():
    a = model.stream_generator(42, 7).normal(size=100)
    b = model.stream_generator(42, 7).normal(size=100)
    np.testing.assert_array_equal(a, b)


def test_prefix_of_longer_draw_matches_shorter_draw():
    short = model.sample(model.distribution_preset("normal"), 50, 3, stream=5)
    long = model.sample(model.distribution_preset("normal"), 200, 3, stream=5)
    np.testing.assert_array_equal(short, long[:50])


def test_distinct_streams_and_seeds_differ():
    base = model.sample(model.distribution_preset("normal"), 64, 1, stream=0)
    other_stream = model.sample(model.distribution_preset("normal"), 64, 1, stream=1)
    other_seed = model.sample(model.distribution_preset("normal"), 64, 2, stream=0)
    assert not np.array_equal(base, other_stream)
    assert not np.array_equal(base, other_seed)


def test_distinct_streams_look_independent():
    # correlation across 4096 draws should be at the 1/sqrt(n) noise level
    x = model.sample(model.distribution_preset("normal"), 4096, 9, stream=100)
    y = model.sample(model.distribution_preset("normal"), 4096, 9, stream=101)
    corr = float(np.corrcoef(x, y)[0, 1])
    assert abs(corr) < 5.0 / math.sqrt(4096)


def test_negative_sample_size_rejected():
    with pytest.raises(ValidationError):
        model.sample(model.distribution_preset("normal"), -1, 0)


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

def test_bernoulli_support_and_moments():
    d = model.bernoulli(0.3)
    assert model.mean(d) == pytest.approx(0.3)
    assert model.variance(d) == pytest.approx(0.21)
    x = model.sample(d, 10_000, 0)
    assert set(np.unique(x)) <= {0.0, 1.0}
    assert abs(x.mean() - 0.3) < 0.02


def test_bernoulli_validates_probability():
    with pytest.raises(ValidationError):
        model.bernoulli(0.0)
    with pytest.raises(ValidationError):
        model.bernoulli(1.5)


def test_uniform_atoms_rejects_duplicates():
    with pytest.raises(ValidationError):
        model.uniform_atoms([1.0, 1.0, 2.0])


def test_finite_discrete_probs_must_sum_to_one():
    with pytest.raises(ValidationError):
        model.FiniteDiscrete("bad", np.array([0.0, 1.0]), np.array([0.5, 0.4]))


@pytest.mark.parametrize(
    "ident,mean,var",
    [
        ("normal", 0.0, 1.0),
        ("exponential", 1.0, 1.0),
        ("uniform", 0.5, 1.0 / 12.0),
        ("rademacher", 0.0, 1.0),
        ("bernoulli:0.3", 0.3, 0.21),
        ("uniform-atoms:-1,0,1", 0.0, 2.0 / 3.0),
    ],
)
def test_distribution_presets_expose_moments(ident, mean, var):
    d = model.distribution_preset(ident)
    assert model.mean(d) == pytest.approx(mean, abs=1e-12)
    assert model.variance(d) == pytest.approx(var, abs=1e-12)


def test_preset_prefix_is_optional():
    a = model.distribution_preset("dist:bernoulli:0.25")
    b = model.distribution_preset("bernoulli:0.25")
    np.testing.assert_array_equal(a.atoms, b.atoms)


def test_unknown_distribution_preset():
    with pytest.raises(PresetError):
        model.distribution_preset("cauchy")


def test_continuous_moment_tables_match_quadrature():
    for ident in ("normal", "exponential", "uniform"):
        d = model.distribution_preset(ident)
        for p in (2, 3, 4, 5, 6):
            table = model.central_moment(d, p)
            mu = d.mean
            quad = model.expectation(d, lambda x: (x - mu) ** p)
            assert table == pytest.approx(quad, abs=1e-9), (ident, p)


def test_exponential_abs_moment_closed_form():
    d = model.distribution_preset("exponential")
    assert model.abs_moment(d, 3.0) == pytest.approx(6.0, rel=1e-12)
    assert model.abs_moment(d, 2.5) == pytest.approx(math.gamma(3.5), rel=1e-12)


def test_gaussian_abs_moment_values():
    # E|Z|^3 = 2 sqrt(2/pi)
    assert model.gaussian_abs_moment(3.0) == pytest.approx(
        2.0 * math.sqrt(2.0 / math.pi), rel=1e-14
    )
    assert model.gaussian_abs_moment(2.0) == pytest.approx(1.0, rel=1e-14)
    assert model.gaussian_abs_moment(0.0) == pytest.approx(1.0, rel=1e-14)


def test_gaussian_negative_moment_against_quadrature():
    from scipy import integrate

    for a in (0.1, 0.4, 0.45):
        closed = model.neg_abs_moment_std_normal(a)
        val, _ = integrate.quad(
            lambda z: abs(z) ** (-a) * math.exp(-z * z / 2.0) / math.sqrt(2 * math.pi),
            -12.0,
            12.0,
            points=[0.0],
            limit=400,
        )
        assert closed == pytest.approx(val, rel=1e-9), a


def test_gaussian_negative_moment_range():
    with pytest.raises(ValidationError):
        model.neg_abs_moment_std_normal(0.5)
    with pytest.raises(ValidationError):
        model.gaussian_abs_moment(-1.0)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def test_builtin_kernels_are_symmetric_bitwise():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 256))
    for ident in ("variance", "gini", "product", "quadratic:0.7"):
        k = model.kernel_preset(ident)
        np.testing.assert_array_equal(k.fn(x, y), k.fn(y, x))


def test_kernel_hand_values():
    assert model.eval_kernel(model.variance_kernel(), (1.0, 4.0)) == pytest.approx(4.5)
    assert model.eval_kernel(model.gini_kernel(), (1.0, 4.0)) == pytest.approx(3.0)
    assert model.eval_kernel(model.product_kernel(), (2.0, 3.0)) == pytest.approx(6.0)
    k = model.quadratic_kernel(0.5)
    assert model.eval_kernel(k, (2.0, 3.0)) == pytest.approx(2.5 + 0.5 * 6.0)


def test_eval_kernel_checks_arity_and_finiteness():
    k = model.variance_kernel()
    with pytest.raises(ArityError):
        model.eval_kernel(k, (1.0, 2.0, 3.0))
    with pytest.raises(ValidationError):
        model.eval_kernel(k, (1.0, math.inf))


def test_kernel_preset_parsing():
    k = model.kernel_preset("kernel:quadratic:0.25")
    assert k.params["eps"] == pytest.approx(0.25)
    with pytest.raises(PresetError):
        model.kernel_preset("cubic")
    with pytest.raises(PresetError):
        model.kernel_preset("quadratic:not-a-number")


def test_symmetrize_produces_symmetric_kernel():
    k = model.symmetrize(lambda x, y: x * x * y, order=2)
    assert model.eval_kernel(k, (2.0, 3.0)) == model.eval_kernel(k, (3.0, 2.0))
    # average of x^2 y and y^2 x
    assert model.eval_kernel(k, (2.0, 3.0)) == pytest.approx(0.5 * (12.0 + 18.0))


# ---------------------------------------------------------------------------
# U-statistic evaluation
# ---------------------------------------------------------------------------

def test_u_statistic_order2_hand_value():
    # variance kernel on (1, 2, 4): pairs (1,2),(1,4),(2,4) -> (0.5 + 4.5 + 2)/3
    u = model.u_statistic(model.variance_kernel(), np.array([1.0, 2.0, 4.0]))
    assert u == pytest.approx(7.0 / 3.0, rel=1e-15)
    # equals the ddof=1 sample variance
    assert u == pytest.approx(np.var([1.0, 2.0, 4.0], ddof=1), rel=1e-14)


def test_u_statistic_matches_bruteforce_order3():
    rng = np.random.default_rng(4)
    x = rng.normal(size=7)
    k = model.symmetrize(lambda a, b, c: a * b + c, order=3)
    expected = np.mean(
        [model.eval_kernel(k, combo) for combo in itertools.combinations(x, 3)]
    )
    assert model.u_statistic(k, x) == pytest.approx(expected, rel=1e-12)


def test_u_statistic_matches_bruteforce_order4():
    rng = np.random.default_rng(5)
    x = rng.normal(size=7)
    k = model.symmetrize(lambda a, b, c, d: a * b * c * d, order=4)
    expected = np.mean(
        [model.eval_kernel(k, combo) for combo in itertools.combinations(x, 4)]
    )
    assert model.u_statistic(k, x) == pytest.approx(expected, rel=1e-12)


def test_u_statistic_insufficient_sample():
    with pytest.raises(InsufficientSample, match="kernel order"):
        model.u_statistic(model.variance_kernel(), np.array([1.0]))


def test_u_statistic_budget():
    with pytest.raises(BudgetError):
        model.u_statistic(model.variance_kernel(), np.zeros(100), budget=10)


def test_u_statistic_rejects_bad_input():
    with pytest.raises(ValidationError):
        model.u_statistic(model.variance_kernel(), np.array([[1.0, 2.0]]))
    with pytest.raises(ValidationError):
        model.u_statistic(model.variance_kernel(), np.array([1.0, math.nan]))
