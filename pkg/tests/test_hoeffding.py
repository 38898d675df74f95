"""Decomposition and moment-functional tests."""

import math

import numpy as np
import pytest

from ustatlab import hoeffding, model
from ustatlab.errors import (
    BudgetError,
    DegenerateKernel,
    InsufficientSample,
    ValidationError,
)

E_ABS_Z3 = 2.0 * math.sqrt(2.0 / math.pi)


def variance_normal(n, **kw):
    return hoeffding.decompose(
        model.variance_kernel(), model.distribution_preset("normal"), n, **kw
    )


def gini_bern(n, **kw):
    return hoeffding.decompose(
        model.gini_kernel(), model.bernoulli(0.3), n, **kw
    )


def quadratic_normal(eps, n, **kw):
    return hoeffding.decompose(
        model.quadratic_kernel(eps), model.distribution_preset("normal"), n, **kw
    )


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------

def test_variance_normal_projection_hand_values():
    d = variance_normal(10)
    proj = d.projection
    assert proj.strategy == "analytic"
    assert d.theta == pytest.approx(1.0, abs=1e-12)
    assert d.sigma_g == pytest.approx(math.sqrt(0.5), abs=1e-12)
    # marginal h_1(x) = (x^2 + 1)/2, centered g(x) = (x^2 - 1)/2
    assert proj.marginal(1, [2.0]) == pytest.approx(2.5, abs=1e-12)
    x = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_allclose(proj.g_values(x), (x * x - 1.0) / 2.0, atol=1e-12)
    # degenerate part t_2(x, y) = -xy
    assert proj.component(2, [1.0, 2.0]) == pytest.approx(-2.0, abs=1e-12)
    assert proj.component(2, [0.5, -3.0]) == pytest.approx(1.5, abs=1e-12)


def test_gini_bernoulli_exact_projection():
    d = gini_bern(6)
    assert d.projection.strategy == "exact"
    assert d.theta == pytest.approx(0.42, abs=1e-14)
    g = d.projection.g_values(np.array([0.0, 1.0]))
    np.testing.assert_allclose(g, [-0.12, 0.28], atol=1e-14)


def test_degenerate_component_is_conditionally_centered():
    # E[t_2(x, Y)] = 0 for every fixed x is the defining degeneracy property
    d = gini_bern(5)
    proj = d.projection
    atoms = np.array([0.0, 1.0])
    probs = np.array([0.7, 0.3])
    for x0 in atoms:
        vals = proj.component_values(2, [np.full(2, x0), atoms])
        assert float(np.dot(vals, probs)) == pytest.approx(0.0, abs=1e-14)


def test_marginal_full_order_is_centered_kernel():
    # the order-k marginal is the kernel itself; helper wrappers agree
    d = variance_normal(8)
    pts = [1.5, -0.5]
    want = model.eval_kernel(d.kernel, pts)
    assert hoeffding.marginal_kernel(d.projection, 2, pts) == pytest.approx(want)
    t2 = hoeffding.degenerate_component(d.projection, 2, pts)
    g = d.projection.g_values(np.array(pts))
    assert t2 == pytest.approx(want - d.theta - g.sum(), abs=1e-12)


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------

def test_reconstruction_identity_order2_continuous():
    d = variance_normal(12)
    x = model.sample(d.dist, 12, 3)
    assert d.value(x) == pytest.approx(d.value_via_parts(x), abs=1e-12)


def test_reconstruction_identity_order2_discrete():
    d = gini_bern(9)
    x = model.sample(d.dist, 9, 1)
    assert d.value(x) == pytest.approx(d.value_via_parts(x), abs=1e-12)


def test_reconstruction_identity_order3():
    k = model.symmetrize(lambda a, b, c: a * b * c, order=3)
    d = hoeffding.decompose(k, model.bernoulli(0.3), 7, strategy="exact")
    x = model.sample(d.dist, 7, 5)
    assert d.value(x) == pytest.approx(d.value_via_parts(x), abs=1e-12)


def test_scales():
    d = variance_normal(20)
    assert d.l_scale == pytest.approx(1.0 / (math.sqrt(20) * d.sigma_g))
    want = math.sqrt(20) / (2.0 * d.sigma_g * math.comb(20, 2))
    assert d.t_scale(2) == pytest.approx(want)
    with pytest.raises(ValidationError):
        d.t_scale(0)
    with pytest.raises(ValidationError):
        d.t_scale(3)


def test_sample_length_checked():
    d = variance_normal(10)
    with pytest.raises(ValidationError, match="length"):
        d.value(np.zeros(9))


def test_component_sum_budget():
    d = variance_normal(30)
    with pytest.raises(BudgetError):
        d.component_sum(np.zeros(30), 2, budget=10)


# ---------------------------------------------------------------------------
# Moment functionals
# ---------------------------------------------------------------------------

def test_linear_second_moment_is_one():
    # n E L_1^2 = 1 by construction, on every strategy
    assert hoeffding.scaled_linear_moment(variance_normal(10), 2.0) == pytest.approx(
        1.0, abs=1e-12
    )
    assert hoeffding.scaled_linear_moment(gini_bern(7), 2.0) == pytest.approx(
        1.0, abs=1e-12
    )
    mc = gini_bern(7, strategy="monte-carlo", inner_reps=20_000, seed=2)
    assert hoeffding.scaled_linear_moment(mc, 2.0) == pytest.approx(1.0, abs=0.05)


def test_quadratic_preset_closed_forms():
    eps, n = 0.5, 25
    d = quadratic_normal(eps, n)
    assert hoeffding.kappa(d, 2) == pytest.approx(eps / math.sqrt(n), abs=1e-13)
    assert hoeffding.kappa(d, 1) == 0.0
    assert hoeffding.gamma_var(d) == pytest.approx(
        2.0 * eps * eps / (n - 1), abs=1e-13
    )
    assert hoeffding.beta(d) == pytest.approx(E_ABS_Z3 / math.sqrt(n), abs=1e-13)
    kap = hoeffding.kappa_vector(d)
    assert kap == (0.0, pytest.approx(eps / math.sqrt(n), abs=1e-13))


def test_kappa_frozen_value_variance_exponential():
    d = hoeffding.decompose(
        model.variance_kernel(), model.distribution_preset("exponential"), 30
    )
    # C(30,2) * l^2 * t_scale(2) * t2_coef * e_g_centered^2 collapses to
    # -sqrt(15)/120 for this kernel and distribution
    assert hoeffding.kappa(d, 2) == pytest.approx(
        -math.sqrt(15.0) / 120.0, abs=1e-14
    )


def test_gamma_alpha_interpolates():
    d = quadratic_normal(0.4, 12)
    g2 = hoeffding.gamma_var(d)
    g18 = hoeffding.gamma_alpha(d, 1.8)
    g1 = hoeffding.gamma_alpha(d, 1.0)
    assert g2 > 0.0 and g18 > 0.0 and g1 > 0.0
    with pytest.raises(ValidationError):
        hoeffding.gamma_alpha(d, 2.5)


def test_gamma_components_order1_entry_is_zero():
    d = gini_bern(6)
    comps = hoeffding.gamma_components(d)
    assert comps[0] == 0.0
    assert len(comps) == d.order


def test_order2_edgeworth_inputs_analytic():
    d = hoeffding.decompose(
        model.variance_kernel(), model.distribution_preset("exponential"), 40
    )
    e_gg_eta, e_g3, sigma_g = hoeffding.order2_edgeworth_inputs(d)
    assert e_gg_eta == pytest.approx(-1.0, abs=1e-12)
    assert e_g3 == pytest.approx(30.0, abs=1e-10)
    assert sigma_g == pytest.approx(math.sqrt(2.0), abs=1e-14)


def test_order2_edgeworth_inputs_exact_matches_manual():
    d = gini_bern(8)
    e_gg_eta, e_g3, sigma_g = hoeffding.order2_edgeworth_inputs(d)
    atoms = np.array([0.0, 1.0])
    probs = np.array([0.7, 0.3])
    g = d.projection.g_values(atoms)
    want_g3 = float(np.dot(g ** 3, probs))
    # E[g(X) g(Y) t_2(X, Y)] over the independent pair
    acc = 0.0
    for i, xi in enumerate(atoms):
        for j, yj in enumerate(atoms):
            t2 = d.projection.component(2, [xi, yj])
            acc += probs[i] * probs[j] * g[i] * g[j] * t2
    assert e_g3 == pytest.approx(want_g3, abs=1e-14)
    assert e_gg_eta == pytest.approx(acc, abs=1e-14)
    assert sigma_g == pytest.approx(d.sigma_g)


def test_cross_moment_identity_for_pure_order2_remainder():
    # E[L^2 T] = 2 kappa_2 when the remainder has a single order-2 layer
    d = quadratic_normal(0.6, 6)
    est, se = hoeffding.cross_moment_mc(d, 2, 3000, 7)
    assert se > 0.0
    want = 2.0 * hoeffding.kappa(d, 2)
    assert abs(est - want) < 4.0 * se


def test_exact_and_mc_strategies_agree():
    exact = gini_bern(8)
    mc = gini_bern(8, strategy="monte-carlo", inner_reps=40_000, seed=11)
    assert hoeffding.beta_se(exact) is None
    b_se = hoeffding.beta_se(mc)
    assert b_se is not None and b_se > 0.0
    assert abs(hoeffding.beta(mc) - hoeffding.beta(exact)) < 4.0 * b_se
    k_se = hoeffding.kappa_se(mc, 2)
    assert k_se is not None and k_se > 0.0
    assert abs(hoeffding.kappa(mc, 2) - hoeffding.kappa(exact, 2)) < 4.0 * k_se
    g_se = hoeffding.gamma_components_se(mc, 2.0)
    assert g_se is not None
    diff = hoeffding.gamma_var(mc) - hoeffding.gamma_var(exact)
    assert abs(diff) < 4.0 * math.sqrt(sum(s * s for s in g_se))


def test_moment_summary_round_trip():
    d = quadratic_normal(0.5, 25)
    s = hoeffding.moment_summary(d, alpha=1.8)
    assert s.method == "analytic"
    assert s.beta == pytest.approx(E_ABS_Z3 / 5.0, abs=1e-13)
    assert s.gamma == pytest.approx(2.0 * 0.25 / 24.0, abs=1e-13)
    assert s.kappa[1] == pytest.approx(0.1, abs=1e-13)
    payload = s.to_json()
    assert payload["n"] == 25
    assert payload["method"] == "analytic"
    assert "beta_se" not in payload
    mc = gini_bern(6, strategy="monte-carlo", inner_reps=5000, seed=3)
    payload_mc = hoeffding.moment_summary(mc).to_json()
    assert payload_mc["method"] == "monte-carlo"
    assert payload_mc["beta_se"] > 0.0
    assert len(payload_mc["kappa_se"]) == 2


@pytest.mark.parametrize(
    "build",
    [
        lambda: variance_normal(10),
        lambda: gini_bern(6),
        lambda: quadratic_normal(0.5, 25),
        lambda: hoeffding.decompose(
            model.variance_kernel(), model.uniform_atoms([-1.0, 0.0, 1.0]), 5
        ),
    ],
)
def test_moment_inequalities_pass_on_exact_configs(build):
    report = hoeffding.moment_inequalities(build(), alpha=1.8, tol=1e-12)
    assert report.all_passed
    labels = {item.label for item in report.items}
    assert {"a", "b:2", "b:2.5", "b:3", "c:1", "c:2"} <= labels
    payload = report.to_json()
    assert payload["all_passed"] is True
    assert all({"label", "lhs", "rhs", "passed"} <= set(row) for row in payload["items"])


def test_inequality_item_b2_is_tight():
    # n E L^2 = 1 and beta^0 = 1, so b:2 holds with equality
    report = hoeffding.moment_inequalities(variance_normal(10))
    item = next(it for it in report.items if it.label == "b:2")
    assert item.lhs == pytest.approx(1.0, abs=1e-12)
    assert item.rhs == pytest.approx(1.0, abs=1e-12)
    assert item.passed


# ---------------------------------------------------------------------------
# Degeneracy and validation
# ---------------------------------------------------------------------------

def test_degenerate_kernel_raises():
    # centered product kernel has a vanishing linear projection
    with pytest.raises(DegenerateKernel):
        hoeffding.decompose(
            model.product_kernel(), model.distribution_preset("normal"), 10
        )
    # variance kernel on a two-point symmetric law degenerates too
    with pytest.raises(DegenerateKernel):
        hoeffding.decompose(model.variance_kernel(), model.bernoulli(0.5), 10)


def test_decompose_insufficient_sample():
    with pytest.raises(InsufficientSample, match="n must be >= kernel order"):
        variance_normal(1)


def test_kappa_validates_order():
    d = variance_normal(10)
    with pytest.raises(ValidationError):
        hoeffding.kappa(d, 3)
    with pytest.raises(ValidationError):
        hoeffding.kappa(d, 0)


def test_unknown_strategy_rejected():
    with pytest.raises(ValidationError):
        variance_normal(10, strategy="bootstrap")
