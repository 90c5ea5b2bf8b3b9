"""Smoke tests for the python bindings."""

import math

import pytest

import mdidro as m


def test_version_string():
    assert m.__version__.startswith("mdi ")


def test_distribution_and_entropy():
    d = m.DiscreteDistribution.from_samples([[0.0], [1.0], [1.0], [1.0]])
    assert len(d) == 2
    assert d.weights == pytest.approx([0.25, 0.75])

    p = m.DiscreteDistribution([[0.0], [1.0]], [0.25, 0.75])
    q = m.DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])
    expected = 0.5 * math.log(0.5 / 0.25) + 0.5 * math.log(0.5 / 0.75)
    assert m.relative_entropy(q, p) == pytest.approx(expected)

    back = m.DiscreteDistribution.from_json(d.to_json())
    assert back.weights == pytest.approx(d.weights)


def test_moment_set_operations():
    box = m.MomentSet.box([0.0, 0.0], [1.0, 1.0])
    assert box.project([2.0, -1.0]) == pytest.approx([1.0, 0.0])
    assert box.distance([2.0, -1.0]) == pytest.approx(math.sqrt(2.0))
    sym = m.MomentSet.box([-1.0, -1.0], [1.0, 1.0])
    assert sym.support([3.0, -4.0]) == pytest.approx(7.0)


def test_iprojection_matches_tilting():
    base = m.DiscreteDistribution([[0.0], [1.0], [2.0]], [1.0, 1.0, 1.0])
    sol = m.iproject(base, m.FeatureMap.identity(),
                     m.MomentSet.box([1.4999], [1.5001]), eps=1e-3)
    oracle = m.tilting_oracle(base, m.FeatureMap.identity(), 1.5)
    assert m.total_variation(sol.projection, oracle) < 1e-2
    assert sol.feasibility_gap <= sol.certified_feasibility_bound


def test_worst_case_risk_dominates_nominal():
    nominal = m.DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])
    wc = m.worst_case_risk([], nominal, m.FeatureMap.identity(),
                           m.MomentSet.box([-1.0], [2.0]), 0.1)
    assert wc.value >= 0.5
    assert wc.converged


def test_bounds():
    b = m.ope_bound(0.2, 500, 5, 4)
    assert b.log_probability_bound == pytest.approx(9 * math.log(501) - 100)
    assert m.hoeffding_ips_bound(2.0, 1, 2.0) == pytest.approx(math.exp(-2.0))
    r = m.radius_for_confidence(100, 2, 0.05)
    assert m.finite_sample_bound(r, 100, 2).probability_bound <= 0.05 + 1e-12


def test_mdp_roundtrip():
    mdp = m.inventory_instance()
    assert mdp.n_states == 5 and mdp.n_actions == 4
    pi_b = m.random_policy(5, 4, 1)
    pi_e = m.random_policy(5, 4, 2)
    mu_b = m.occupation_measure(mdp, pi_b)
    mu_e = m.occupation_measure(mdp, pi_e)
    samples = m.sample_behavioral(mdp, pi_b, 400, 3)
    ips = m.ips_estimate(samples, mu_e, mu_b)
    assert math.isfinite(ips)
    res = m.mdi_ope_estimate(samples, mu_e, mu_b, radius=0.1)
    assert res.kl_target > 0.0
    assert math.isfinite(res.value)


def test_pipeline_on_synthetic_covariate_shift():
    train = m.synth_train(3, 60, 11)
    st, y_mean, _ = m.covshift_moment_set(3, 0.05, 50_000, 5)
    assert y_mean > 0
    loss = m.LossModel.logistic([-5.0, -5.0], [5.0, 5.0])
    res = m.mdi_dro_pipeline(m.atoms_of(train), m.FeatureMap.identity(), st, loss, 1e-3)
    assert res.train.converged
    assert len(res.train.theta) == 2
    assert res.train.value > 0.0


def test_errors_become_python_exceptions():
    with pytest.raises(m.MdiError):
        m.DiscreteDistribution.from_samples([])
