import numpy as np
import pytest
from scipy import stats

from sinsbudget.decomposition import SourcePartition, init_decomposed_cov, step_decomposed_cov
from sinsbudget.errors import NumericError, PartitionError, UnsupportedInputError
from sinsbudget.montecarlo import chi2_interval, compare_budget, noise_factor, simulate_ensemble
from sinsbudget.statespace import DiscreteStep

WALK = SourcePartition((("x0", (0,)),), (("w", (0,)),))


def walk_steps(count=100, q=1.0):
    return [DiscreteStep(np.eye(1), np.array([[q]]), 1.0, float(k), (np.array([[q]]),)) for k in range(count)]


def three_state():
    """Small coupled system with two initial groups and two noise groups."""
    part = SourcePartition((("a", (0,)), ("b", (1, 2))), (("u", (0,)), ("v", (1,))))
    phi = np.array([[1.0, 0.1, 0.0], [0.0, 0.95, 0.2], [0.05, 0.0, 0.9]])
    qu = np.zeros((3, 3))
    qu[0, 0] = 0.01
    qv = np.array([[0.0, 0.0, 0.0], [0.0, 0.02, 0.01], [0.0, 0.01, 0.02]])
    steps = [DiscreteStep(phi, qu + qv, 1.0, float(k), (qu, qv)) for k in range(30)]
    return part, steps, np.diag([1.0, 0.5, 2.0])


def analytic(steps, P0, part):
    D = init_decomposed_cov(P0, part)
    for s in steps:
        D = step_decomposed_cov(s, None, D)
    return D


def test_zero_inputs_give_exact_zero():
    part, steps, _ = three_state()
    zero_steps = [DiscreteStep(s.phi, np.zeros((3, 3)), 1.0, s.t, (np.zeros((3, 3)),) * 2) for s in steps]
    mc = simulate_ensemble(zero_steps, np.zeros((3, 3)), part, 50, seed=1)
    assert not np.any(mc.total)
    assert all(not np.any(c) for c in mc.per_source.values())


def test_scalar_random_walk_variance():
    mc = simulate_ensemble(walk_steps(), np.zeros((1, 1)), WALK, 10000, seed=7)
    assert mc.total[0, 0] == pytest.approx(100.0, abs=5.0)
    assert mc.per_source["w"][0, 0] == pytest.approx(100.0, abs=5.0)
    assert mc.per_source["x0"][0, 0] == 0.0
    assert mc.epoch == 100.0


def test_per_source_sum_matches_total():
    part, steps, P0 = three_state()
    mc = simulate_ensemble(steps, P0, part, 20000, seed=3)
    summed = sum(mc.per_source.values())
    # independent sources: each estimate has relative sd sqrt(2/N) ~ 1%
    np.testing.assert_allclose(np.diag(summed), np.diag(mc.total), rtol=0.05)


def test_ensemble_matches_decomposed_covariance():
    part, steps, P0 = three_state()
    D = analytic(steps, P0, part)
    mc = simulate_ensemble(steps, P0, part, 1000, seed=11)
    rep = compare_budget(mc, D, [("x", 0), ("y", 1), ("z", 2)])
    assert rep.passed, [(r.output, r.source, r.ratio) for r in rep.failures]
    assert len(rep.rows) == 12


def test_seed_determinism_and_stream_independence():
    part, steps, P0 = three_state()
    a = simulate_ensemble(steps, P0, part, 200, seed=5)
    b = simulate_ensemble(steps, P0, part, 200, seed=5)
    c = simulate_ensemble(steps, P0, part, 200, seed=6)
    np.testing.assert_array_equal(a.total, b.total)
    for k in a.per_source:
        np.testing.assert_array_equal(a.per_source[k], b.per_source[k])
    assert not np.array_equal(a.total, c.total)
    # a source's ensemble does not depend on which other sources were simulated
    only_v = simulate_ensemble(steps, P0, part, 200, seed=5, sources=["v"])
    assert list(only_v.per_source) == ["v"]
    np.testing.assert_allclose(only_v.per_source["v"], a.per_source["v"], rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(only_v.total, a.total, rtol=1e-13, atol=1e-15)


def test_backends_agree(kernel_backend):
    part, steps, P0 = three_state()
    mc = simulate_ensemble(steps, P0, part, 300, seed=9)
    ref = simulate_ensemble(steps, P0, part, 300, seed=9)
    np.testing.assert_array_equal(mc.total, ref.total)
    assert mc.total[0, 0] > 0


def test_chi2_interval_matches_definition():
    lo, hi = chi2_interval(2.0, 1000, 0.99)
    assert lo == pytest.approx(999 * 2.0 / stats.chi2.ppf(0.995, 999))
    assert hi == pytest.approx(999 * 2.0 / stats.chi2.ppf(0.005, 999))
    assert lo < 2.0 < hi


def test_chi2_interval_coverage():
    """Empirical coverage of the 99% interval on Gaussian samples."""
    rng = np.random.default_rng(0)
    hits = 0
    trials = 2000
    for _ in range(trials):
        v = np.var(rng.standard_normal(50), ddof=1)
        lo, hi = chi2_interval(v, 50)
        hits += lo <= 1.0 <= hi
    assert hits / trials == pytest.approx(0.99, abs=0.01)


def test_walk_comparison_pass_and_forced_fail():
    steps = walk_steps()
    D = analytic(steps, np.zeros((1, 1)), WALK)
    mc = simulate_ensemble(steps, np.zeros((1, 1)), WALK, 1000, seed=2)
    rep = compare_budget(mc, D, [("x", 0)])
    rows = {r.source: r for r in rep.rows}
    assert rows["w"].status == "pass"
    assert rows["x0"].status == "degenerate"
    assert rep.passed and not rep.wide_intervals

    D.qbar_parts *= 2.0
    bad = compare_budget(mc, D, [("x", 0)])
    assert not bad.passed
    assert [(r.source, r.status) for r in bad.failures] == [("w", "fail")]


def test_small_count_flags_wide_intervals():
    steps = walk_steps(5)
    D = analytic(steps, np.zeros((1, 1)), WALK)
    mc = simulate_ensemble(steps, np.zeros((1, 1)), WALK, 2, seed=1)
    assert compare_budget(mc, D, [("x", 0)]).wide_intervals


def test_errors():
    with pytest.raises(ValueError):
        simulate_ensemble(walk_steps(2), np.zeros((1, 1)), WALK, 1, seed=0)
    with pytest.raises(UnsupportedInputError):
        simulate_ensemble([], np.ones((2, 2)), SourcePartition((("a", (0, 1)),)), 10, seed=0)
    with pytest.raises(PartitionError):
        simulate_ensemble(walk_steps(2), np.zeros((1, 1)), WALK, 10, seed=0, sources=["nope"])
    no_groups = [DiscreteStep(np.eye(1), np.eye(1), 1.0)]
    with pytest.raises(PartitionError):
        simulate_ensemble(no_groups, np.zeros((1, 1)), WALK, 10, seed=0)
    bad = [DiscreteStep(np.eye(1), np.array([[-1.0]]), 1.0, 0.0, (np.array([[-1.0]]),))]
    with pytest.raises(NumericError):
        simulate_ensemble(bad, np.zeros((1, 1)), WALK, 10, seed=0)


def test_noise_factor():
    q = np.array([[2.0, 1.0], [1.0, 2.0]])
    L = noise_factor(q)
    np.testing.assert_allclose(L @ L.T, q, rtol=1e-14)
    rank1 = np.outer([1.0, 2.0], [1.0, 2.0])
    assert noise_factor(rank1).shape == (2, 1)
    assert noise_factor(np.zeros((3, 3))).shape == (3, 0)
