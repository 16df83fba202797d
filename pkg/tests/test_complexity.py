import itertools
import math

import numpy as np
import pytest

from locpen.classes import (
    ErrorVectorSet,
    ModelClass,
    block_structure,
    enumerate_error_vectors,
    erm,
    interval_pattern_count,
)
from locpen.complexity import (
    EXACT_RADEMACHER_CAP,
    PAPER_PROFILE,
    ConstantProfile,
    epsilon_k,
    estimate_expected_log_shatter,
    estimate_from_sups,
    localization_threshold,
    localized_subclass,
    localized_subset_count,
    rademacher_exact,
    rademacher_mc,
    rademacher_mc_interval_sups,
    rademacher_mc_interval_sups_budgeted,
    random_shatter,
    u_bar,
    u_hat,
    u_pop,
)
from locpen.data import LabeledSample, NoisyRegionDistribution


def sample_1d(xs, ys):
    return LabeledSample(np.asarray(xs, dtype=np.float64), np.asarray(ys))


def ev_from_rows(rows):
    return ErrorVectorSet(np.array(rows, dtype=np.uint8))


def all_vectors(n):
    return ev_from_rows(list(itertools.product((0, 1), repeat=n)))


# ---------------------------------------------------------------- shatter

def test_random_shatter_worked_values():
    s = sample_1d([0.1, 0.2, 0.3], [0, 1, 0])
    assert random_shatter(ModelClass("thresholds"), s) == 4
    assert random_shatter(ModelClass("intervals", k=1), s) == 7
    assert random_shatter(ModelClass("intervals", k=2), s) == 8
    assert random_shatter(ModelClass("fixed", regions=((0.0, 0.5),)), s) == 1


def test_random_shatter_matches_enumeration():
    rng = np.random.default_rng(3)
    for trial in range(20):
        n = int(rng.integers(1, 11))
        xs = rng.uniform(0, 1, n)
        if trial % 3 == 0:
            xs = np.round(xs, 1)
        s = sample_1d(xs, rng.integers(0, 2, n))
        for c in (
            ModelClass("thresholds"),
            ModelClass("intervals", k=1),
            ModelClass("intervals", k=2),
            ModelClass("stumps", dim=1),
        ):
            assert random_shatter(c, s) == enumerate_error_vectors(c, s).count


def test_shatter_submultiplicative_under_concatenation():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n1, n2 = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        xs1 = rng.uniform(0.0, 0.45, n1)
        xs2 = rng.uniform(0.55, 1.0, n2)
        ys1, ys2 = rng.integers(0, 2, n1), rng.integers(0, 2, n2)
        both = sample_1d(np.concatenate([xs1, xs2]), np.concatenate([ys1, ys2]))
        for c in (ModelClass("intervals", k=2), ModelClass("thresholds")):
            prod = random_shatter(c, sample_1d(xs1, ys1)) * random_shatter(
                c, sample_1d(xs2, ys2)
            )
            assert random_shatter(c, both) <= prod


# ---------------------------------------------------------------- rademacher

def test_rademacher_exact_worked_values():
    zero = ev_from_rows([[0, 0, 0]])
    assert rademacher_exact(zero, 3).value == 0.0
    full = all_vectors(3)
    est = rademacher_exact(full, 3)
    assert est.value == pytest.approx(0.5, rel=1e-12)
    assert est.mode == "exact" and est.std_error == 0.0 and est.draws == 0
    pair = ev_from_rows([[0, 0, 0], [1, 1, 1]])
    assert rademacher_exact(pair, 3).value == pytest.approx(0.25, rel=1e-12)


def test_rademacher_exact_validation():
    ev = ev_from_rows([[0, 1, 0]])
    with pytest.raises(ValueError):
        rademacher_exact(ev, 4)
    wide = ErrorVectorSet(np.zeros((1, EXACT_RADEMACHER_CAP + 1), dtype=np.uint8))
    with pytest.raises(ValueError):
        rademacher_exact(wide, EXACT_RADEMACHER_CAP + 1)


def test_rademacher_exact_range_and_monotonicity():
    rng = np.random.default_rng(11)
    for _ in range(15):
        n = int(rng.integers(1, 9))
        count = int(rng.integers(1, 2**n + 1))
        rows = rng.integers(0, 2, (count, n))
        rows = np.unique(rows, axis=0)
        ev = ErrorVectorSet(rows.astype(np.uint8))
        val = rademacher_exact(ev, n).value
        assert -1e-12 <= val <= 0.5 + 1e-12
        if ev.count > 1:
            sub = ErrorVectorSet(rows[: ev.count - 1].astype(np.uint8))
            assert rademacher_exact(sub, n).value <= val + 1e-12


def test_rademacher_mc_deterministic_and_zero_class():
    ev = ev_from_rows([[0, 0, 0, 0]])
    est = rademacher_mc(ev, 4, draws=64, seed=5)
    assert est.value == 0.0 and est.std_error == 0.0
    assert est.mode == "monte_carlo" and est.draws == 64
    full = all_vectors(5)
    a = rademacher_mc(full, 5, draws=500, seed=9)
    b = rademacher_mc(full, 5, draws=500, seed=9)
    c = rademacher_mc(full, 5, draws=500, seed=10)
    assert a.value == b.value and a.std_error == b.std_error
    assert a.value != c.value


def test_rademacher_mc_agrees_with_exact():
    rng = np.random.default_rng(13)
    for _ in range(10):
        n = int(rng.integers(2, 10))
        rows = np.unique(rng.integers(0, 2, (rng.integers(2, 20), n)), axis=0)
        ev = ErrorVectorSet(rows.astype(np.uint8))
        exact = rademacher_exact(ev, n).value
        mc = rademacher_mc(ev, n, draws=4000, seed=int(rng.integers(1 << 30)))
        assert abs(mc.value - exact) <= 4 * mc.std_error + 1e-3
        assert mc.value >= -3 * mc.std_error - 1e-12


def test_rademacher_mc_validation():
    ev = ev_from_rows([[0, 1]])
    with pytest.raises(ValueError):
        rademacher_mc(ev, 3, draws=10, seed=0)
    with pytest.raises(ValueError):
        rademacher_mc(ev, 2, draws=0, seed=0)


def test_interval_sups_match_enumerated_class():
    rng = np.random.default_rng(17)
    for _ in range(6):
        n = int(rng.integers(3, 12))
        xs = rng.uniform(0, 1, n)
        ys = rng.integers(0, 2, n)
        s = sample_1d(xs, ys)
        bs = block_structure(s)
        sups = rademacher_mc_interval_sups(bs, 3, draws=3000, seed=21)
        assert sups.shape == (3000, 3)
        # one sign pass serves the nested hierarchy: sup nondecreasing in k
        assert np.all(np.diff(sups, axis=1) >= -1e-12)
        for k in (1, 2, 3):
            est = estimate_from_sups(sups[:, k - 1])
            ev = enumerate_error_vectors(ModelClass("intervals", k=k), s)
            exact = rademacher_exact(ev, n).value
            assert abs(est.value - exact) <= 4 * est.std_error + 1e-3


def test_budgeted_sups_dominated_by_full():
    rng = np.random.default_rng(19)
    xs = rng.uniform(0, 1, 14)
    ys = rng.integers(0, 2, 14)
    s = sample_1d(xs, ys)
    bs = block_structure(s)
    full = rademacher_mc_interval_sups(bs, 2, draws=800, seed=3)
    unbudgeted = rademacher_mc_interval_sups_budgeted(bs, 2, 800, 3, max_errors=14)
    assert np.allclose(unbudgeted, full, atol=1e-12)
    # callers only pass budgets at or above the erm error count, where the
    # subclass is nonempty for every column of the hierarchy
    floor_errors = round(erm(ModelClass("intervals", k=1), s).empirical_loss * 14)
    prev = None
    for budget in sorted({floor_errors, floor_errors + 2, floor_errors + 5, 14}):
        cur = rademacher_mc_interval_sups_budgeted(bs, 2, 800, 3, max_errors=budget)
        assert np.all(cur <= full + 1e-12)
        if prev is not None:
            assert np.all(prev <= cur + 1e-12)
        prev = cur


def test_budgeted_sups_zero_budget_realizable():
    # y has one run of ones, so the zero error vector survives budget 0 and
    # the localized class is the singleton: every per-draw supremum is 0
    xs = np.linspace(0, 1, 10)
    ys = np.array([0, 0, 1, 1, 1, 0, 0, 0, 0, 0])
    bs = block_structure(sample_1d(xs, ys))
    sups = rademacher_mc_interval_sups_budgeted(bs, 2, 200, 11, max_errors=0)
    assert np.all(sups == 0.0)


def test_estimate_from_sups():
    est = estimate_from_sups(np.array([0.1, 0.3]))
    assert est.value == pytest.approx(0.2)
    assert est.mode == "monte_carlo" and est.draws == 2
    single = estimate_from_sups(np.array([0.4]))
    assert single.std_error == 0.0 and single.draws == 1


# ---------------------------------------------------------------- radii

def test_u_hat_frozen_values():
    assert u_hat(50, 1000, 2) == pytest.approx(1.344899426521461, rel=1e-12)
    assert u_hat(201, 100_000, 1) == pytest.approx(0.01997272781071494, rel=1e-12)
    # single function, single class, n = 1: both logs vanish
    assert u_hat(1, 1, 1) == 0.0


def test_u_hat_monotonicity_and_validation():
    assert u_hat(100, 1000, 2) > u_hat(50, 1000, 2)
    assert u_hat(50, 1000, 3) > u_hat(50, 1000, 2)
    assert u_hat(50, 2000, 2) < u_hat(50, 1000, 2)
    for bad in ((0, 10, 1), (10, 0, 1), (10, 10, 0)):
        with pytest.raises(ValueError):
            u_hat(*bad)


def test_u_bar_and_u_pop():
    assert u_bar(0.0, 1, 1) == 0.0
    assert u_bar(2.0, 100, 3) == pytest.approx(
        16 * (8 * 2.0 + 17 * math.log(300)) / 100, rel=1e-12
    )
    assert u_pop(1.0, 1, 1) == 0.0
    assert u_pop(50.0, 200, 2) == pytest.approx(
        8 * (2 * math.log(50) + 2 * math.log(400)) / 200, rel=1e-12
    )
    with pytest.raises(ValueError):
        u_bar(-0.5, 100, 1)
    with pytest.raises(ValueError):
        u_pop(0.5, 100, 1)


def test_epsilon_k():
    assert epsilon_k(1, 1) == 0.0
    assert epsilon_k(100, 3) == pytest.approx(0.11407564949312402, rel=1e-12)


# ---------------------------------------------------------------- localization

def test_localization_threshold_and_subclass_worked():
    full = all_vectors(3)
    thr = localization_threshold(0.0, 0.01)
    assert thr == pytest.approx(0.15, rel=1e-12)
    loc = localized_subclass(full, 0.0, 0.01)
    assert loc.threshold == pytest.approx(0.15, rel=1e-12)
    assert loc.subset_count == 1
    assert loc.subset is not None and loc.subset.count == 1
    assert tuple(loc.subset.vectors[0].tolist()) == (0, 0, 0)


def test_localized_subclass_threshold_past_one_keeps_everything():
    full = all_vectors(3)
    loc = localized_subclass(full, 0.5, 1.0)  # threshold 8 + 15 = way past 1
    assert loc.threshold >= 1.0
    assert loc.subset is not None and loc.subset.count == full.count
    assert loc.subset_count == full.count


def test_localized_subclass_keeps_erm():
    rng = np.random.default_rng(23)
    for _ in range(15):
        n = int(rng.integers(2, 9))
        rows = np.unique(rng.integers(0, 2, (rng.integers(2, 12), n)), axis=0)
        ev = ErrorVectorSet(rows.astype(np.uint8))
        erm_loss = float(ev.means().min())
        uh = float(rng.uniform(0.0, 0.1))
        loc = localized_subclass(ev, erm_loss, uh)
        if loc.subset is None:
            assert loc.subset_count == ev.count
            continue
        means = loc.subset.means()
        assert np.all(means <= loc.threshold + 1e-12)
        assert means.min() == pytest.approx(erm_loss)
        assert loc.subset_count == loc.subset.count


def test_localized_subset_count_matches_enumeration_filter():
    rng = np.random.default_rng(29)
    for trial in range(12):
        n = int(rng.integers(2, 12))
        xs = rng.uniform(0, 1, n)
        if trial % 3 == 0:
            xs = np.round(xs, 1)
        ys = rng.integers(0, 2, n)
        s = sample_1d(xs, ys)
        bs = block_structure(s)
        budget = int(rng.integers(0, n + 1))
        counts = localized_subset_count(bs, 3, budget)
        for k in (1, 2, 3):
            ev = enumerate_error_vectors(ModelClass("intervals", k=k), s)
            want = int(np.sum(ev.means() * n <= budget + 1e-9))
            assert counts[k - 1] == want


def test_localized_subset_count_negative_budget():
    bs = block_structure(sample_1d([0.1, 0.5], [1, 0]))
    assert localized_subset_count(bs, 2, -1) == [0, 0]


# ---------------------------------------------------------------- profiles

def test_constant_profile_paper():
    p = PAPER_PROFILE
    assert p.is_paper and p.label == "paper"
    assert p.u_hat_mult == 16.0
    assert p.threshold_loss_mult == 16.0
    assert p.threshold_u_mult == 15.0
    assert p.penalty_rad_mult == 8.0
    assert p.penalty_log_mult == 20.0
    assert p.penalty_cross_mult == 2.0


def test_constant_profile_exploratory():
    p = ConstantProfile.parse("exploratory:0.05")
    assert not p.is_paper
    assert p.label == "exploratory:0.05"
    assert p.u_hat_mult == pytest.approx(0.8)
    # the loss multiplier never drops below 1: the threshold keeps the erm
    assert p.threshold_loss_mult == 1.0
    assert p.penalty_rad_mult == pytest.approx(0.4)
    assert ConstantProfile.parse("exploratory").scale == 0.25
    assert ConstantProfile.parse("paper").is_paper


def test_constant_profile_validation():
    with pytest.raises(ValueError):
        ConstantProfile.parse("bogus")
    with pytest.raises(ValueError):
        ConstantProfile.exploratory(scale=0.0)
    with pytest.raises(ValueError):
        ConstantProfile.parse("exploratory:-1")


# ---------------------------------------------------------------- moments

def test_expected_log_shatter_continuous_marginal_is_deterministic():
    dist = NoisyRegionDistribution(((0.2, 0.4), (0.6, 0.8)), 0.1)
    c = ModelClass("intervals", k=2)
    m = estimate_expected_log_shatter(c, dist, 50, replicates=20, seed=4)
    # continuous marginal: 50 distinct points almost surely, so no variance
    assert m.se_log <= 1e-12 and m.se_count <= 1e-12
    assert m.mean_log == pytest.approx(math.log(interval_pattern_count(50, 2)))
    assert m.mean_count == pytest.approx(interval_pattern_count(50, 2))
    assert m.replicates == 20
    again = estimate_expected_log_shatter(c, dist, 50, replicates=20, seed=4)
    assert again.mean_log == m.mean_log


def test_expected_log_shatter_chain_inequality():
    # E log S <= log E S <= (1/log 2) E log S, checked on the estimates
    dist = NoisyRegionDistribution(((0.3, 0.7),), 0.2)
    c = ModelClass("intervals", k=1)
    m = estimate_expected_log_shatter(c, dist, 30, replicates=50, seed=8)
    assert m.mean_log <= math.log(m.mean_count) + 1e-9
    assert math.log(m.mean_count) <= m.mean_log / math.log(2) + 1e-9
