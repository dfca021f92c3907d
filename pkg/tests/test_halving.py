import numpy as np
import pytest

from conftest import CallRecorder, rand_dense
from corrmedoid import (
    CorrShConfig,
    SyntheticSpec,
    ceil_log2,
    corr_seq_halving,
    doubling_corrsh,
    exact_medoid,
    gen_synthetic,
    round_budget,
    sum_block,
)


def test_ceil_log2():
    assert [ceil_log2(n) for n in (1, 2, 3, 4, 5, 8, 9, 1000)] == [1, 1, 2, 2, 3, 3, 4, 10]
    with pytest.raises(ValueError):
        ceil_log2(0)


def test_round_budget_examples():
    # even split, floored, clamped to [1, n]
    assert round_budget(1000, 100, 100) == 1  # 1000 / (100*7) floors to 1
    assert round_budget(1, 100, 100) == 1  # clamp up
    assert round_budget(10**9, 100, 100) == 100  # clamp down at n
    assert round_budget(4200, 100, 50) == 12
    n = 64
    assert round_budget(n * n * ceil_log2(n), n, n) == n  # exact from round 0
    with pytest.raises(ValueError):
        round_budget(0, 10, 5)
    with pytest.raises(ValueError):
        round_budget(10, 10, 11)


def test_config_validation():
    with pytest.raises(ValueError):
        CorrShConfig(0)


def _run(ds, metric, T, seed=0, reuse=True, recorder=None):
    return corr_seq_halving(ds, metric, CorrShConfig(T, seed, reuse), recorder)


def test_halving_schedule_and_round_cap():
    for seed in range(10):
        ds = rand_dense(seed, 50, 3)
        res = _run(ds, "l2", 50 * ceil_log2(50), seed=seed)
        sizes = [t.surviving for t in res.trace]
        assert sizes[0] == 50
        for a, b in zip(sizes, sizes[1:]):
            assert b == (a + 1) // 2
        assert len(res.trace) <= ceil_log2(50)


def test_exact_branch_round_zero_bit_identical():
    for seed in range(5):
        ds = rand_dense(100 + seed, 23, 4)
        want_idx, _ = exact_medoid(ds, "l2")
        res = _run(ds, "l2", 23 * 23 * ceil_log2(23), seed=seed)
        assert len(res.trace) == 1
        assert res.trace[0].exact_branch
        assert res.chosen == want_idx
        assert res.fresh_pulls == 23 * 23


def test_shared_references_within_round():
    # every surviving arm must be evaluated against the same reference block
    for seed in range(5):
        ds = rand_dense(200 + seed, 40, 3)
        rec = CallRecorder()
        res = _run(ds, "l2", 40 * ceil_log2(40) * 3, seed=seed, recorder=rec)
        assert len(rec.calls) == len(res.trace)
        for (rows, cols), tr in zip(rec.calls, res.trace):
            assert len(rows) == tr.surviving
            # with reuse on, the evaluated columns are the round's fresh refs
            assert set(cols.tolist()) <= set(tr.refs.tolist())
            assert len(set(cols.tolist())) == len(cols)


def test_budget_invariant_in_regime():
    rng = np.random.default_rng(0)
    for trial in range(50):
        n = int(rng.integers(2, 80))
        d = int(rng.integers(1, 6))
        ds = rand_dense(1000 + trial, n, d)
        L = ceil_log2(n)
        T = int(rng.integers(n * L, 4 * n * n * L))
        for reuse in (True, False):
            res = _run(ds, "l1", T, seed=trial, reuse=reuse)
            assert res.fresh_pulls <= T
            assert not res.below_theorem_regime


def test_below_regime_flag_and_completion():
    ds = rand_dense(4, 32, 3)
    res = _run(ds, "l2", 5)
    assert res.below_theorem_regime
    assert 0 <= res.chosen < 32
    for tr in res.trace:
        assert tr.t_r == 1  # clamp keeps one reference per round


def test_reuse_off_estimator_is_round_mean():
    # reconstruct round-1 estimates from the trace and check the survivor set
    ds = rand_dense(9, 16, 3)
    res = _run(ds, "l1", 16 * ceil_log2(16) * 2, reuse=False)
    tr0, tr1 = res.trace[0], res.trace[1]
    theta0 = sum_block(ds, "l1", np.arange(16, dtype=np.int64), tr0.refs) / tr0.t_r
    order = np.lexsort((np.arange(16), theta0))
    want_survivors = np.sort(order[:8])
    assert tr1.surviving == 8
    rows1 = want_survivors
    theta1 = sum_block(ds, "l1", rows1, tr1.refs) / tr1.t_r
    # the final survivor chain must be consistent with these estimates
    keep2 = np.sort(rows1[np.lexsort((rows1, theta1))[:4]])
    assert res.trace[2].surviving == 4
    rec = CallRecorder()
    res2 = _run(ds, "l1", 16 * ceil_log2(16) * 2, reuse=False, recorder=rec)
    assert np.array_equal(rec.calls[1][0], want_survivors)
    assert np.array_equal(rec.calls[2][0], keep2)
    assert res2.chosen == res.chosen


def test_reuse_on_unions_past_references():
    # round r estimate divides by the union size, not the round size
    ds = rand_dense(11, 20, 3)
    rec = CallRecorder()
    res = _run(ds, "l1", 20 * ceil_log2(20) * 2, recorder=rec)
    union = set()
    for (rows, cols), tr in zip(rec.calls, res.trace):
        fresh = set(cols.tolist())
        assert not (fresh & union)  # only unseen references are evaluated
        union |= fresh
    assert res.fresh_pulls == sum(len(r) * len(c) for r, c in rec.calls)


def test_deterministic_same_seed_distinct_across_seeds():
    ds = rand_dense(21, 64, 4)
    a = _run(ds, "l2", 64 * 6 * 2, seed=5)
    b = _run(ds, "l2", 64 * 6 * 2, seed=5)
    assert a.chosen == b.chosen
    assert a.fresh_pulls == b.fresh_pulls
    assert all(np.array_equal(x.refs, y.refs) for x, y in zip(a.trace, b.trace))
    refs_differ = any(
        not np.array_equal(x.refs, y.refs)
        for x, y in zip(a.trace, _run(ds, "l2", 64 * 6 * 2, seed=6).trace)
    )
    assert refs_differ


def test_n_equals_one():
    ds = gen_synthetic(SyntheticSpec("line-1d", 1))
    res = _run(ds, "l1", 10)
    assert res.chosen == 0
    assert res.fresh_pulls == 0
    assert res.trace == []


def test_error_rate_drops_with_budget():
    # seeded sweep; hard gaussian instance, error must fall as T grows
    ds = gen_synthetic(SyntheticSpec("gaussian-clusters", 64, 4, seed=7))
    truth, _ = exact_medoid(ds, "l2")
    L = ceil_log2(64)
    errs = []
    for mult in (1, 8, 64):
        bad = 0
        for seed in range(60):
            if _run(ds, "l2", 64 * L * mult, seed=seed).chosen != truth:
                bad += 1
        errs.append(bad)
    assert errs[-1] == 0  # exact regime at T = n^2 L
    assert errs[0] >= errs[-1]


def test_full_budget_always_exact():
    for seed in range(20):
        n = 2 + seed
        ds = rand_dense(3000 + seed, n, 3)
        truth, _ = exact_medoid(ds, "cosine")
        res = _run(ds, "cosine", n * n * ceil_log2(n), seed=seed)
        assert res.chosen == truth


def test_doubling_terminates_and_agrees():
    for seed in range(10):
        ds = rand_dense(4000 + seed, 40, 3)
        truth, _ = exact_medoid(ds, "l2")
        res = doubling_corrsh(ds, "l2", T0=40, seed=seed)
        assert 0 <= res.chosen < 40
        # capped runs are exact, so the wrapper can never run forever; with
        # a tiny T0 it should still usually settle on the true medoid
        assert res.fresh_pulls > 0
    big = doubling_corrsh(ds, "l2", T0=40 * 40 * ceil_log2(40), seed=0)
    assert big.chosen == truth


def test_doubling_stops_after_two_agreeing_runs():
    ds = rand_dense(5000, 30, 3)
    cap = 30 * 30 * ceil_log2(30)
    res = doubling_corrsh(ds, "l2", T0=cap, seed=1)
    # both runs hit the cap, are exact, and agree immediately
    exact_rounds = [t for t in res.trace if t.exact_branch]
    assert len(exact_rounds) == 2
    assert res.fresh_pulls <= 2 * cap
