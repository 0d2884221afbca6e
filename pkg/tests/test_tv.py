import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvhosvd.tv import (
    TvConfig,
    forward_diff,
    gradient_magnitude,
    laplacian,
    shrink,
    tv_complete,
    tv_norm,
    tv_step,
)

shapes = st.lists(st.integers(1, 5), min_size=1, max_size=4).map(tuple)


# ---- naive oracles: explicit index loops, written straight from the formulas


def naive_forward_diff(x, i):
    out = np.zeros_like(x)
    for idx in itertools.product(*(range(d) for d in x.shape)):
        if idx[i] < x.shape[i] - 1:
            nxt = list(idx)
            nxt[i] += 1
            out[idx] = x[tuple(nxt)] - x[idx]
    return out


def naive_laplacian(x):
    out = np.zeros_like(x)
    for idx in itertools.product(*(range(d) for d in x.shape)):
        total = 0.0
        for i in range(x.ndim):
            if 0 < idx[i] < x.shape[i] - 1:
                lo, hi = list(idx), list(idx)
                lo[i] -= 1
                hi[i] += 1
                total += x[tuple(lo)] + x[tuple(hi)] - 2 * x[idx]
        out[idx] = total
    return out


def naive_tv(x):
    total = 0.0
    for idx in itertools.product(*(range(d) for d in x.shape)):
        sq = 0.0
        for i in range(x.ndim):
            if idx[i] < x.shape[i] - 1:
                nxt = list(idx)
                nxt[i] += 1
                sq += (x[tuple(nxt)] - x[idx]) ** 2
        total += np.sqrt(sq)
    return total


class TestForwardDiff:
    def test_constant(self):
        assert not np.any(forward_diff(np.full((3, 4, 2), 7.0), 1))

    def test_ramp(self):
        x = np.arange(4.0).reshape(4, 1, 1)
        assert np.array_equal(forward_diff(x, 0).ravel(), [1, 1, 1, 0])

    def test_naive_oracle(self):
        x = np.random.default_rng(0).standard_normal((4, 4, 4))
        assert np.array_equal(forward_diff(x, 1), naive_forward_diff(x, 1))

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            forward_diff(np.ones((2, 2)), 2)


class TestLaplacian:
    def test_constant(self):
        assert not np.any(laplacian(np.full((4, 3, 5), -2.0)))

    def test_squares(self):
        x = np.array([0.0, 1, 4, 9, 16]).reshape(5, 1, 1)
        assert np.array_equal(laplacian(x).ravel(), [0, 2, 2, 2, 0])

    def test_naive_oracle(self):
        x = np.random.default_rng(1).standard_normal((4, 5, 3))
        assert np.array_equal(laplacian(x), naive_laplacian(x))

    def test_corners_never_move(self):
        x = np.random.default_rng(2).standard_normal((4, 4, 4))
        lap = laplacian(x)
        for c in itertools.product((0, 3), repeat=3):
            assert lap[c] == 0.0


class TestShrink:
    @pytest.mark.parametrize("x,lam,expected", [(3.0, 1.0, 2.0), (-0.5, 1.0, 0.0), (-2.0, 0.5, -1.5)])
    def test_examples(self, x, lam, expected):
        assert shrink(x, lam) == expected

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            shrink(1.0, -0.1)

    @given(x=st.floats(-1e6, 1e6), lam=st.floats(0, 1e3))
    def test_contraction(self, x, lam):
        y = shrink(x, lam)
        assert abs(y) <= abs(x)
        assert abs(y) <= max(abs(x) - lam, 0.0) + 1e-9
        assert y == 0 or np.sign(y) == np.sign(x)
        assert shrink(x, 0.0) == x

    def test_array(self):
        out = shrink(np.array([3.0, -0.5, -2.0]), 0.5)
        assert np.array_equal(out, [2.5, 0.0, -1.5])


class TestTvNorm:
    def test_constant(self):
        assert tv_norm(np.full((3, 3, 3), 4.0)) == 0.0

    def test_single_difference(self):
        assert tv_norm(np.array([0.0, 3.0]).reshape(2, 1, 1)) == 3.0

    def test_naive_oracle(self):
        x = np.random.default_rng(3).standard_normal((5, 5, 5))
        assert tv_norm(x) == pytest.approx(naive_tv(x), rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(shape=shapes, seed=st.integers(0, 2**16), c=st.floats(-100, 100))
    def test_constant_shift_invariance(self, shape, seed, c):
        x = np.random.default_rng(seed).standard_normal(shape)
        assert tv_norm(x + c) == pytest.approx(tv_norm(x), rel=1e-12, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(shape=shapes, seed=st.integers(0, 2**16), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_operators_linear(shape, seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(shape), rng.standard_normal(shape)
    np.testing.assert_allclose(laplacian(a * x + b * y), a * laplacian(x) + b * laplacian(y), atol=1e-12)
    for i in range(len(shape)):
        np.testing.assert_allclose(forward_diff(a * x + b * y, i),
                                   a * forward_diff(x, i) + b * forward_diff(y, i), atol=1e-12)


class TestConfig:
    def test_defaults(self):
        cfg = TvConfig()
        assert (cfg.max_iters, cfg.lam, cfg.step0, cfg.schedule, cfg.converge_tol) == (5000, 0.01, 0.1, "invsqrt", 1e-4)

    def test_schedules(self):
        assert TvConfig(step0=0.2, schedule="fixed").step(10) == 0.2
        assert TvConfig(step0=0.2).step(3) == pytest.approx(0.1)

    @pytest.mark.parametrize("kwargs", [{"max_iters": 0}, {"lam": -1}, {"step0": 0}, {"schedule": "cosine"},
                                        {"converge_tol": 0}])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            TvConfig(**kwargs)


class TestTvStep:
    def test_flat_region_guard(self):
        x = np.zeros((4, 4, 4))
        x[2, 2, 2] = 1.0
        new, _ = tv_step(x, 0.1, 0.0)
        # entries far from the bump have zero gradient and stay put
        assert new[0, 0, 0] == 0.0
        assert np.all(np.isfinite(new))

    def test_unclamped_matches_formula(self):
        x = np.random.default_rng(4).standard_normal((4, 5, 3))
        h, lam = 0.05, 0.01
        mag = gradient_magnitude(x)
        # the far corner has no forward differences at all: guarded to zero
        assert mag[-1, -1, -1] == 0.0
        ratio = laplacian(x) / np.where(mag == 0, 1.0, mag)
        expected = x + h * shrink(ratio, lam)
        new, tv = tv_step(x, h, lam, cfl_clamp=False)
        np.testing.assert_allclose(new, expected, rtol=0, atol=1e-14)
        assert tv == pytest.approx(tv_norm(x), rel=1e-14)

    def test_clamp_bounds_the_step(self):
        x = np.random.default_rng(5).standard_normal((5, 5, 5)) * 1e-6
        h = 0.1
        new, _ = tv_step(x, h, 0.0)
        bound = h * np.abs(laplacian(x)) / (2 * x.ndim * h)
        assert np.all(np.abs(new - x) <= bound + 1e-18)


def random_problem(seed, shape=(6, 6, 6), rate=0.5):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(shape)
    mask = rng.random(shape) < rate
    return t, mask, np.where(mask, t, 0.0)


class TestTvComplete:
    def test_full_mask(self):
        t, _, _ = random_problem(0)
        full = np.ones(t.shape, dtype=bool)
        rep = tv_complete(t, full, None, TvConfig())
        assert rep.converged and rep.iterations == 1
        assert np.array_equal(rep.recovered, t)
        assert all(d == 0.0 for d in rep.step_deltas)

    @pytest.mark.parametrize("seed", range(5))
    def test_constant_completion(self, seed):
        # corners see no Laplacian at all, so an unobserved corner would keep
        # its initial zero forever; keep them observed
        rng = np.random.default_rng(seed)
        mask = rng.random((6, 6, 6)) < 0.5
        for c in itertools.product((0, 5), repeat=3):
            mask[c] = True
        obs = np.where(mask, 2.5, 0.0)
        cfg = TvConfig(lam=0.0)
        rep = tv_complete(obs, mask, None, cfg)
        assert rep.converged
        assert np.max(np.abs(rep.recovered - 2.5)) <= 10 * cfg.converge_tol

    def test_constant_input_is_stationary(self):
        mask = np.random.default_rng(6).random((4, 4, 4)) < 0.5
        rep = tv_complete(np.where(mask, 1.5, 0.0), mask, np.full((4, 4, 4), 1.5), TvConfig(max_iters=3))
        assert rep.step_deltas[0] == 0.0
        assert np.all(rep.recovered == 1.5)

    def test_report_bookkeeping(self):
        t, mask, obs = random_problem(7)
        cfg = TvConfig(max_iters=25, converge_tol=1e-12)
        rep = tv_complete(obs, mask, None, cfg)
        assert rep.iterations == 25 and not rep.converged
        assert len(rep.step_deltas) == len(rep.tv_norms) == 25
        assert rep.final_tv == pytest.approx(tv_norm(rep.recovered))

    def test_step_deltas_match_recomputation(self):
        t, mask, obs = random_problem(8)
        reps = [tv_complete(obs, mask, None, TvConfig(max_iters=k)) for k in (3, 4)]
        delta = np.linalg.norm(reps[1].recovered - reps[0].recovered)
        assert reps[1].step_deltas[3] == pytest.approx(delta, rel=1e-12)

    def test_off_mask_data_ignored(self):
        t, mask, obs = random_problem(9)
        cfg = TvConfig(max_iters=20)
        a = tv_complete(obs, mask, None, cfg).recovered
        b = tv_complete(np.where(mask, t, 0.0), mask, None, cfg).recovered
        assert np.array_equal(a, b)

    def test_determinism(self):
        t, mask, obs = random_problem(10)
        cfg = TvConfig(max_iters=50)
        a = tv_complete(obs, mask, None, cfg)
        b = tv_complete(obs, mask, None, cfg)
        assert a.recovered.tobytes() == b.recovered.tobytes()
        assert a.step_deltas == b.step_deltas

    def test_shape_errors(self):
        t, mask, obs = random_problem(11)
        with pytest.raises(ValueError):
            tv_complete(obs, mask[:5], None)
        with pytest.raises(ValueError):
            tv_complete(obs, mask, np.zeros((6, 6, 5)))

    def test_warm_start_from_truth_stops_at_once(self):
        x = np.linspace(0, 1, 8)
        t = np.add.outer(np.add.outer(x, x), x)
        mask = np.random.default_rng(12).random(t.shape) < 0.5
        rep = tv_complete(np.where(mask, t, 0.0), mask, t, TvConfig(lam=0.0))
        # a linear ramp has zero Laplacian in the interior, so nothing moves
        assert rep.iterations == 1 and rep.converged


@settings(max_examples=25, deadline=None)
@given(
    shape=st.lists(st.integers(1, 6), min_size=1, max_size=4).map(tuple),
    rate=st.floats(0.05, 1.0),
    seed=st.integers(0, 2**16),
    lam=st.floats(0.0, 0.1),
    step0=st.floats(0.01, 1.0),
    schedule=st.sampled_from(["fixed", "invsqrt"]),
    warm=st.booleans(),
    max_iters=st.integers(1, 60),
)
def test_interpolation_invariant(shape, rate, seed, lam, step0, schedule, warm, max_iters):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(shape)
    mask = rng.random(shape) < rate
    obs = np.where(mask, t, 0.0)
    init = rng.standard_normal(shape) if warm else None
    cfg = TvConfig(max_iters=max_iters, lam=lam, step0=step0, schedule=schedule)
    rep = tv_complete(obs, mask, init, cfg)
    assert np.array_equal(rep.recovered[mask], obs[mask])
    assert rep.iterations <= max_iters and len(rep.step_deltas) == rep.iterations
