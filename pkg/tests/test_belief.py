import numpy as np
import pytest

from sarsim.belief import (BeliefExhausted, ParticleEnsemble, Rect,
                           containment_rect_from_grid)
from sarsim.environment import ConfigError, GridWorld

WORLD = GridWorld((0.0, 0.0), 100.0, 100, 100)


def make_ensemble(positions, miss_prob=0.0, weights=None):
    return ParticleEnsemble(target_id=0, positions=np.asarray(positions, float),
                            miss_prob=miss_prob, weights=weights)


def dense_bayes_update(positions, weights, alive, cell, world, miss_prob):
    """Straight-line likelihood-times-prior reference, no vector tricks."""
    post = []
    for (x, y), w, a in zip(positions, weights, alive):
        if not a:
            post.append(0.0)
            continue
        cx = int(np.floor((x - world.origin[0]) / world.cell_size))
        cy = int(np.floor((y - world.origin[1]) / world.cell_size))
        like = miss_prob if (cx, cy) == tuple(cell) else 1.0 - miss_prob
        post.append(w * like)
    total = sum(post)
    if total == 0.0:
        return post
    return [p / total for p in post]


class TestNegativeUpdate:
    def test_erasure_renormalizes_survivors(self):
        # 4 of 10 particles in the observed cell: they die, the rest get 1/6
        pos = [[50, 50]] * 4 + [[250, 250]] * 6
        ens = make_ensemble(pos)
        assert ens.negative_update((0, 0), WORLD)
        assert ens.alive_count == 6
        assert np.allclose(ens.weights[4:], 1.0 / 6.0)
        assert np.all(ens.weights[:4] == 0.0)

    def test_hand_computed_bayes_for_uniform_prior(self):
        # miss prob 0.1, 4 of 10 inside: posterior in-cell 0.1/5.8, out 0.9/5.8
        pos = [[50, 50]] * 4 + [[250, 250]] * 6
        ens = make_ensemble(pos, miss_prob=0.1)
        ens.negative_update((0, 0), WORLD)
        assert np.allclose(ens.weights[:4], 1.0 / 58.0)
        assert np.allclose(ens.weights[4:], 9.0 / 58.0)
        assert ens.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_empty_cell_observation_is_identity(self):
        rng = np.random.default_rng(0)
        pos = rng.uniform(1000, 2000, (50, 2))
        for eps in (0.0, 0.25):
            ens = make_ensemble(pos, miss_prob=eps)
            before = ens.weights.copy()
            ens.negative_update((90, 90), WORLD)
            assert np.allclose(ens.weights, before, atol=1e-15)

    def test_idempotent_for_perfect_sensor(self):
        rng = np.random.default_rng(1)
        pos = rng.uniform(0, 1000, (200, 2))
        ens = make_ensemble(pos)
        ens.negative_update((3, 3), WORLD)
        w1 = ens.weights.copy()
        a1 = ens.alive.copy()
        ens.negative_update((3, 3), WORLD)
        assert np.array_equal(w1, ens.weights)
        assert np.array_equal(a1, ens.alive)

    @pytest.mark.parametrize("eps", [0.0, 0.1, 0.5])
    def test_matches_dense_reference_to_1e12(self, eps):
        rng = np.random.default_rng(7)
        for trial in range(20):
            n = int(rng.integers(5, 100))
            pos = rng.uniform(0, 1500, (n, 2))
            w = rng.uniform(0.1, 2.0, n)
            w /= w.sum()
            ens = ParticleEnsemble(0, pos, miss_prob=eps, weights=w)
            cell = (int(rng.integers(0, 15)), int(rng.integers(0, 15)))
            expect = dense_bayes_update(pos, w, [True] * n, cell, WORLD, eps)
            ens.negative_update(cell, WORLD)
            if sum(expect) == 0.0:
                assert ens.exhausted
            else:
                assert np.allclose(ens.weights, expect, atol=1e-12)

    def test_normalization_preserved_over_many_updates(self):
        rng = np.random.default_rng(9)
        pos = rng.uniform(0, 3000, (500, 2))
        ens = make_ensemble(pos)
        alive_history = [ens.alive_count]
        for _ in range(200):
            cell = (int(rng.integers(0, 30)), int(rng.integers(0, 30)))
            if not ens.negative_update(cell, WORLD):
                break
            assert ens.weights[ens.alive].sum() == pytest.approx(1.0, abs=1e-9)
            alive_history.append(ens.alive_count)
        assert all(b <= a for a, b in zip(alive_history, alive_history[1:]))

    def test_erased_cell_holds_no_alive_particles(self):
        rng = np.random.default_rng(11)
        pos = rng.uniform(0, 500, (300, 2))
        ens = make_ensemble(pos)
        ens.negative_update((2, 2), WORLD)
        ij = WORLD.cells_of(ens.positions[ens.alive])
        assert not np.any((ij[:, 0] == 2) & (ij[:, 1] == 2))

    def test_exhaustion_signals_false(self):
        ens = make_ensemble([[50, 50], [60, 60]])
        assert not ens.negative_update((0, 0), WORLD)
        assert ens.exhausted
        with pytest.raises(BeliefExhausted):
            ens.center_of_gravity()


class TestResampling:
    def test_uniform_weights_do_not_resample(self):
        ens = make_ensemble(np.random.default_rng(0).uniform(0, 100, (64, 2)),
                            miss_prob=0.1)
        assert ens.effective_sample_size() == pytest.approx(64.0)
        assert not ens.maybe_resample(np.random.default_rng(1))

    def test_degenerate_weight_resamples_to_copies(self):
        pos = np.arange(20, dtype=float).repeat(2).reshape(20, 2)
        w = np.zeros(20)
        w[7] = 1.0
        ens = ParticleEnsemble(0, pos, miss_prob=0.1, weights=w)
        assert ens.effective_sample_size() == pytest.approx(1.0)
        assert ens.maybe_resample(np.random.default_rng(2))
        assert np.allclose(ens.weights, 1.0 / 20)
        assert np.all(ens.positions == pos[7])

    def test_resample_frequencies_match_weights(self):
        from scipy import stats
        pos = np.arange(10, dtype=float).repeat(2).reshape(10, 2)
        w = np.exp(0.8 * np.arange(10.0))
        w /= w.sum()
        ens_probe = ParticleEnsemble(0, pos, miss_prob=0.1, weights=w)
        assert ens_probe.effective_sample_size() < 5.0
        counts = np.zeros(10)
        trials = 400
        for k in range(trials):
            ens = ParticleEnsemble(0, pos, miss_prob=0.1, weights=w)
            assert ens.maybe_resample(np.random.default_rng(1000 + k))
            for row in ens.positions[:, 0].astype(int):
                counts[row] += 1
        expected = w * 10 * trials
        # Pool the rare low-weight bins so the chi-square approximation holds
        pooled = np.concatenate(([counts[:5].sum()], counts[5:]))
        pooled_exp = np.concatenate(([expected[:5].sum()], expected[5:]))
        _, p = stats.chisquare(pooled, pooled_exp)
        assert p > 1e-3


class TestCenterOfGravity:
    def test_midpoint(self):
        ens = make_ensemble([[0, 0], [2, 0]])
        assert ens.center_of_gravity() == pytest.approx((1.0, 0.0))

    def test_weighted_mean(self):
        ens = ParticleEnsemble(0, np.array([[0.0, 0.0], [4.0, 0.0]]),
                               weights=np.array([0.75, 0.25]))
        assert ens.center_of_gravity() == pytest.approx((1.0, 0.0))

    def test_within_clt_bound_of_gaussian_center(self):
        rng = np.random.default_rng(5)
        sigma, n = 500.0, 10_000
        center = np.array([4000.0, 4000.0])
        pos = center + sigma * rng.standard_normal((n, 2))
        ens = make_ensemble(pos)
        cog = ens.center_of_gravity()
        assert np.linalg.norm(cog - center) <= 3.0 * sigma / np.sqrt(n) * 2.0


class TestContainmentRect:
    def test_near_one_returns_bounding_box(self):
        rng = np.random.default_rng(6)
        pos = rng.uniform(500, 4500, (400, 2))
        ens = make_ensemble(pos)
        rect = ens.containment_rect(0.999999, WORLD)
        ij = WORLD.cells_of(pos)
        assert rect.i_min == ij[:, 0].min()
        assert rect.i_max == ij[:, 0].max()
        assert rect.j_min == ij[:, 1].min()
        assert rect.j_max == ij[:, 1].max()

    def test_line_of_particles_half_mass(self):
        # 10 cells in a row, uniform mass; the half-mass rect must stay
        # strictly inside the bounding box along x
        pos = [[50 + 100 * k, 50] for k in range(10)]
        ens = make_ensemble(pos)
        rect = ens.containment_rect(0.5, WORLD)
        contained = sum(1 for p in pos if rect.contains(*WORLD.cell_of(p))) / 10.0
        assert contained >= 0.5
        assert rect.i_max - rect.i_min < 9
        assert rect.j_min == rect.j_max == 0

    def test_always_holds_requested_mass(self):
        rng = np.random.default_rng(8)
        for trial in range(300):
            n = int(rng.integers(2, 400))
            pos = rng.uniform(0, 9000, (n, 2))
            if rng.random() < 0.5:
                w = rng.uniform(0.01, 1.0, n)
                w /= w.sum()
            else:
                w = None
            eta = float(rng.uniform(0.05, 0.97))
            ens = ParticleEnsemble(0, pos, weights=w)
            rect = ens.containment_rect(eta, WORLD)
            ij = WORLD.cells_of(pos, clip=True)
            inside = ((ij[:, 0] >= rect.i_min) & (ij[:, 0] <= rect.i_max)
                      & (ij[:, 1] >= rect.j_min) & (ij[:, 1] <= rect.j_max))
            assert ens.weights[inside].sum() >= eta - 1e-9

    def test_tight_cluster_collapses_to_one_cell(self):
        pos = np.full((50, 2), 1234.0)
        ens = make_ensemble(pos)
        rect = ens.containment_rect(0.9, WORLD)
        assert (rect.width, rect.height) == (1, 1)
        assert rect.contains(12, 12)

    def test_matches_grid_level_function(self):
        rng = np.random.default_rng(12)
        pos = rng.normal(5000, 600, (2000, 2))
        ens = make_ensemble(pos)
        bbox, grid = ens.cell_weight_grid(WORLD)
        assert ens.containment_rect(0.75, WORLD) == containment_rect_from_grid(bbox, grid, 0.75)

    def test_eta_validation(self):
        ens = make_ensemble([[50, 50]])
        with pytest.raises(ConfigError):
            ens.containment_rect(0.0, WORLD)
        with pytest.raises(ConfigError):
            ens.containment_rect(1.0, WORLD)


class TestRect:
    def test_geometry_helpers(self):
        r = Rect(2, 5, 1, 3)
        assert r.width == 4 and r.height == 3 and r.area == 12
        assert r.contains(2, 3) and not r.contains(6, 2)
        assert r.nearest_cell(0, 0) == (2, 1)
        assert r.nearest_cell(9, 2) == (5, 2)
        assert set(r.corners()) == {(2, 1), (5, 1), (2, 3), (5, 3)}

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            Rect(3, 2, 0, 0)

    def test_expanded_clips_to_world(self):
        r = Rect(0, 2, 0, 2)
        grown = r.expanded(2, WORLD)
        assert grown == Rect(0, 4, 0, 4)
