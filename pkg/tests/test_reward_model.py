import numpy as np
import pytest

from attrgame.equilibrium import solve_lp
from attrgame.game_core import MixedStrategy, Partition, build_indicator_matrix, indicator_counts
from attrgame.reward_model import (
    ConfidenceInterval,
    QualityTable,
    QualityTableError,
    attack_succeeds,
    build_reward_matrix,
    normalize_reward,
    validate_quality_table,
)
from oracles import cartesian_strategies, random_valid_table

ILLUSTRATION = Partition([[1, 2], [3, 4]])


def collisions(part):
    strategies = cartesian_strategies(part.blocks)
    return np.array([[any(a == b for a, b in zip(s, t)) for t in strategies] for s in strategies])


def pairwise_violations(part, base, att):
    """Independent scan of both collision rules."""
    out = set()
    for l, s in enumerate(cartesian_strategies(part.blocks)):
        for a, t in enumerate(cartesian_strategies(part.blocks)):
            hit = any(x == y for x, y in zip(s, t))
            if hit and not att[l, a] < base[l]:
                out.add((l, a))
            if not hit and abs(att[l, a] - base[l]) > 1e-12:
                out.add((l, a))
    return out


class TestValidate:
    def test_indicator_drops_valid(self):
        counts = indicator_counts(ILLUSTRATION)
        q = QualityTable.from_drops(np.full(4, 0.9), counts)
        assert validate_quality_table(ILLUSTRATION, q) == []

    def test_non_lowered_collision_flagged(self):
        counts = indicator_counts(ILLUSTRATION).astype(float)
        att = 0.9 - counts
        att[0, 1] = 0.9  # strategies (1,3) and (1,4) collide on block 0
        q = QualityTable(np.full(4, 0.9), att)
        v = validate_quality_table(ILLUSTRATION, q)
        assert [(x.kind, x.learner, x.adversary) for x in v] == [("collision_not_lower", 0, 1)]

    def test_changed_no_collision_flagged(self):
        att = 0.9 - indicator_counts(ILLUSTRATION).astype(float)
        att[0, 3] = 0.5  # (1,3) vs (2,4): no collision
        v = validate_quality_table(ILLUSTRATION, QualityTable(np.full(4, 0.9), att))
        assert [(x.kind, x.learner, x.adversary) for x in v] == [("no_collision_changed", 0, 3)]

    def test_missing_is_its_own_kind(self):
        att = 0.9 - indicator_counts(ILLUSTRATION).astype(float)
        att[2, 2] = np.nan
        v = validate_quality_table(ILLUSTRATION, QualityTable(np.full(4, 0.9), att))
        assert [x.kind for x in v] == ["missing"]

    def test_shape_mismatch(self):
        v = validate_quality_table(ILLUSTRATION, QualityTable(np.ones(3)))
        assert v[0].kind == "shape"

    def test_random_tables_match_pairwise_scan(self):
        rng = np.random.default_rng(0)
        part = Partition([[0, 1, 2], [3, 4]])
        collide = collisions(part)
        for trial in range(30):
            base, att = random_valid_table(rng, collide)
            if trial % 2:
                # corrupt a few random cells
                for _ in range(3):
                    l, a = rng.integers(0, 6, size=2)
                    att[l, a] = base[l] + rng.choice([0.0, 0.1, -0.1])
            got = {(v.learner, v.adversary) for v in validate_quality_table(part, QualityTable(base, att))}
            assert got == pairwise_violations(part, base, att)

    def test_asymmetric_clamps_gains(self):
        att = 0.9 - indicator_counts(ILLUSTRATION).astype(float)
        att[0, 1] = 0.95
        q = QualityTable(np.full(4, 0.9), att)
        assert validate_quality_table(ILLUSTRATION, q)
        assert validate_quality_table(ILLUSTRATION, q, asymmetric=True) == []
        r = build_reward_matrix(ILLUSTRATION, q, asymmetric=True)
        assert r.values[0, 1] == pytest.approx(0.9)

    def test_sparse_triplets(self):
        part = ILLUSTRATION
        counts = indicator_counts(part)
        base = [0.8, 0.7, 0.9, 0.6]
        trip = [[l, a, base[l] - 0.1 * counts[l, a]] for l in range(4) for a in range(4) if counts[l, a]]
        q = QualityTable.from_json({"base_quality": base, "attacked_quality": {"triplets": trip}}, part)
        assert validate_quality_table(part, q) == []
        q2 = QualityTable.from_json({"base_quality": base, "attacked_quality": {"triplets": trip[1:]}}, part)
        assert [v.kind for v in validate_quality_table(part, q2)] == ["missing"]


class TestRewardMatrix:
    def test_no_collision_equals_base(self):
        base = np.array([0.8, 0.7, 0.9, 0.6])
        q = QualityTable.from_drops(base, 0.1 * indicator_counts(ILLUSTRATION))
        r = build_reward_matrix(ILLUSTRATION, q)
        assert r.values[0, 3] == base[0]  # (1,3) vs (2,4)
        assert r.provenance == "reward"

    def test_substitution(self):
        # Q(l)=0.8, Q(l,a)=0.6 on a colliding pair gives R = 0.8 + 0.2
        part = Partition([[1, 2]])
        q = QualityTable([0.8, 0.8], [[0.6, 0.8], [0.8, 0.6]])
        assert build_reward_matrix(part, q).values[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_entrywise_brute_force(self):
        rng = np.random.default_rng(4)
        base, att = random_valid_table(rng, collisions(ILLUSTRATION))
        r = build_reward_matrix(ILLUSTRATION, QualityTable(base, att)).values
        for l in range(4):
            for a in range(4):
                assert r[l, a] == base[l] + (base[l] - att[l, a])

    def test_invalid_rejected(self):
        att = np.full((4, 4), 0.9)
        with pytest.raises(QualityTableError):
            build_reward_matrix(ILLUSTRATION, QualityTable(np.full(4, 0.9), att))

    def test_constant_quality_value(self):
        # uniform per-collision drop d on constant Q0: value = Q0 + d * sum 1/|B_i|
        part = Partition([[0, 1, 2], [3, 4]])
        q0, d = 0.85, 0.07
        q = QualityTable.from_drops(np.full(part.num_strategies, q0), d * indicator_counts(part))
        res = solve_lp(build_reward_matrix(part, q))
        assert res.value == pytest.approx(q0 + d * part.uniform_value(), abs=1e-9)


class TestNormalize:
    def test_constant_q_gives_gaps(self):
        counts = indicator_counts(ILLUSTRATION)
        q = QualityTable.from_drops(np.full(4, 0.75), 0.05 * counts)
        n = normalize_reward(build_reward_matrix(ILLUSTRATION, q), q)
        np.testing.assert_allclose(n.values, 0.05 * counts, atol=1e-15)

    def test_recovers_indicator_matrix(self):
        counts = indicator_counts(ILLUSTRATION)
        q = QualityTable.from_drops(np.full(4, 3.0), counts)
        n = normalize_reward(build_reward_matrix(ILLUSTRATION, q), q)
        np.testing.assert_array_equal(n.values, build_indicator_matrix(ILLUSTRATION).values)

    def test_zero_off_collision_positive_on(self):
        rng = np.random.default_rng(8)
        collide = collisions(ILLUSTRATION)
        base, att = random_valid_table(rng, collide)
        q = QualityTable(base, att)
        n = normalize_reward(build_reward_matrix(ILLUSTRATION, q), q).values
        assert np.all(n[~collide] == 0.0) and np.all(n[collide] > 0)

    def test_adversary_best_responses_preserved(self):
        rng = np.random.default_rng(12)
        part = Partition([[0, 1, 2], [3, 4]])
        collide = collisions(part)
        for _ in range(20):
            base, att = random_valid_table(rng, collide)
            q = QualityTable(base, att)
            r = build_reward_matrix(part, q).values
            n = normalize_reward(build_reward_matrix(part, q), q).values
            x = MixedStrategy.from_weights(rng.random(part.num_strategies)).expand()
            # row shifts move every column payoff by the same x.Q
            np.testing.assert_allclose(x @ r - x @ n, np.full(6, x @ base), atol=1e-12)
            assert np.argmax(x @ r) == np.argmax(x @ n)

    def test_constant_q_same_strategies(self):
        part = Partition([[0, 1, 2], [3, 4]])
        rng = np.random.default_rng(13)
        collide = collisions(part)
        drops = np.where(collide, rng.uniform(0.05, 0.3, (6, 6)), 0.0)
        q = QualityTable.from_drops(np.full(6, 0.8), drops)
        a = solve_lp(build_reward_matrix(part, q))
        b = solve_lp(normalize_reward(build_reward_matrix(part, q), q))
        assert a.value - 0.8 == pytest.approx(b.value, abs=1e-9)
        np.testing.assert_allclose(a.adversary_strategy.expand(), b.adversary_strategy.expand(), atol=1e-7)
        np.testing.assert_allclose(a.learner_strategy.expand(), b.learner_strategy.expand(), atol=1e-7)

    def test_nonconstant_q_can_move_adversary_equilibrium(self):
        # matching game with gaps g on the diagonal and base qualities q0 != q1:
        # the original game's adversary plays y0 = (q1 - q0 + g) / (2g), the shifted one 1/2
        part = Partition([[0, 1]])
        q0, q1, g = 0.8, 0.9, 0.4
        q = QualityTable([q0, q1], [[q0 - g, q0], [q1, q1 - g]])
        a = solve_lp(build_reward_matrix(part, q))
        b = solve_lp(normalize_reward(build_reward_matrix(part, q), q))
        assert a.adversary_strategy.expand()[0] == pytest.approx((q1 - q0 + g) / (2 * g), abs=1e-9)
        assert b.adversary_strategy.expand()[0] == pytest.approx(0.5, abs=1e-9)


class TestAttackSucceeds:
    interval = ConfidenceInterval(0.8, 0.05)

    @pytest.mark.parametrize("reward, expected", [(0.83, False), (0.8, False), (0.9, True), (0.7, True)])
    def test_cases(self, reward, expected):
        assert attack_succeeds(0.8, self.interval, reward) is expected

    def test_boundary_is_failure(self):
        lo, hi = self.interval.bounds
        assert not attack_succeeds(0.8, self.interval, lo)
        assert not attack_succeeds(0.8, self.interval, hi)

    def test_bad_half_width(self):
        with pytest.raises(ValueError):
            ConfidenceInterval(0.8, 0.0)
        with pytest.raises(ValueError):
            ConfidenceInterval(0.8, -0.1)

    def test_off_center(self):
        with pytest.raises(ValueError):
            attack_succeeds(0.7, self.interval, 0.75)

    def test_monotone_in_distance(self):
        dists = np.linspace(0, 0.2, 101)
        results = [attack_succeeds(0.8, self.interval, 0.8 + d) for d in dists]
        # once the attack succeeds it keeps succeeding further out
        first = results.index(True)
        assert not any(results[:first]) and all(results[first:])
        results = [attack_succeeds(0.8, self.interval, 0.8 - d) for d in dists]
        first = results.index(True)
        assert not any(results[:first]) and all(results[first:])
