import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attrgame.game_core import (
    DimensionError,
    MixedStrategy,
    Partition,
    PartitionError,
    PayoffMatrix,
    PureStrategy,
    StrategySpaceTooLarge,
    build_indicator_matrix,
    enumerate_pure_strategies,
    expected_payoff,
    indicator_counts,
    indicator_payoff,
    strategy_from_index,
    strategy_index,
)
from oracles import brute_expectation, cartesian_strategies, indicator_by_loops

ILLUSTRATION = [[1, 2], [3, 4]]


@st.composite
def partitions(draw, max_k=4, max_block=5):
    sizes = draw(st.lists(st.integers(1, max_block), min_size=1, max_size=max_k))
    ids = draw(st.permutations(list(range(sum(sizes)))))
    blocks, i = [], 0
    for s in sizes:
        blocks.append(ids[i:i + s])
        i += s
    return Partition(blocks)


class TestPartition:
    def test_properties(self):
        p = Partition([[4, 3], [1, 2, 0]])
        assert p.blocks == ((3, 4), (0, 1, 2))
        assert (p.k, p.n, p.num_strategies) == (2, 5, 6)

    @pytest.mark.parametrize("blocks, msg", [
        ([[1, 2], [2, 3]], "more than one block"),
        ([[1], []], "empty"),
        ([], "at least one"),
        ([[1, 1]], "repeats"),
        ([[-1]], "negative"),
    ])
    def test_invalid(self, blocks, msg):
        with pytest.raises(PartitionError, match=msg):
            Partition(blocks)

    def test_json_roundtrip(self):
        p = Partition(ILLUSTRATION)
        assert Partition.from_json(p.to_json()) == p
        assert Partition.from_json('{"blocks": [[1,2],[3,4]]}') == p
        assert Partition.from_json("[[1,2],[3,4]]") == p


class TestEnumerate:
    def test_illustration_order(self):
        got = [s.choices for s in enumerate_pure_strategies(Partition(ILLUSTRATION))]
        assert got == [(1, 3), (1, 4), (2, 3), (2, 4)]

    def test_singleton(self):
        assert [s.choices for s in enumerate_pure_strategies(Partition([[7]]))] == [(7,)]

    def test_matches_cartesian_product(self):
        blocks = [[1, 2, 3], [4, 5]]
        got = [s.choices for s in enumerate_pure_strategies(Partition(blocks))]
        assert got == cartesian_strategies(blocks)
        assert len(got) == 6

    @given(partitions())
    @settings(max_examples=60, deadline=None)
    def test_bijection(self, part):
        got = [s.choices for s in enumerate_pure_strategies(part)]
        assert got == cartesian_strategies(part.blocks)
        assert len(set(got)) == part.num_strategies
        for i, s in enumerate(got):
            assert strategy_index(part, s) == i
            assert strategy_from_index(part, i).choices == s

    def test_cap(self):
        big = Partition([range(i * 10, i * 10 + 10) for i in range(7)])
        with pytest.raises(StrategySpaceTooLarge, match="strategy space too large"):
            enumerate_pure_strategies(big)
        with pytest.raises(StrategySpaceTooLarge):
            enumerate_pure_strategies(Partition(ILLUSTRATION), cap=3)


class TestIndicator:
    def test_illustration_pair(self):
        part = Partition(ILLUSTRATION)
        assert indicator_payoff(PureStrategy((2, 3), part), PureStrategy((1, 3), part, "adversary")) == 1

    def test_full_collision(self):
        part = Partition([[0, 1, 2], [3], [4, 5]])
        for s in enumerate_pure_strategies(part):
            assert indicator_payoff(s, s) == part.k

    def test_mismatched_partition(self):
        a = PureStrategy((1, 3), Partition(ILLUSTRATION))
        b = PureStrategy((1, 3), Partition([[1, 2], [3, 5]]))
        with pytest.raises(PartitionError):
            indicator_payoff(a, b)

    def test_invalid_choice(self):
        with pytest.raises(PartitionError):
            PureStrategy((1, 1), Partition(ILLUSTRATION))

    def test_illustration_matrix_vs_loops(self):
        m = build_indicator_matrix(Partition(ILLUSTRATION))
        expected = indicator_by_loops(ILLUSTRATION)
        np.testing.assert_array_equal(m.values, expected)
        np.testing.assert_array_equal(np.diag(m.values), [2, 2, 2, 2])
        np.testing.assert_array_equal(m.values.sum(axis=1), [4, 4, 4, 4])
        assert m.provenance == "indicator"

    def test_trivial_matrices(self):
        np.testing.assert_array_equal(build_indicator_matrix(Partition([[1]])).values, [[1]])
        np.testing.assert_array_equal(build_indicator_matrix(Partition([[1, 2]])).values, np.eye(2))

    @given(partitions(max_k=3, max_block=4))
    @settings(max_examples=40, deadline=None)
    def test_symmetric_and_in_range(self, part):
        m = indicator_counts(part)
        assert np.array_equal(m, m.T)
        assert m.min() >= 0 and m.max() == part.k

    @given(partitions(max_k=3, max_block=4))
    @settings(max_examples=40, deadline=None)
    def test_additive_over_blocks(self, part):
        if part.num_strategies > 256:
            return
        strategies = [s.choices for s in enumerate_pure_strategies(part)]
        total = np.zeros((len(strategies),) * 2, dtype=np.int64)
        for i in range(part.k):
            col = np.array([s[i] for s in strategies])
            total += col[:, None] == col[None, :]
        np.testing.assert_array_equal(indicator_counts(part), total)
        np.testing.assert_array_equal(indicator_counts(part), indicator_by_loops(part.blocks))


class TestMixed:
    def test_product_expansion(self):
        mix = MixedStrategy(block_probs=([0.2, 0.8], [0.5, 0.25, 0.25]))
        expected = [a * b for a, b in itertools.product([0.2, 0.8], [0.5, 0.25, 0.25])]
        np.testing.assert_allclose(mix.expand(), expected, atol=1e-15)
        assert mix.p == 6 and mix.form == "product"

    @pytest.mark.parametrize("bad", [[0.5, 0.6], [-0.1, 1.1], []])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            MixedStrategy(probs=bad)

    def test_immutable(self):
        mix = MixedStrategy(probs=[0.5, 0.5])
        with pytest.raises(ValueError):
            mix.probs[0] = 1.0


class TestExpectedPayoff:
    def test_uniform_illustration(self):
        part = Partition(ILLUSTRATION)
        m = build_indicator_matrix(part)
        u = MixedStrategy.uniform(part)
        assert expected_payoff(m, u, u) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_vs_pure(self):
        part = Partition(ILLUSTRATION)
        m = build_indicator_matrix(part)
        idx = strategy_index(part, (1, 3))
        adv = MixedStrategy.pure(part.num_strategies, idx)
        assert expected_payoff(m, MixedStrategy.uniform(part), adv) == pytest.approx(1.0, abs=1e-12)

    def test_uneven_blocks(self):
        blocks = [[1, 2, 3, 4], [5, 6]]
        part = Partition(blocks)
        m = build_indicator_matrix(part)
        u = MixedStrategy.uniform(part)
        brute = brute_expectation(blocks, lambda s, t: sum(a == b for a, b in zip(s, t)))
        assert brute == pytest.approx(0.75, abs=1e-15)
        assert expected_payoff(m, u, u) == pytest.approx(brute, abs=1e-12)

    def test_dimension_mismatch(self):
        m = PayoffMatrix([[1, 0], [0, 1]])
        with pytest.raises(DimensionError):
            expected_payoff(m, MixedStrategy(probs=[1.0]), MixedStrategy(probs=[0.5, 0.5]))

    @given(partitions(max_k=3, max_block=5))
    @settings(max_examples=50, deadline=None)
    def test_uniform_value_property(self, part):
        m = build_indicator_matrix(part)
        u = MixedStrategy.uniform(part)
        target = sum(1 / s for s in part.sizes)
        assert abs(expected_payoff(m, u, u) - target) <= 1e-12
        x = u.expand()
        # every pure reply earns the same against uniform play
        np.testing.assert_allclose(x @ m.values, target, rtol=0, atol=1e-12)
        np.testing.assert_allclose(m.values @ x, target, rtol=0, atol=1e-12)


def test_matrix_json_records_ordering():
    m = build_indicator_matrix(Partition(ILLUSTRATION))
    obj = m.to_json()
    assert obj["ordering"] == [[1, 3], [1, 4], [2, 3], [2, 4]]
    back = PayoffMatrix.from_json(obj)
    np.testing.assert_array_equal(back.values, m.values)
    assert back.partition == m.partition
