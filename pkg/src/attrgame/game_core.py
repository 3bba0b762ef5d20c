"""Partitions, strategies and payoff construction for the attribute game.

Strategies are enumerated in a fixed lexicographic order: block 0 varies
slowest and attribute identifiers ascend within each block. Every matrix
index in the package refers to this order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from . import kernels

DEFAULT_STRATEGY_CAP = 10**6
# p*p float64 entries; 10**4 strategies is already an 800 MB matrix.
DEFAULT_MATRIX_CAP = 10**4
PROB_TOL = 1e-12

Owner = Literal["learner", "adversary"]


class PartitionError(ValueError):
    pass


class StrategySpaceTooLarge(ValueError):
    pass


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Ordered blocks B_1..B_k of disjoint attribute identifiers."""

    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, blocks: Iterable[Iterable[int]]):
        normalized = []
        seen: set[int] = set()
        for i, block in enumerate(blocks):
            members = [int(a) for a in block]
            if not members:
                raise PartitionError(f"block {i} is empty")
            if len(set(members)) != len(members):
                raise PartitionError(f"block {i} repeats an attribute")
            for a in members:
                if a < 0:
                    raise PartitionError(f"block {i}: attribute {a} is negative")
                if a in seen:
                    raise PartitionError(f"attribute {a} appears in more than one block")
                seen.add(a)
            normalized.append(tuple(sorted(members)))
        if not normalized:
            raise PartitionError("partition needs at least one block")
        object.__setattr__(self, "blocks", tuple(normalized))

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def num_strategies(self) -> int:
        return math.prod(self.sizes)

    @property
    def attributes(self) -> tuple[int, ...]:
        return tuple(sorted(a for b in self.blocks for a in b))

    def uniform_value(self) -> float:
        """Expected payment when both players pick uniformly in every block."""
        return sum(1.0 / s for s in self.sizes)

    def to_json(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks]}

    @classmethod
    def from_json(cls, obj) -> "Partition":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if isinstance(obj, dict):
            if "blocks" not in obj:
                raise PartitionError("partition object needs a 'blocks' field")
            obj = obj["blocks"]
        if not isinstance(obj, list) or not all(isinstance(b, list) for b in obj):
            raise PartitionError("'blocks' must be a list of integer lists")
        return cls(obj)


@dataclass(frozen=True)
class PureStrategy:
    """One attribute choice per block."""

    choices: tuple[int, ...]
    partition: Partition = field(repr=False)
    owner: Owner = "learner"

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(int(c) for c in self.choices))
        if len(self.choices) != self.partition.k:
            raise PartitionError(
                f"strategy has {len(self.choices)} choices, partition has {self.partition.k} blocks"
            )
        for i, (c, block) in enumerate(zip(self.choices, self.partition.blocks)):
            if c not in block:
                raise PartitionError(f"choice {c} is not in block {i} {list(block)}")

    @property
    def index(self) -> int:
        return strategy_index(self.partition, self.choices)


def _check_cap(partition: Partition, cap: int) -> int:
    p = partition.num_strategies
    if p > cap:
        raise StrategySpaceTooLarge(
            f"strategy space too large: {p} pure strategies exceeds cap {cap}"
        )
    return p


def strategy_codes(partition: Partition, cap: int = DEFAULT_STRATEGY_CAP) -> np.ndarray:
    """(p, k) array of within-block positions, in canonical order."""
    _check_cap(partition, cap)
    grids = np.meshgrid(*[np.arange(s) for s in partition.sizes], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def enumerate_pure_strategies(
    partition: Partition, cap: int = DEFAULT_STRATEGY_CAP, owner: Owner = "learner"
) -> list[PureStrategy]:
    codes = strategy_codes(partition, cap)
    blocks = [np.asarray(b) for b in partition.blocks]
    return [
        PureStrategy(tuple(int(blocks[i][c]) for i, c in enumerate(row)), partition, owner)
        for row in codes
    ]


def strategy_index(partition: Partition, choices: Sequence[int]) -> int:
    index = 0
    for c, block in zip(choices, partition.blocks, strict=True):
        index = index * len(block) + block.index(int(c))
    return index


def strategy_from_index(partition: Partition, index: int, owner: Owner = "learner") -> PureStrategy:
    if not 0 <= index < partition.num_strategies:
        raise IndexError(f"strategy index {index} out of range")
    choices = []
    for block in reversed(partition.blocks):
        index, pos = divmod(index, len(block))
        choices.append(block[pos])
    return PureStrategy(tuple(reversed(choices)), partition, owner)


def indicator_payoff(learner: PureStrategy, adversary: PureStrategy) -> int:
    """Number of blocks where learner and adversary picked the same attribute."""
    if learner.partition != adversary.partition:
        raise PartitionError("strategies belong to different partitions")
    return sum(a == b for a, b in zip(learner.choices, adversary.choices))


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    """Distribution over pure strategies, general or per-block product form."""

    probs: np.ndarray | None = None
    block_probs: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        if (self.probs is None) == (self.block_probs is None):
            raise ValueError("give exactly one of probs or block_probs")
        vecs = [self.probs] if self.probs is not None else list(self.block_probs)
        frozen = []
        for v in vecs:
            v = np.array(v, dtype=np.float64)
            if v.ndim != 1 or v.size == 0:
                raise ValueError("probability vectors must be non-empty and 1-d")
            if np.any(v < 0) or abs(v.sum() - 1.0) > PROB_TOL:
                raise ValueError("probability vector must be non-negative and sum to 1")
            v.setflags(write=False)
            frozen.append(v)
        if self.probs is not None:
            object.__setattr__(self, "probs", frozen[0])
        else:
            object.__setattr__(self, "block_probs", tuple(frozen))

    @property
    def form(self) -> str:
        return "general" if self.probs is not None else "product"

    @property
    def p(self) -> int:
        if self.probs is not None:
            return self.probs.size
        return math.prod(v.size for v in self.block_probs)

    def expand(self) -> np.ndarray:
        """General-form probabilities in canonical strategy order."""
        if self.probs is not None:
            return self.probs
        out = np.ones(1)
        for v in self.block_probs:
            out = np.outer(out, v).ravel()
        return out

    @classmethod
    def uniform(cls, partition: Partition) -> "MixedStrategy":
        return cls(block_probs=tuple(np.full(s, 1.0 / s) for s in partition.sizes))

    @classmethod
    def pure(cls, p: int, index: int) -> "MixedStrategy":
        v = np.zeros(p)
        v[index] = 1.0
        return cls(probs=v)

    @classmethod
    def from_weights(cls, weights) -> "MixedStrategy":
        w = np.clip(np.asarray(weights, dtype=np.float64), 0.0, None)
        return cls(probs=w / w.sum())

    def to_json(self) -> list[float]:
        return [float(x) for x in self.expand()]


@dataclass(frozen=True, eq=False)
class PayoffMatrix:
    """Learner (rows, minimizer) pays adversary (columns, maximizer)."""

    values: np.ndarray
    provenance: Literal["indicator", "reward", "explicit"] = "explicit"
    partition: Partition | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or 0 in v.shape:
            raise DimensionError("payoff matrix must be a non-empty 2-d array")
        if not np.all(np.isfinite(v)):
            raise ValueError("payoff matrix has non-finite entries")
        if self.partition is not None:
            p = self.partition.num_strategies
            if v.shape != (p, p):
                raise DimensionError(f"matrix is {v.shape}, partition implies {p}x{p}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def ordering(self) -> list[list[int]] | None:
        if self.partition is None:
            return None
        return [list(s.choices) for s in enumerate_pure_strategies(self.partition)]

    def to_json(self) -> dict:
        out = {
            "provenance": self.provenance,
            "matrix": self.values.tolist(),
        }
        if self.partition is not None:
            out["partition"] = self.partition.to_json()["blocks"]
            out["ordering"] = self.ordering()
        return out

    @classmethod
    def from_json(cls, obj) -> "PayoffMatrix":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if isinstance(obj, list):
            return cls(obj)
        if "matrix" not in obj:
            raise DimensionError("matrix object needs a 'matrix' field")
        partition = Partition(obj["partition"]) if obj.get("partition") else None
        return cls(obj["matrix"], obj.get("provenance", "explicit"), partition)


def indicator_counts(partition: Partition, cap: int = DEFAULT_MATRIX_CAP) -> np.ndarray:
    """Exact integer collision-count matrix."""
    _check_cap(partition, cap)
    return kernels.indicator_matrix(strategy_codes(partition))


def build_indicator_matrix(partition: Partition, cap: int = DEFAULT_MATRIX_CAP) -> PayoffMatrix:
    return PayoffMatrix(indicator_counts(partition, cap), "indicator", partition)


def expected_payoff(
    matrix: PayoffMatrix, learner_mix: MixedStrategy, adversary_mix: MixedStrategy
) -> float:
    x = learner_mix.expand()
    y = adversary_mix.expand()
    rows, cols = matrix.shape
    if x.size != rows or y.size != cols:
        raise DimensionError(
            f"mix sizes ({x.size}, {y.size}) do not match matrix {matrix.shape}"
        )
    return float(x @ matrix.values @ y)
