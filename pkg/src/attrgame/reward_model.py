"""Quality-weighted variant of the attribute game.

A learner strategy l has base quality Q(l); under attack a its quality drops
to Q(l, a) whenever the two strategies collide on at least one block, and is
unchanged otherwise. The payment to the adversary is
``R(l, a) = Q(l) + (Q(l) - Q(l, a))``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .game_core import DimensionError, Partition, PayoffMatrix, indicator_counts

EQ_TOL = 1e-12


class QualityTableError(ValueError):
    def __init__(self, violations):
        self.violations = violations
        head = "; ".join(str(v) for v in violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        super().__init__(f"invalid quality table: {head}{more}")


@dataclass(frozen=True)
class Violation:
    kind: str  # "collision_not_lower" | "no_collision_changed" | "missing" | "shape"
    learner: int
    adversary: int
    detail: str = ""

    def __str__(self):
        return f"{self.kind} at ({self.learner}, {self.adversary}) {self.detail}".rstrip()

    def to_json(self) -> dict:
        return {"kind": self.kind, "learner": self.learner, "adversary": self.adversary,
                "detail": self.detail}


@dataclass(frozen=True, eq=False)
class QualityTable:
    """Base quality per learner strategy and optional attacked quality per pair.

    ``attacked_quality`` is a dense (p, p) array; NaN marks an entry that was
    not supplied.
    """

    base_quality: np.ndarray
    attacked_quality: np.ndarray | None = None

    def __post_init__(self):
        base = np.array(self.base_quality, dtype=np.float64)
        if base.ndim != 1:
            raise DimensionError("base_quality must be 1-d")
        base.setflags(write=False)
        object.__setattr__(self, "base_quality", base)
        if self.attacked_quality is not None:
            att = np.array(self.attacked_quality, dtype=np.float64)
            if att.shape != (base.size, base.size):
                raise DimensionError(
                    f"attacked_quality is {att.shape}, expected {(base.size, base.size)}"
                )
            att.setflags(write=False)
            object.__setattr__(self, "attacked_quality", att)

    @property
    def p(self) -> int:
        return self.base_quality.size

    @classmethod
    def from_drops(cls, base_quality, drops) -> "QualityTable":
        """Table with Q(l, a) = Q(l) - drops[l, a]."""
        base = np.asarray(base_quality, dtype=float)
        return cls(base, base[:, None] - np.asarray(drops, dtype=float))

    @classmethod
    def from_json(cls, obj, partition: Partition | None = None) -> "QualityTable":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if "base_quality" not in obj:
            raise QualityTableError([Violation("shape", -1, -1, "missing 'base_quality'")])
        base = np.asarray(obj["base_quality"], dtype=float)
        att = obj.get("attacked_quality")
        if att is None:
            return cls(base)
        if isinstance(att, dict) and "triplets" in att:
            dense = np.full((base.size, base.size), np.nan)
            for l, a, v in att["triplets"]:
                dense[int(l), int(a)] = float(v)
            if partition is not None:
                # unspecified non-colliding pairs are pinned by the equality rule
                free = (indicator_counts(partition) == 0) & np.isnan(dense)
                dense[free] = np.broadcast_to(base[:, None], dense.shape)[free]
            return cls(base, dense)
        return cls(base, np.asarray(att, dtype=float))

    def to_json(self) -> dict:
        out = {"base_quality": self.base_quality.tolist()}
        if self.attacked_quality is not None:
            out["attacked_quality"] = self.attacked_quality.tolist()
        return out


def validate_quality_table(
    partition: Partition, q: QualityTable, asymmetric: bool = False
) -> list[Violation]:
    """Every pair breaking the collision rules, in (learner, adversary) order.

    With ``asymmetric`` set, colliding pairs whose quality does not drop are
    clamped to equality (a failed attack) instead of being reported.
    """
    if asymmetric:
        q = clamp_asymmetric(partition, q)
    p = partition.num_strategies
    if q.p != p:
        return [Violation("shape", -1, -1, f"base_quality has {q.p} entries, expected {p}")]
    if q.attacked_quality is None:
        return []
    collide = indicator_counts(partition) > 0
    base = q.base_quality[:, None]
    att = q.attacked_quality
    out = []
    for l, a in np.argwhere(np.isnan(att)):
        out.append(Violation("missing", int(l), int(a)))
    known = ~np.isnan(att)
    lowered = att <= base if asymmetric else att < base
    bad1 = collide & known & ~lowered
    for l, a in np.argwhere(bad1):
        out.append(Violation("collision_not_lower", int(l), int(a),
                             f"Q(l,a)={att[l, a]!r} >= Q(l)={q.base_quality[l]!r}"))
    bad2 = ~collide & known & (np.abs(att - base) > EQ_TOL)
    for l, a in np.argwhere(bad2):
        out.append(Violation("no_collision_changed", int(l), int(a),
                             f"Q(l,a)={att[l, a]!r} != Q(l)={q.base_quality[l]!r}"))
    out.sort(key=lambda v: (v.learner, v.adversary, v.kind))
    return out


def clamp_asymmetric(partition: Partition, q: QualityTable) -> QualityTable:
    """Treat quality gains under attack as failed attacks: clamp Q(l, a) to Q(l)."""
    if q.attacked_quality is None:
        return q
    att = np.minimum(q.attacked_quality, q.base_quality[:, None])
    return QualityTable(q.base_quality, att)


def build_reward_matrix(
    partition: Partition, q: QualityTable, asymmetric: bool = False
) -> PayoffMatrix:
    if asymmetric:
        q = clamp_asymmetric(partition, q)
    violations = validate_quality_table(partition, q, asymmetric)
    if violations:
        raise QualityTableError(violations)
    if q.attacked_quality is None:
        raise QualityTableError([Violation("missing", -1, -1, "no attacked_quality supplied")])
    base = q.base_quality[:, None]
    reward = base + (base - q.attacked_quality)
    collide = indicator_counts(partition) > 0
    # post-check of the reward assumptions on every pair
    above = np.greater_equal if asymmetric else np.greater
    if not (np.all(above(reward[collide], np.broadcast_to(base, reward.shape)[collide]))
            and np.all(np.abs(reward - base)[~collide] <= EQ_TOL)):
        raise AssertionError("reward matrix violates the collision assumptions")
    return PayoffMatrix(reward, "reward", partition)


def normalize_reward(matrix: PayoffMatrix, q: QualityTable) -> PayoffMatrix:
    """Subtract Q(l) from row l, leaving the quality drop caused by the attack."""
    rows, cols = matrix.shape
    if q.p != rows:
        raise DimensionError(f"quality table has {q.p} rows, matrix has {rows}")
    return PayoffMatrix(matrix.values - q.base_quality[:, None], matrix.provenance, matrix.partition)


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def bounds(self) -> tuple[float, float]:
        return self.center - self.half_width, self.center + self.half_width

    def __contains__(self, value: float) -> bool:
        lo, hi = self.bounds
        return lo <= value <= hi


def attack_succeeds(q_base: float, interval: ConfidenceInterval, reward: float) -> bool:
    """An attack fails when the reward stays inside the closed quality interval."""
    if not isinstance(interval, ConfidenceInterval):
        interval = ConfidenceInterval(q_base, float(interval))
    if abs(interval.center - q_base) > EQ_TOL:
        raise ValueError("interval must be centered at the base quality")
    return reward not in interval
