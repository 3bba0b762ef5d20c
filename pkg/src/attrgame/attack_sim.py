"""One-feature poisoning by density mixing, and the squaring corruption.

Nature draws a class with equal probability and then a feature value from
that class's density. The attacker replaces a fraction epsilon of the stream
with draws from its own density, labelling half of them ``+`` and half ``-``.
Both class means are then pulled toward the attacker's mean u:
``(1 - eps) * u_class + eps * u``.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .abstraction import NearestCentroid
from .game_core import PureStrategy

CHUNK = 1 << 16
PLUS, MINUS = 1, -1
NATURE, ATTACKER = 0, 1


@dataclass(frozen=True)
class Density:
    """A one-dimensional normal(a, b) or uniform(a, b) density."""

    kind: Literal["normal", "uniform"]
    a: float
    b: float

    def __post_init__(self):
        if self.kind == "normal" and not self.b > 0:
            raise ValueError("normal std must be positive")
        if self.kind == "uniform" and not self.b > self.a:
            raise ValueError("uniform needs hi > lo")
        if self.kind not in ("normal", "uniform"):
            raise ValueError(f"unknown density kind {self.kind!r}")

    @classmethod
    def normal(cls, mean: float, std: float) -> "Density":
        return cls("normal", float(mean), float(std))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "Density":
        return cls("uniform", float(lo), float(hi))

    @property
    def mean(self) -> float:
        return self.a if self.kind == "normal" else 0.5 * (self.a + self.b)

    @property
    def std(self) -> float:
        return self.b if self.kind == "normal" else (self.b - self.a) / np.sqrt(12.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "normal":
            return rng.normal(self.a, self.b, size)
        return rng.uniform(self.a, self.b, size)

    def to_json(self) -> dict:
        if self.kind == "normal":
            return {"kind": "normal", "mean": self.a, "std": self.b}
        return {"kind": "uniform", "lo": self.a, "hi": self.b}

    @classmethod
    def from_json(cls, obj: dict) -> "Density":
        kind = obj.get("kind")
        if kind == "normal":
            return cls.normal(obj["mean"], obj["std"])
        if kind == "uniform":
            return cls.uniform(obj["lo"], obj["hi"])
        raise ValueError(f"unknown density kind {kind!r}")


@dataclass(frozen=True)
class LabeledDensityPair:
    plus: Density
    minus: Density

    def __post_init__(self):
        if not self.minus.mean < self.plus.mean:
            raise ValueError("expected u_minus < u_plus")

    @property
    def u_plus(self) -> float:
        return self.plus.mean

    @property
    def u_minus(self) -> float:
        return self.minus.mean

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.u_plus + self.u_minus)


@dataclass(frozen=True)
class AttackConfig:
    epsilon: float
    density: Density
    class_prior: float = 0.5

    def __post_init__(self):
        if not 0 <= self.epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")
        if not 0 < self.class_prior < 1:
            raise ValueError("class_prior must lie in (0, 1)")

    @classmethod
    def toward_midpoint(cls, pair: LabeledDensityPair, epsilon: float, std: float | None = None,
                        class_prior: float = 0.5) -> "AttackConfig":
        """Normal attacker density centred between the class means."""
        if std is None:
            std = 0.5 * (pair.plus.std + pair.minus.std)
        return cls(epsilon, Density.normal(pair.midpoint, std), class_prior)

    @property
    def target_mean(self) -> float:
        return self.density.mean


@dataclass(frozen=True, eq=False)
class PoisonedStream:
    """Columnar poisoned samples: feature value, label (+1/-1), origin (0 nature, 1 attacker)."""

    x: np.ndarray
    label: np.ndarray
    origin: np.ndarray

    def __len__(self):
        return self.x.size

    def class_mean(self, label: int) -> tuple[float, float, int]:
        """Mean, standard error and count of the samples carrying ``label``."""
        v = self.x[self.label == label]
        if v.size < 2:
            return float("nan"), float("nan"), int(v.size)
        return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size)), int(v.size)

    def to_csv(self, path_or_buf=None) -> str | None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "label", "origin"])
        for x, lab, org in zip(self.x.tolist(), self.label.tolist(), self.origin.tolist()):
            w.writerow([repr(x), "+" if lab == PLUS else "-", "attacker" if org else "nature"])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
        return None


def _chunk(pair: LabeledDensityPair, attack: AttackConfig, seed: int, index: int, size: int):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))
    u = rng.random(size)
    half = attack.epsilon / 2
    from_attacker = u < attack.epsilon
    # attacker labels: + below eps/2, - between eps/2 and eps
    attack_plus = u < half
    nature_plus = rng.random(size) < attack.class_prior
    x_plus = pair.plus.sample(rng, size)
    x_minus = pair.minus.sample(rng, size)
    x_att = attack.density.sample(rng, size)
    label = np.where(from_attacker, np.where(attack_plus, PLUS, MINUS),
                     np.where(nature_plus, PLUS, MINUS)).astype(np.int8)
    x = np.where(from_attacker, x_att, np.where(nature_plus, x_plus, x_minus))
    return x, label, from_attacker.astype(np.int8)


def sample_poisoned_stream(
    pair: LabeledDensityPair, attack: AttackConfig, n: int, seed: int, workers: int = 1
) -> PoisonedStream:
    """Seeded poisoned stream, generated in fixed-size chunks with per-chunk keys.

    Chunk ``c`` always draws from the stream keyed by ``(seed, c)``, so output
    is identical for any ``workers``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sizes = [min(CHUNK, n - start) for start in range(0, n, CHUNK)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        parts = list(pool.map(lambda a: _chunk(pair, attack, seed, *a), enumerate(sizes)))
    return PoisonedStream(*(np.concatenate(cols) for cols in zip(*parts)))


def predicted_attacked_mean(u_class: float, u_attacker: float, epsilon: float) -> float:
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    return (1 - epsilon) * u_class + epsilon * u_attacker


def effective_epsilon(epsilon: float, class_prior: float, label: int) -> float:
    """Attacker share among samples carrying ``label``; equals epsilon at prior 0.5."""
    prior = class_prior if label == PLUS else 1 - class_prior
    return (epsilon / 2) / ((1 - epsilon) * prior + epsilon / 2)


def mean_shift_summary(pair: LabeledDensityPair, attack: AttackConfig, stream: PoisonedStream,
                       z: float = 3.0) -> dict:
    out = {}
    for name, label, u in (("plus", PLUS, pair.u_plus), ("minus", MINUS, pair.u_minus)):
        eps = effective_epsilon(attack.epsilon, attack.class_prior, label)
        predicted = predicted_attacked_mean(u, attack.target_mean, eps)
        mean, se, count = stream.class_mean(label)
        out[name] = {
            "predicted": predicted,
            "empirical": mean,
            "stderr": se,
            "count": count,
            "within": bool(abs(mean - predicted) <= z * se),
        }
    out["attacker_fraction"] = float(stream.origin.mean())
    out["predicted_gap"] = out["plus"]["predicted"] - out["minus"]["predicted"]
    out["empirical_gap"] = out["plus"]["empirical"] - out["minus"]["empirical"]
    out["pass"] = out["plus"]["within"] and out["minus"]["within"]
    return out


def corrupt_square(values: Sequence, chosen_attributes: PureStrategy | Sequence[int],
                   target_attributes: PureStrategy | Sequence[int]) -> list:
    """What the learner reads after the adversary squares its targeted attributes.

    ``values`` is indexed by attribute identifier. The result holds the
    learner's chosen attributes, in block order, with targeted ones squared.
    """
    chosen = getattr(chosen_attributes, "choices", chosen_attributes)
    targets = set(getattr(target_attributes, "choices", target_attributes))
    for a in (*chosen, *targets):
        if not 0 <= a < len(values):
            raise IndexError(f"attribute {a} outside value vector of length {len(values)}")
    return [values[a] ** 2 if a in targets else values[a] for a in chosen]


def estimate_attacked_quality(
    pair: LabeledDensityPair,
    attack: AttackConfig,
    n: int,
    seed: int,
    train_fraction: float = 0.8,
) -> float:
    """Held-out accuracy of a threshold classifier trained on a poisoned stream.

    The held-out part of the same stream is scored, so attacker samples count
    against the learner exactly as they would in deployment.
    """
    if n < 100:
        raise ValueError("need n >= 100")
    stream = sample_poisoned_stream(pair, attack, n, seed)
    cut = int(round(train_fraction * n))
    tr_lab = stream.label[:cut]
    if np.unique(tr_lab).size < 2 or np.unique(stream.label[cut:]).size < 1:
        raise ValueError("poisoned stream holds a single class")
    model = NearestCentroid().fit(stream.x[:cut, None], tr_lab)
    return float(np.mean(model.predict(stream.x[cut:, None]) == stream.label[cut:]))


def attack_from_json(obj) -> tuple[LabeledDensityPair, AttackConfig]:
    """Parse ``{"plus": density, "minus": density, "epsilon": e, "attacker": density?}``."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    for key in ("plus", "minus", "epsilon"):
        if key not in obj:
            raise ValueError(f"attack config is missing '{key}'")
    pair = LabeledDensityPair(Density.from_json(obj["plus"]), Density.from_json(obj["minus"]))
    prior = float(obj.get("class_prior", 0.5))
    if obj.get("attacker") is None:
        attack = AttackConfig.toward_midpoint(pair, float(obj["epsilon"]), class_prior=prior)
    else:
        attack = AttackConfig(float(obj["epsilon"]), Density.from_json(obj["attacker"]), prior)
    return pair, attack


def attack_to_json(pair: LabeledDensityPair, attack: AttackConfig) -> dict:
    return {
        "plus": pair.plus.to_json(),
        "minus": pair.minus.to_json(),
        "epsilon": attack.epsilon,
        "attacker": attack.density.to_json(),
        "class_prior": attack.class_prior,
    }

