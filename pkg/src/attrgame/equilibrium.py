"""Equilibrium computation and certification for learner-pays-adversary games.

The learner picks rows and minimizes; the adversary picks columns and
maximizes. Exploitability of a profile (x, y) with v = x'My is
``max(max_j (x'M)_j - v, v - min_i (My)_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .game_core import (
    DEFAULT_MATRIX_CAP,
    DimensionError,
    MixedStrategy,
    Partition,
    PayoffMatrix,
    build_indicator_matrix,
)

LP_TOL = 1e-9
FP_TOL = 1e-4
UNIFORM_TOL = 1e-12

Responder = Literal["learner", "adversary"]


class LPError(RuntimeError):
    """The minimax LP was infeasible or unbounded, which cannot happen for a valid matrix."""


@dataclass(frozen=True)
class EquilibriumCertificate:
    exploitability: float
    tolerance: float
    value: float
    learner_gain: float = 0.0
    adversary_gain: float = 0.0

    @property
    def certified(self) -> bool:
        return self.exploitability <= self.tolerance


@dataclass(frozen=True)
class SolveResult:
    value: float
    learner_strategy: MixedStrategy
    adversary_strategy: MixedStrategy
    method: str
    certificate: EquilibriumCertificate
    iterations: int = 0
    converged: bool = True
    bounds: tuple[float, float] = field(default=(np.nan, np.nan))

    @property
    def exploitability(self) -> float:
        return self.certificate.exploitability

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "learner_strategy": self.learner_strategy.to_json(),
            "adversary_strategy": self.adversary_strategy.to_json(),
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "exploitability": self.certificate.exploitability,
            "tolerance": self.certificate.tolerance,
        }


def _values(matrix) -> np.ndarray:
    return matrix.values if isinstance(matrix, PayoffMatrix) else np.asarray(matrix, dtype=float)


def exploitability(matrix, x: np.ndarray, y: np.ndarray, tolerance: float = LP_TOL) -> EquilibriumCertificate:
    m = _values(matrix)
    col_payoffs = x @ m
    row_payoffs = m @ y
    v = float(x @ row_payoffs)
    adv_gain = max(float(col_payoffs.max()) - v, 0.0)
    learner_gain = max(v - float(row_payoffs.min()), 0.0)
    return EquilibriumCertificate(
        max(adv_gain, learner_gain), tolerance, v, learner_gain, adv_gain
    )


def best_response(matrix, opponent_mix: MixedStrategy, responder: Responder) -> tuple[int, float]:
    """Best pure reply to ``opponent_mix``; ties go to the lowest index."""
    m = _values(matrix)
    mix = opponent_mix.expand()
    if responder == "adversary":
        if mix.size != m.shape[0]:
            raise DimensionError("learner mix does not match matrix rows")
        payoffs = mix @ m
        idx = int(np.argmax(payoffs))
    elif responder == "learner":
        if mix.size != m.shape[1]:
            raise DimensionError("adversary mix does not match matrix columns")
        payoffs = m @ mix
        idx = int(np.argmin(payoffs))
    else:
        raise ValueError(f"unknown responder {responder!r}")
    return idx, float(payoffs[idx])


def _lp_side(m: np.ndarray, maximizer: bool) -> tuple[np.ndarray, float]:
    # Variables (z_1..z_r, v). Minimizer over rows: min v s.t. M'x <= v.
    # Maximizer over columns: max w s.t. M y >= w, written as min -w.
    a = m if maximizer else m.T
    r = a.shape[1]
    c = np.zeros(r + 1)
    c[-1] = -1.0 if maximizer else 1.0
    sign = -1.0 if maximizer else 1.0
    a_ub = np.hstack([sign * a, -sign * np.ones((a.shape[0], 1))])
    b_ub = np.zeros(a.shape[0])
    a_eq = np.hstack([np.ones((1, r)), np.zeros((1, 1))])
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * r + [(None, None)],
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise LPError(f"minimax LP failed (status {res.status}): {res.message}")
    z = np.clip(res.x[:r], 0.0, None)
    return z / z.sum(), float(res.x[-1])


def _polish(m: np.ndarray, x: np.ndarray, y: np.ndarray, tol: float = 1e-9):
    """Re-solve the indifference equations on the detected supports."""
    rows = np.flatnonzero(x > tol)
    cols = np.flatnonzero(y > tol)
    sub = m[np.ix_(rows, cols)]
    # x_I' M_IJ = v and M_IJ y_J = v, each with a simplex constraint.
    ax = np.vstack([np.hstack([sub.T, -np.ones((cols.size, 1))]),
                    np.hstack([np.ones((1, rows.size)), [[0.0]]])])
    ay = np.vstack([np.hstack([sub, -np.ones((rows.size, 1))]),
                    np.hstack([np.ones((1, cols.size)), [[0.0]]])])
    bx = np.zeros(cols.size + 1)
    bx[-1] = 1.0
    by = np.zeros(rows.size + 1)
    by[-1] = 1.0
    sx = np.linalg.lstsq(ax, bx, rcond=None)[0]
    sy = np.linalg.lstsq(ay, by, rcond=None)[0]
    if np.any(sx[:-1] < 0) or np.any(sy[:-1] < 0):
        return None
    px = np.zeros_like(x)
    py = np.zeros_like(y)
    px[rows] = sx[:-1]
    py[cols] = sy[:-1]
    return px / px.sum(), py / py.sum()


def solve_lp(matrix, tolerance: float = LP_TOL) -> SolveResult:
    m = _values(matrix)
    if not np.all(np.isfinite(m)):
        raise ValueError("payoff matrix has non-finite entries")
    x, v_min = _lp_side(m, maximizer=False)
    y, v_max = _lp_side(m, maximizer=True)
    if abs(v_min - v_max) > max(tolerance, 1e-7 * max(1.0, abs(v_min))):
        raise LPError(f"primal and dual values disagree: {v_min} vs {v_max}")
    cert = exploitability(m, x, y, tolerance)
    polished = _polish(m, x, y)
    if polished is not None:
        cert_p = exploitability(m, *polished, tolerance)
        if cert_p.exploitability < cert.exploitability:
            x, y = polished
            cert = cert_p
    return SolveResult(
        value=cert.value,
        learner_strategy=MixedStrategy(probs=x),
        adversary_strategy=MixedStrategy(probs=y),
        method="lp",
        certificate=cert,
        bounds=(float((m @ y).min()), float((x @ m).max())),
    )


def solve_fictitious_play(
    matrix,
    max_iters: int = 10_000_000,
    target_exploitability: float = FP_TOL,
    alternating: bool = True,
) -> SolveResult:
    """Empirical-average fictitious play, stopping on the duality gap.

    The alternating variant lets the learner reply to the adversary's
    latest move; it converges far faster on the symmetric indicator games.

    The gap ``max_j (x'M)_j - min_i (My)_i`` bounds the exploitability from
    above, so a converged result is a certified ``target``-Nash profile. On
    hitting ``max_iters`` the iterate with the smallest gap is returned with
    ``converged=False``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if target_exploitability <= 0:
        raise ValueError("target_exploitability must be positive")
    m = np.ascontiguousarray(_values(matrix), dtype=np.float64)
    xc, yc, t, converged, bx, by, best_t, _ = kernels.fictitious_play(
        m, int(max_iters), float(target_exploitability), bool(alternating)
    )
    if not converged:
        xc, yc = bx, by
    x = np.asarray(xc, dtype=float) / xc.sum()
    y = np.asarray(yc, dtype=float) / yc.sum()
    lo, hi = float((m @ y).min()), float((x @ m).max())
    cert = exploitability(m, x, y, target_exploitability)
    return SolveResult(
        value=0.5 * (lo + hi),
        learner_strategy=MixedStrategy(probs=x),
        adversary_strategy=MixedStrategy(probs=y),
        method="fictitious_play",
        certificate=cert,
        iterations=int(t),
        converged=bool(converged),
        bounds=(lo, hi),
    )


def certify_uniform_equilibrium(
    partition: Partition, cap: int = DEFAULT_MATRIX_CAP, tolerance: float = UNIFORM_TOL
) -> EquilibriumCertificate:
    """Check that uniform per-block play is a Nash equilibrium of the indicator game."""
    matrix = build_indicator_matrix(partition, cap)
    counts = matrix.values.astype(np.int64)
    p = partition.num_strategies
    # integer sums keep the uniform evaluation exact up to one division
    col = counts.sum(axis=0)
    row = counts.sum(axis=1)
    value = float(col.sum()) / (p * p)
    adv_gain = float(col.max()) / p - value
    learner_gain = value - float(row.min()) / p
    cert = EquilibriumCertificate(
        max(adv_gain, learner_gain, 0.0), tolerance, value, max(learner_gain, 0.0), max(adv_gain, 0.0)
    )
    if abs(value - partition.uniform_value()) > tolerance:
        raise AssertionError(
            f"uniform value {value} differs from sum of 1/|B_i| = {partition.uniform_value()}"
        )
    return cert


def solve_indicator_game(partition: Partition, tolerance: float = LP_TOL) -> SolveResult:
    """Solve by per-block decomposition: each block is a matching game with a uniform solution."""
    mix = MixedStrategy.uniform(partition)
    value = partition.uniform_value()
    if partition.num_strategies <= DEFAULT_MATRIX_CAP:
        cert = certify_uniform_equilibrium(partition, tolerance=tolerance)
    else:
        # every pure reply to uniform play earns exactly sum 1/|B_i|
        cert = EquilibriumCertificate(0.0, tolerance, value)
    return SolveResult(
        value=value,
        learner_strategy=mix,
        adversary_strategy=mix,
        method="decomposition",
        certificate=cert,
        bounds=(value, value),
    )
