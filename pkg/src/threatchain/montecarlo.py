"""Trajectory sampling for the S/T/A chain, used to cross-check the analytics.

Random numbers come from a counter-based SplitMix64 stream: the uniform used
by trajectory ``k`` at step ``t`` is a pure function of ``(seed, k, t)``, so
results do not depend on batching or execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .markov import AttackDistribution, TransitionMatrix, _check_canonical

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD1B54A32D192ED03)


class ShapeError(ValueError):
    pass


class MismatchedThreats(ValueError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    trajectories: int = 100_000
    max_steps: int = 10_000
    seed: int = 0
    batch_size: int = 250_000

    def __post_init__(self):
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")
        if self.max_steps < 2:
            raise ValueError("max_steps must be >= 2")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class EmpiricalDistribution:
    threat_ids: tuple[str, ...]
    counts: tuple[int, ...]
    unabsorbed: int
    trajectories: int

    @property
    def absorbed(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class ThreatComparison:
    threat_id: str
    count: int
    frequency: float
    expected: float
    z: float


@dataclass(frozen=True)
class Comparison:
    rows: tuple[ThreatComparison, ...]
    chi_square: float
    dof: int
    absorbed: int
    unabsorbed: int

    @property
    def max_abs_z(self) -> float:
        return max((abs(r.z) for r in self.rows), default=0.0)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def uniforms(seed: int, trajectory: np.ndarray, step: int) -> np.ndarray:
    """Uniform [0, 1) draws for the given trajectory indices at one step."""
    with np.errstate(over="ignore"):
        key = _mix64(np.uint64(seed) * _STREAM + trajectory.astype(np.uint64) * _GAMMA)
        bits = _mix64(key + np.uint64(step + 1) * _GAMMA)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


def simulate(p: TransitionMatrix, cfg: SimulationConfig) -> EmpiricalDistribution:
    try:
        _check_canonical(p)
    except ValueError as exc:
        raise ShapeError(str(exc)) from None
    n = p.n_threats
    absorbing = n + 1
    cum = np.cumsum(p.p, axis=1)
    cum[:, -1] = 1.0

    counts = np.zeros(n, dtype=np.int64)
    unabsorbed = 0
    for start in range(0, cfg.trajectories, cfg.batch_size):
        idx = np.arange(start, min(start + cfg.batch_size, cfg.trajectories), dtype=np.uint64)
        state = np.zeros(idx.size, dtype=np.int64)
        via = np.zeros(idx.size, dtype=np.int64)
        for step in range(cfg.max_steps):
            u = uniforms(cfg.seed, idx, step)
            nxt = (cum[state] <= u[:, None]).sum(axis=1)
            threat = (nxt >= 1) & (nxt <= n)
            via[threat] = nxt[threat]
            done = nxt == absorbing
            if done.any():
                counts += np.bincount(via[done] - 1, minlength=n)
                keep = ~done
                idx, state, via = idx[keep], nxt[keep], via[keep]
            else:
                state = nxt
            if idx.size == 0:
                break
        unabsorbed += int(idx.size)

    return EmpiricalDistribution(
        threat_ids=p.threat_ids,
        counts=tuple(int(c) for c in counts),
        unabsorbed=unabsorbed,
        trajectories=cfg.trajectories,
    )


def compare_distributions(emp: EmpiricalDistribution, analytic: AttackDistribution) -> Comparison:
    """Per-threat z-scores of path frequencies among absorbed trajectories.

    The reference is q_i = alpha_i / sum(alpha), the chance that an absorbed
    trajectory went through T_i.
    """
    ids = [r.threat_id for r in analytic.rows]
    if sorted(ids) != sorted(emp.threat_ids):
        raise MismatchedThreats(f"empirical threats {emp.threat_ids} vs analytic {ids}")
    total_alpha = analytic.total_alpha
    count_of = dict(zip(emp.threat_ids, emp.counts))
    n_abs = emp.absorbed

    rows = []
    chi2 = 0.0
    for r in analytic.rows:
        q = r.alpha / total_alpha
        c = count_of[r.threat_id]
        f = c / n_abs if n_abs else 0.0
        if n_abs and 0 < q < 1:
            z = (f - q) / math.sqrt(q * (1 - q) / n_abs)
        else:
            z = 0.0 if f == q else math.copysign(math.inf, f - q)
        expected = q * n_abs
        if expected > 0:
            chi2 += (c - expected) ** 2 / expected
        rows.append(ThreatComparison(r.threat_id, c, f, q, z))

    return Comparison(rows=tuple(rows), chi_square=chi2, dof=len(rows) - 1,
                      absorbed=n_abs, unabsorbed=emp.unabsorbed)
