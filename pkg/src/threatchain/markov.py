"""Absorbing threat chain: weights, transition matrix, powers, absorption."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .catalog import MuMode, ThreatModel, require_valid

ROW_TOL = 1e-12
POWER_TOL = 1e-10


class ChainError(ValueError):
    pass


class UnresolvedScore(ChainError):
    pass


class ZeroDenominator(ChainError):
    pass


class NotStochastic(ChainError):
    pass


class NotAbsorbing(ChainError):
    pass


class Reducible(ChainError):
    pass


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix over ``S, T1..Tn, A``.

    ``threat_ids[i]`` is the threat behind state ``T{i+1}``.
    """

    states: tuple[str, ...]
    p: np.ndarray
    threat_ids: tuple[str, ...]

    @property
    def n_threats(self) -> int:
        return len(self.threat_ids)

    def index(self, label: str) -> int:
        return self.states.index(label)

    def __getitem__(self, key: tuple[str, str]) -> float:
        i, j = key
        return float(self.p[self.index(i), self.index(j)])


@dataclass(frozen=True)
class ThreatRow:
    threat_id: str
    weight: float
    alpha: float
    mu: float
    p_attack: float


@dataclass(frozen=True)
class AttackDistribution:
    rows: tuple[ThreatRow, ...]
    denominator: float
    alpha: float

    @property
    def total_p_attack(self) -> float:
        return math.fsum(r.p_attack for r in self.rows)

    @property
    def total_alpha(self) -> float:
        return math.fsum(r.alpha for r in self.rows)

    @property
    def alpha_gap(self) -> float:
        """Probability mass of ``alpha`` left on the S self-loop by an override."""
        return self.alpha - self.total_alpha

    def row(self, threat_id: str) -> ThreatRow:
        for r in self.rows:
            if r.threat_id == threat_id:
                return r
        raise KeyError(threat_id)


@dataclass(frozen=True)
class AbsorptionMetrics:
    expected_steps_from_S: float
    absorption_probability: dict[int, float]


@dataclass(frozen=True)
class CountermeasureChain:
    """Three-state S/T/A chain where defences can push the system back to S.

    alpha: S->T, beta: T->S, mu: T->A, epsilon: A->S.
    """

    alpha: float
    beta: float
    mu: float
    epsilon: float

    def __post_init__(self):
        for name in ("alpha", "beta", "mu", "epsilon"):
            value = getattr(self, name)
            if not (0 <= value <= 1):
                raise ValueError(f"{name}={value} must lie in [0, 1]")
        if self.alpha == 0:
            raise ValueError("alpha must be > 0")
        if self.beta + self.mu > 1 + ROW_TOL:
            raise ValueError(f"beta + mu = {self.beta + self.mu} exceeds 1")

    def matrix(self) -> np.ndarray:
        a, b, m, e = self.alpha, self.beta, self.mu, self.epsilon
        return np.array([
            [1 - a, a, 0.0],
            [b, 1 - b - m, m],
            [e, 0.0, 1 - e],
        ])


def compute_weights(model: ThreatModel) -> tuple[dict[str, float], float]:
    """Per-threat path weight (sum of exploited scores) and the denominator."""
    scores = {}
    for v in model.vulnerabilities:
        if v.resolved_score is None:
            raise UnresolvedScore(f"{v.id} has no resolved score; run resolve_scores first")
        scores[v.id] = v.resolved_score
    weights = {t.id: math.fsum(scores[j] for j in t.exploits) for t in model.threats}
    if model.denominator_override is not None:
        denominator = float(model.denominator_override)
    else:
        denominator = math.fsum(weights.values())
    return weights, denominator


def compute_alphas(model: ThreatModel, weights: dict[str, float], denominator: float) -> dict[str, float]:
    if denominator <= 0:
        raise ZeroDenominator("total path weight is zero; S->T transitions are undefined")
    return {tid: w / denominator * model.alpha for tid, w in weights.items()}


def compute_mus(model: ThreatModel, weights: dict[str, float], denominator: float) -> dict[str, float]:
    if model.mu_mode is MuMode.UNIFORM:
        return {tid: model.mu for tid in weights}
    if denominator <= 0:
        raise ZeroDenominator("total path weight is zero; proportional mu is undefined")
    return {tid: w / denominator * model.mu for tid, w in weights.items()}


def chain_matrix(alphas: Sequence[float], mus: Sequence[float],
                 threat_ids: Sequence[str] | None = None) -> TransitionMatrix:
    """Assemble the S/T/A matrix from per-threat alpha_i and mu_i."""
    n = len(alphas)
    if len(mus) != n:
        raise ValueError("alphas and mus differ in length")
    if threat_ids is None:
        threat_ids = [f"A{i + 1}" for i in range(n)]
    p = np.zeros((n + 2, n + 2))
    p[0, 1:n + 1] = alphas
    p[0, 0] = 1.0 - math.fsum(alphas)
    for i, mu in enumerate(mus, start=1):
        p[i, i] = 1.0 - mu
        p[i, n + 1] = mu
    p[n + 1, n + 1] = 1.0

    if (p < 0).any() or (p > 1).any():
        raise NotStochastic("transition probabilities must lie in [0, 1]")
    check_stochastic(p, ROW_TOL)
    states = ("S", *(f"T{i}" for i in range(1, n + 1)), "A")
    return TransitionMatrix(states=states, p=p, threat_ids=tuple(threat_ids))


def check_stochastic(p: np.ndarray, tol: float = ROW_TOL) -> None:
    sums = p.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise NotStochastic(f"rows {bad.tolist()} do not sum to 1 (sums {sums[bad].tolist()})")


def build_transition_matrix(model: ThreatModel) -> TransitionMatrix:
    require_valid(model)
    weights, denominator = compute_weights(model)
    alphas = compute_alphas(model, weights, denominator)
    mus = compute_mus(model, weights, denominator)
    ids = [t.id for t in model.threats]
    return chain_matrix([alphas[i] for i in ids], [mus[i] for i in ids], ids)


def n_step_matrix(p: TransitionMatrix, n: int) -> TransitionMatrix:
    """P^n by repeated squaring."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    check_stochastic(p.p, ROW_TOL)
    result = np.linalg.matrix_power(p.p, int(n))
    check_stochastic(result, POWER_TOL)
    return TransitionMatrix(states=p.states, p=result, threat_ids=p.threat_ids)


def attack_distribution(model: ThreatModel) -> AttackDistribution:
    """Two-step S->T_i->A probabilities, one row per threat."""
    require_valid(model)
    weights, denominator = compute_weights(model)
    alphas = compute_alphas(model, weights, denominator)
    mus = compute_mus(model, weights, denominator)
    rows = tuple(
        ThreatRow(t.id, weights[t.id], alphas[t.id], mus[t.id], alphas[t.id] * mus[t.id])
        for t in model.threats
    )
    return AttackDistribution(rows=rows, denominator=denominator, alpha=model.alpha)


def _check_canonical(p: TransitionMatrix) -> None:
    n = p.n_threats
    pattern = np.zeros_like(p.p, dtype=bool)
    pattern[0, :n + 1] = True
    for i in range(1, n + 1):
        pattern[i, i] = pattern[i, n + 1] = True
    pattern[n + 1, n + 1] = True
    if (p.p[~pattern] != 0).any() or p.p[n + 1, n + 1] != 1.0:
        raise ValueError("matrix is not in the canonical S/T/A form")


def absorption_metrics(p: TransitionMatrix, horizons: Sequence[int] = ()) -> AbsorptionMetrics:
    """Expected steps from S until absorption in A, plus P^n[S, A] per horizon."""
    _check_canonical(p)
    n = p.n_threats
    alphas = p.p[0, 1:n + 1]
    mus = p.p[1:n + 1, n + 1]
    if alphas.sum() <= 0:
        raise NotAbsorbing("S never leaves itself (sum of alpha_i is 0)")
    dead = [p.threat_ids[i] for i in range(n) if alphas[i] > 0 and mus[i] <= 0]
    if dead:
        raise NotAbsorbing(f"threat states {dead} are reachable but never reach A (mu_i = 0)")

    # only states reachable from S matter; unreachable T_i with mu_i = 0 would make I-Q singular
    keep = [0] + [i + 1 for i in range(n) if alphas[i] > 0]
    q = p.p[np.ix_(keep, keep)]
    steps = np.linalg.solve(np.eye(len(keep)) - q, np.ones(len(keep)))

    probs = {}
    for h in horizons:
        probs[int(h)] = float(n_step_matrix(p, int(h)).p[0, n + 1])
    return AbsorptionMetrics(expected_steps_from_S=float(steps[0]), absorption_probability=probs)


def stationary_distribution(chain: CountermeasureChain) -> tuple[float, float, float]:
    """Stationary (pi_S, pi_T, pi_A) of the countermeasure chain."""
    for name in ("alpha", "mu", "epsilon"):
        if getattr(chain, name) == 0:
            raise Reducible(f"{name}=0 leaves the chain without a unique stationary distribution")
    p = chain.matrix()
    # pi (P - I) = 0 with one balance equation replaced by sum(pi) = 1
    a = (p - np.eye(3)).T
    a[-1, :] = 1.0
    b = np.array([0.0, 0.0, 1.0])
    pi = np.linalg.solve(a, b)
    residual = np.abs(pi @ p - pi).max()
    if residual > ROW_TOL:
        raise ChainError(f"stationary solve residual {residual:.3e} too large")
    return float(pi[0]), float(pi[1]), float(pi[2])
