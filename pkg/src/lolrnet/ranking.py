"""Liability-weighted systemic rank of banks and rank-driven survival targets.

Builds directed edge weights from the liabilities matrix and each bank's net
position, normalizes them into a column-indexed transition matrix, damps it
into an everywhere-positive Google matrix, and extracts the dominant
eigenvector by power iteration.  A geometric-series variant of the rank is
provided as a secondary diagnostic.  Survival-probability targets are then
assigned from the rank, either uniformly (max-liquidity style) or through
increasing rank thresholds (systemic-importance-driven style).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateNetworkError
from .network import FinancialNetwork

__all__ = [
    "RankWeights",
    "UniformPolicy",
    "RankThresholdsPolicy",
    "QPolicy",
    "RankingResult",
    "net_positions",
    "edge_weights",
    "google_matrix",
    "perron_rank",
    "series_rank",
    "assign_survival_probabilities",
    "rank_network",
]

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000

_COEFF_SUM_TOL = 1e-12


@dataclass(frozen=True)
class RankWeights:
    """Edge-weight coefficients and damping for the rank computation.

    ``c_plus`` weighs a bank's own debts and ``c_minus`` the credits owed to
    it; the two must sum to one.  ``damping`` is the teleport damping factor
    in (0, 1).  ``epsilon``, when positive, is added to the weight of every
    connected edge to lift degenerate (zero-outdegree) vertices.
    """

    c_plus: float
    c_minus: float
    damping: float = DEFAULT_DAMPING
    epsilon: float = 0.0

    def __post_init__(self):
        if self.c_plus < 0 or self.c_minus < 0:
            raise ValueError("weight coefficients must be non-negative")
        if abs(self.c_plus + self.c_minus - 1.0) > _COEFF_SUM_TOL:
            raise ValueError("c_plus + c_minus must equal 1")
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie strictly inside (0, 1)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


@dataclass(frozen=True)
class UniformPolicy:
    """Identical survival-probability target for every bank."""

    q: float

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise ValueError("q must lie in [0, 1)")


@dataclass(frozen=True)
class RankThresholdsPolicy:
    """Survival target increasing in rank through step increments.

    ``steps`` is an ascending sequence of ``(threshold, increment)`` pairs;
    a bank's target is ``base`` plus every increment whose threshold its rank
    exceeds.  The ceiling ``base + sum(increments)`` must stay below 1.
    """

    base: float
    steps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "steps",
            tuple((float(t), float(inc)) for t, inc in self.steps))
        if not 0.0 <= self.base < 1.0:
            raise ValueError("base must lie in [0, 1)")
        thresholds = [t for t, _ in self.steps]
        if thresholds != sorted(thresholds) or len(set(thresholds)) != len(thresholds):
            raise ValueError("step thresholds must be strictly ascending")
        if any(inc < 0 for _, inc in self.steps):
            raise ValueError("step increments must be non-negative")
        if self.base + sum(inc for _, inc in self.steps) >= 1.0:
            raise ValueError("base plus all increments must stay below 1")


QPolicy = UniformPolicy | RankThresholdsPolicy


@dataclass(frozen=True)
class RankingResult:
    """Every intermediate of the rank pipeline plus the dominant eigenpair."""

    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    tau: np.ndarray
    google: np.ndarray
    eigenvalue: float
    rank: np.ndarray
    net_positions: np.ndarray


def net_positions(net: FinancialNetwork) -> np.ndarray:
    """Net amount held by each bank if all debts settled now.

    Cash plus total owed to the bank minus total owed by the bank.
    """
    owed_to = net.liabilities.sum(axis=0)
    owed_by = net.liabilities.sum(axis=1)
    return net.cash + owed_to - owed_by


def edge_weights(net: FinancialNetwork,
                 w: RankWeights) -> tuple[np.ndarray, np.ndarray]:
    """Directed edge-weight matrices (gamma_plus, gamma_minus).

    ``gamma_plus[i, j]`` combines the liability from ``i`` to ``j`` and the
    one from ``j`` to ``i`` with coefficients ``(c_plus, c_minus)`` and divides
    by ``N_j - min(N) + 1``, where ``N`` is the vector of net positions.
    ``gamma_minus`` follows by antisymmetry: ``gamma_minus[i, j] ==
    gamma_plus[j, i]``.  Diagonals are zero.  With ``epsilon > 0`` every
    connected off-diagonal edge gains ``epsilon``.

    Raises
    ------
    DegenerateNetworkError
        If some vertex ends up with zero outgoing weight (its row of
        ``gamma_plus`` is all zero), naming the vertex.
    """
    liab = net.liabilities
    positions = net_positions(net)
    denom = positions - positions.min() + 1.0
    gamma_plus = (w.c_plus * liab + w.c_minus * liab.T) / denom[None, :]
    np.fill_diagonal(gamma_plus, 0.0)
    if w.epsilon > 0:
        connected = (liab + liab.T) > 0
        gamma_plus = gamma_plus + w.epsilon * connected

    outdegree = gamma_plus.sum(axis=1)
    dead = np.flatnonzero(outdegree == 0)
    if dead.size:
        raise DegenerateNetworkError(int(dead[0]))
    return gamma_plus, gamma_plus.T.copy()


def google_matrix(gamma_plus: np.ndarray,
                  damping: float = DEFAULT_DAMPING) -> tuple[np.ndarray, np.ndarray]:
    """Normalized transition matrix tau and its damped Google matrix.

    ``tau[i, j] = gamma_plus[i, j] / outdegree(j)`` where ``outdegree(j)`` is
    the sum of row ``j`` of ``gamma_plus``; the Google matrix is
    ``(1 - damping) / n`` everywhere plus ``damping * tau``, so each entry is
    at least ``(1 - damping) / n``.
    """
    gamma_plus = np.asarray(gamma_plus, dtype=float)
    if gamma_plus.ndim != 2 or gamma_plus.shape[0] != gamma_plus.shape[1]:
        raise ValueError("gamma_plus must be a square matrix")
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie strictly inside (0, 1)")
    outdegree = gamma_plus.sum(axis=1)
    dead = np.flatnonzero(outdegree == 0)
    if dead.size:
        raise DegenerateNetworkError(int(dead[0]))
    n = gamma_plus.shape[0]
    tau = gamma_plus / outdegree[None, :]
    google = (1.0 - damping) / n + damping * tau
    return tau, google


def perron_rank(google: np.ndarray, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER) -> tuple[float, np.ndarray]:
    """Dominant eigenvalue and strictly positive unit eigenvector.

    Power iteration with 2-norm renormalization on a strictly positive
    matrix; stops once ``||G r - lambda r||_2 <= tol`` with the eigenvalue
    estimated by the Rayleigh quotient.

    Raises
    ------
    ConvergenceError
        If the residual does not reach ``tol`` within ``max_iter`` steps.
    """
    google = np.asarray(google, dtype=float)
    if google.ndim != 2 or google.shape[0] != google.shape[1]:
        raise ValueError("google matrix must be square")
    if np.any(google <= 0):
        raise ValueError("google matrix must be strictly positive")
    n = google.shape[0]
    vec = np.full(n, 1.0 / math.sqrt(n))
    eigenvalue = 0.0
    residual = math.inf
    for _ in range(max_iter):
        image = google @ vec
        eigenvalue = float(vec @ image)
        residual = float(np.linalg.norm(image - eigenvalue * vec))
        if residual <= tol:
            return eigenvalue, vec
        vec = image / np.linalg.norm(image)
    raise ConvergenceError("power iteration did not converge", vec, residual)


def series_rank(google: np.ndarray, damping: float,
                tol: float = DEFAULT_TOL,
                max_iter: int = 1_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-series rank ``d * sum_k (1-d)^k G^k 1``.

    Requires ``(1 - damping) * spectral_radius(G) < 1`` (checked through
    ``perron_rank``); terms are accumulated until the sup norm of the next
    term drops to ``tol``.  Returns the raw series sum and a 2-norm-normalized
    copy.
    """
    google = np.asarray(google, dtype=float)
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie strictly inside (0, 1)")
    spectral_radius, _ = perron_rank(google)
    if (1.0 - damping) * spectral_radius >= 1.0:
        raise ValueError(
            f"series diverges: (1 - d) * lambda = "
            f"{(1.0 - damping) * spectral_radius:.6g} >= 1")
    term = np.full(google.shape[0], damping)
    total = term.copy()
    for _ in range(max_iter):
        if np.max(np.abs(term)) <= tol:
            break
        term = (1.0 - damping) * (google @ term)
        total += term
    else:
        raise ConvergenceError("series accumulation did not converge",
                               total, float(np.max(np.abs(term))))
    return total, total / np.linalg.norm(total)


def assign_survival_probabilities(rank: np.ndarray, policy: QPolicy) -> np.ndarray:
    """Per-bank survival-probability targets from the rank vector.

    Non-decreasing in rank by construction; every target lies in [0, 1).
    """
    rank = np.asarray(rank, dtype=float)
    if isinstance(policy, UniformPolicy):
        return np.full(rank.shape, policy.q)
    if isinstance(policy, RankThresholdsPolicy):
        q = np.full(rank.shape, policy.base)
        for threshold, increment in policy.steps:
            q = q + increment * (rank > threshold)
        return q
    raise TypeError(f"unsupported policy type {type(policy).__name__}")


def rank_network(net: FinancialNetwork, w: RankWeights,
                 tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> RankingResult:
    """Full rank pipeline: weights, transition matrix, dominant eigenpair."""
    gamma_plus, gamma_minus = edge_weights(net, w)
    tau, google = google_matrix(gamma_plus, w.damping)
    eigenvalue, rank = perron_rank(google, tol=tol, max_iter=max_iter)
    return RankingResult(gamma_plus=gamma_plus, gamma_minus=gamma_minus,
                         tau=tau, google=google, eigenvalue=eigenvalue,
                         rank=rank, net_positions=net_positions(net))
