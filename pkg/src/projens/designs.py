"""Design-quality metrology: moment operators, frame potentials, normalized
2-norm deviations, and exact closed-form statistics of Haar outcome weights.

Frame potentials are always evaluated through the pairwise overlap Gram
matrix, never by materializing moment operators; closed forms are computed in
exact rational arithmetic before conversion to float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .linalg import TOL, trace_distance
from .projected import ProjectedEnsemble
from .weingarten import all_permutations, permutation_operator

__all__ = [
    "MomentOperator",
    "DesignReport",
    "HaarStatistics",
    "MAX_DENSE_DIM",
    "moment_operator",
    "haar_moment_operator",
    "symmetric_projector",
    "frame_potential",
    "haar_frame_potential",
    "design_report",
    "haar_statistics",
    "haar_q_moment",
    "haar_overlap_moment",
    "jensen_gap",
]

# Dense guard: k-copy operators are materialized only up to this dimension.
MAX_DENSE_DIM = 4096
MAX_SYMMETRIZER_COPIES = 6
MAX_GRAM_ENTRIES = 2 ** 14


@dataclass(frozen=True, eq=False)
class MomentOperator:
    """k-copy moment operator on (C^dim_a)^(x k): PSD, unit trace."""

    k: int
    dim_a: int
    matrix: np.ndarray

    def __post_init__(self):
        d = self.dim_a ** self.k
        if self.matrix.shape != (d, d):
            raise ValueError(f"expected shape {(d, d)}, got {self.matrix.shape}")
        tr = complex(np.trace(self.matrix))
        if abs(tr - 1.0) > 100 * TOL.norm:
            raise ValueError(f"moment operator trace {tr}, expected 1")
        lo = float(np.min(np.linalg.eigvalsh(self.matrix)))
        if lo < -100 * TOL.norm:
            raise ValueError(f"moment operator not PSD: min eigenvalue {lo:.3e}")

    def symmetric_subspace_residual(self) -> float:
        """Frobenius norm of the component outside the symmetric subspace."""
        pi = symmetric_projector(self.dim_a, self.k)
        rest = (np.eye(pi.shape[0]) - pi) @ self.matrix
        return float(np.linalg.norm(rest))


def _copies_dim(n: int, k: int) -> int:
    d = n ** k
    if d > MAX_DENSE_DIM:
        raise ValueError(f"dense guard exceeded: {n}^{k} = {d} > {MAX_DENSE_DIM}; use frame potentials instead")
    return d


def moment_operator(ens: ProjectedEnsemble, k: int) -> MomentOperator:
    """Weighted sum of k-fold self-tensor projectors over the ensemble."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = ens.dims.dim_a
    d = _copies_dim(n, k)
    states = ens.state_matrix
    vk = states
    for _ in range(k - 1):
        vk = np.einsum("ia,ib->iab", vk, states).reshape(len(ens), -1)
    rho = (vk.T * ens.weights) @ vk.conj()
    return MomentOperator(k=k, dim_a=n, matrix=rho)


@lru_cache(maxsize=32)
def symmetric_projector(n: int, k: int) -> np.ndarray:
    """Projector onto the permutation-symmetric subspace of (C^n)^(x k)."""
    if k > MAX_SYMMETRIZER_COPIES:
        raise ValueError(f"symmetrizer guard exceeded: k = {k} > {MAX_SYMMETRIZER_COPIES}")
    d = _copies_dim(n, k)
    acc = np.zeros((d, d))
    for perm in all_permutations(k):
        acc += permutation_operator(perm, n)
    return acc / math.factorial(k)


def haar_moment_operator(n: int, k: int) -> MomentOperator:
    """The k-th moment of the Haar ensemble: normalized symmetric projector."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    pi = symmetric_projector(n, k)
    dim_sym = math.comb(n + k - 1, k)
    return MomentOperator(k=k, dim_a=n, matrix=(pi / dim_sym).astype(complex))


def frame_potential(ens: ProjectedEnsemble, k: int) -> float:
    """Sum of q_i q_j |<phi_i|phi_j>|^(2k) over all ensemble pairs."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(ens) > MAX_GRAM_ENTRIES:
        raise ValueError(f"ensemble too large for the Gram sum: {len(ens)} > {MAX_GRAM_ENTRIES}")
    s = ens.state_matrix
    overlaps_sq = np.abs(s.conj() @ s.T) ** 2
    q = ens.weights
    return float(q @ (overlaps_sq ** k) @ q)


def haar_frame_potential(n: int, k: int) -> float:
    """Haar value 1 / binom(n + k - 1, k), the minimum over all ensembles."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return float(Fraction(1, math.comb(n + k - 1, k)))


@dataclass(frozen=True)
class DesignReport:
    """Frame-potential certificate of k-design quality."""

    k: int
    frame_potential: float
    haar_frame_potential: float
    delta: float                 # sqrt(F/F_haar - 1), zero iff exact design
    l1_bound: float              # the same quantity bounds the trace-norm deviation
    l1_exact: float | None = None


def design_report(ens: ProjectedEnsemble, k: int, materialize_l1: bool = False) -> DesignReport:
    """Certify k-design quality of an ensemble.

    delta clamps F/F_haar - 1 at zero before the square root: per-sample F can
    dip below the Haar value only by floating-point noise.
    """
    f = frame_potential(ens, k)
    fh = haar_frame_potential(ens.dims.dim_a, k)
    delta = math.sqrt(max(f / fh - 1.0, 0.0))
    l1 = None
    if materialize_l1:
        mom = moment_operator(ens, k)
        haar = haar_moment_operator(ens.dims.dim_a, k)
        l1 = trace_distance(mom.matrix, haar.matrix)
    return DesignReport(
        k=k,
        frame_potential=f,
        haar_frame_potential=fh,
        delta=delta,
        l1_bound=delta,
        l1_exact=l1,
    )


def haar_q_moment(n_a: int, n_b: int, k: int) -> Fraction:
    """Exact k-th moment of an outcome weight under Haar global states.

    Equals prod_{j<k} (dim_a + j) / (dim + j); underflows float at large
    n_b * k, hence the rational return type.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    na, n = 2 ** n_a, 2 ** (n_a + n_b)
    out = Fraction(1)
    for j in range(k):
        out *= Fraction(na + j, n + j)
    return out


def haar_overlap_moment(n_a: int, n_b: int, k: int) -> Fraction:
    """Exact 2k-th absolute moment of the unnormalized overlap between two
    distinct outcomes, under Haar global states."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    na, n = 2 ** n_a, 2 ** (n_a + n_b)
    num = Fraction(math.factorial(k))
    for j in range(k):
        num *= na + j
    den = Fraction(1)
    for i in range(2 * k):
        den *= n + i
    return num / den


def jensen_gap(n_a: int, n_b: int, k: int) -> Fraction:
    """Exact nonnegative gap mu_k - mu_1^k of the Haar outcome-weight moments."""
    return haar_q_moment(n_a, n_b, k) - haar_q_moment(n_a, n_b, 1) ** k


@dataclass(frozen=True)
class HaarStatistics:
    """Closed-form Haar outcome statistics at the given dimensions and order."""

    n_a: int
    n_b: int
    k: int
    mu_k: float
    overlap_moment: float
    jensen_gap: float        # exact gap mu_k - mu_1^k, not a big-O envelope
    r_k: float               # mu_k / mu_{k-1}
    delta_gap: float         # r_k - mu_1


def haar_statistics(n_a: int, n_b: int, k: int) -> HaarStatistics:
    """Evaluate all closed forms in rational arithmetic, then round once."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    mu_k = haar_q_moment(n_a, n_b, k)
    mu_prev = haar_q_moment(n_a, n_b, k - 1)
    mu_1 = haar_q_moment(n_a, n_b, 1)
    r_k = mu_k / mu_prev
    return HaarStatistics(
        n_a=n_a,
        n_b=n_b,
        k=k,
        mu_k=float(mu_k),
        overlap_moment=float(haar_overlap_moment(n_a, n_b, k)),
        jensen_gap=float(mu_k - mu_1 ** k),
        r_k=float(r_k),
        delta_gap=float(r_k - mu_1),
    )
