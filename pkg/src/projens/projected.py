"""Projected ensembles: measure the bath register of a bipartite pure state in
the computational basis and collect the weighted post-measurement states on A.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionSpec, PureState

__all__ = [
    "DROP_THRESHOLD",
    "MAX_BATH_QUBITS",
    "ProjectedState",
    "ProjectedEnsemble",
    "build_projected_ensemble",
    "bath_outcome_gram",
]

# Outcomes below this weight are dropped: their total contribution to any
# k-th moment is at most dim_b * DROP_THRESHOLD in trace norm, far below all
# test tolerances, and keeping them would divide by ~0 when normalizing.
DROP_THRESHOLD = 1e-14

# Exact enumeration guard; larger baths are out of scope at desk scale.
MAX_BATH_QUBITS = 14


@dataclass(frozen=True, eq=False)
class ProjectedState:
    """One measurement branch: outcome index, weight, post-measurement state on A."""

    z: int
    weight: float
    state: PureState

    def bitstring(self, n_b: int) -> str:
        return format(self.z, f"0{n_b}b") if n_b > 0 else ""


@dataclass(eq=False)
class ProjectedEnsemble:
    """The weighted family of post-measurement states on subsystem A."""

    dims: DimensionSpec
    entries: list[ProjectedState]
    _weights: np.ndarray | None = field(default=None, repr=False)
    _states: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def weights(self) -> np.ndarray:
        if self._weights is None:
            self._weights = np.array([e.weight for e in self.entries])
        return self._weights

    @property
    def state_matrix(self) -> np.ndarray:
        """Row i holds the normalized amplitudes of entry i."""
        if self._states is None:
            self._states = np.array([e.state.amplitudes for e in self.entries])
        return self._states


def build_projected_ensemble(phi: PureState, dims: DimensionSpec) -> ProjectedEnsemble:
    """Enumerate all computational-basis outcomes on B and normalize the slices.

    Weights summed over all outcomes (before dropping) must equal 1 within
    1e-12; outcomes below DROP_THRESHOLD are omitted.
    """
    if phi.dim != dims.dim:
        raise ValueError(f"dimension mismatch: state {phi.dim}, dims {dims.dim}")
    if dims.n_b > MAX_BATH_QUBITS:
        raise ValueError(f"n_b = {dims.n_b} exceeds the enumeration guard ({MAX_BATH_QUBITS})")
    m = phi.amplitudes.reshape(dims.dim_a, dims.dim_b)
    q = np.einsum("ab,ab->b", m.conj(), m).real
    total = float(q.sum())
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"outcome weights sum to {total}, expected 1")
    entries = [
        ProjectedState(z=int(z), weight=float(q[z]), state=PureState(m[:, z] / np.sqrt(q[z])))
        for z in range(dims.dim_b)
        if q[z] > DROP_THRESHOLD
    ]
    return ProjectedEnsemble(dims=dims, entries=entries)


def bath_outcome_gram(phi: PureState, dims: DimensionSpec) -> tuple[np.ndarray, np.ndarray]:
    """Outcome weights and the Gram matrix of the unnormalized slices.

    Returns (q, gram) where q[z] is the outcome weight and gram[z1, z2] is the
    inner product of the unnormalized post-measurement vectors. Nothing is
    dropped, so moments over all outcomes can be formed exactly.
    """
    if phi.dim != dims.dim:
        raise ValueError(f"dimension mismatch: state {phi.dim}, dims {dims.dim}")
    if dims.n_b > MAX_BATH_QUBITS:
        raise ValueError(f"n_b = {dims.n_b} exceeds the enumeration guard ({MAX_BATH_QUBITS})")
    m = phi.amplitudes.reshape(dims.dim_a, dims.dim_b)
    gram = m.conj().T @ m
    return gram.diagonal().real.copy(), gram
