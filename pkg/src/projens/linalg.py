"""Dense complex linear algebra kernel: spectral decompositions, unitary
evolution, partial traces and trace-norm distances for bipartite pure states.

Conventions fixed here and used everywhere else:

* A joint basis index decomposes as ``i = a * dim_b + b`` with the subsystem A
  index ``a`` as the most significant factor, so projecting onto a bath
  outcome is a contiguous strided slice.
* Time evolution applies ``exp(-i * H * t)``, always through the spectral
  decomposition (inputs are Hermitian, so this is exact up to rounding).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Tolerances",
    "TOL",
    "DimensionSpec",
    "PureState",
    "SpectralDecomposition",
    "computational_zero",
    "check_hermitian",
    "check_unitary",
    "eig_hermitian",
    "evolve_state",
    "evolve_with_decomposition",
    "reduced_density_a",
    "trace_distance",
]


@dataclass
class Tolerances:
    """Global numerical tolerances, adjustable in one place."""

    norm: float = 1e-10           # normalization / trace / Hermiticity checks
    reconstruction: float = 1e-9  # spectral reconstruction / unitarity checks


TOL = Tolerances()


@dataclass(frozen=True)
class DimensionSpec:
    """Qubit counts of subsystem A and bath B, with derived Hilbert dimensions."""

    n_a: int
    n_b: int

    def __post_init__(self):
        if self.n_a < 1:
            raise ValueError(f"n_a must be >= 1, got {self.n_a}")
        if self.n_b < 0:
            raise ValueError(f"n_b must be >= 0, got {self.n_b}")

    @property
    def dim_a(self) -> int:
        return 2 ** self.n_a

    @property
    def dim_b(self) -> int:
        return 2 ** self.n_b

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized complex amplitude vector on a Hilbert space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 1:
            raise ValueError("amplitudes must be a nonempty vector")
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > TOL.norm:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def computational_zero(dim: int) -> PureState:
    """The |0...0> basis state of the given Hilbert dimension."""
    amp = np.zeros(dim, dtype=complex)
    amp[0] = 1.0
    return PureState(amp)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def check_hermitian(h: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Validate Hermiticity, returning the array as a complex matrix."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    asym = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    tol = TOL.norm if tol is None else tol
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian: max asymmetry {asym:.3e} > {tol:.1e}")
    return h


def check_unitary(u: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Validate unitarity in max-norm, returning the array as a complex matrix."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    tol = TOL.reconstruction if tol is None else tol
    if defect > tol:
        raise ValueError(f"matrix is not unitary: max defect {defect:.3e} > {tol:.1e}")
    return u


def eig_hermitian(h: np.ndarray) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    h = check_hermitian(h)
    w, v = np.linalg.eigh(h)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def evolve_with_decomposition(decomp: SpectralDecomposition, t: float, psi0: PureState) -> PureState:
    """Apply exp(-i*H*t) given a precomputed spectral decomposition of H."""
    if decomp.dim != psi0.dim:
        raise ValueError(f"dimension mismatch: operator {decomp.dim}, state {psi0.dim}")
    v = decomp.eigenvectors
    coeffs = v.conj().T @ psi0.amplitudes
    return PureState(v @ (np.exp(-1j * decomp.eigenvalues * t) * coeffs))


def evolve_state(h: np.ndarray, t: float, psi0: PureState) -> PureState:
    """Evolve psi0 by exp(-i*H*t) via spectral decomposition of Hermitian H."""
    if not np.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    return evolve_with_decomposition(eig_hermitian(h), t, psi0)


def reduced_density_a(psi: PureState, dims: DimensionSpec) -> np.ndarray:
    """Reduced density operator on subsystem A of a bipartite pure state."""
    if psi.dim != dims.dim:
        raise ValueError(f"dimension mismatch: state {psi.dim}, dims {dims.dim}")
    m = psi.amplitudes.reshape(dims.dim_a, dims.dim_b)
    return m @ m.conj().T


def trace_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Trace norm ||x - y||_1 of the difference of two Hermitian operators.

    Callers wanting the conventional distance between density operators
    divide by 2.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    diff = check_hermitian(x - y, tol=max(TOL.norm * 100, 1e-8))
    return float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
