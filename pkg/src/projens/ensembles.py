"""Samplers for the global-state ensembles under study: Haar states and
unitaries, GUE evolutions, and structured V = U diag(D) U^dag ensembles with
configurable unit-modulus spectra.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionSpec, PureState, check_unitary, computational_zero, evolve_with_decomposition
from .rmt import sample_gue

__all__ = [
    "SpectrumSpec",
    "GlobalEnsembleSpec",
    "sample_haar_unitary",
    "sample_haar_state",
    "sample_spectrum",
    "build_structured_unitary",
    "fixed_basis_unitary",
    "sample_global_state",
]

SPECTRUM_KINDS = ("gue_exp", "zero_trace_paired", "fixed")

# Deterministic seed for the fixed-basis negative control.
_FIXED_BASIS_SEED = 0xF1CED


def sample_haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix.

    The triangular factor's diagonal phases are divided out, which makes the
    distribution exactly left-invariant.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_haar_state(n: int, rng: np.random.Generator) -> PureState:
    """Haar-random pure state: a normalized complex Gaussian vector."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState(v / np.linalg.norm(v))


@dataclass(frozen=True, eq=False)
class SpectrumSpec:
    """Recipe for a unit-modulus eigenvalue vector of a structured unitary.

    Kinds:
      * ``gue_exp``: exp(-i * lambda * t) for a fresh GUE spectrum lambda.
      * ``zero_trace_paired``: uniform phases emitted with their antipodes,
        so the sum vanishes exactly.
      * ``fixed``: a caller-supplied vector, validated to unit modulus.
    """

    kind: str
    dim: int
    t: float = 0.0
    values: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in SPECTRUM_KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        if self.kind == "zero_trace_paired" and self.dim % 2 != 0:
            raise ValueError("zero_trace_paired requires an even dimension")
        if self.kind == "fixed":
            vals = np.asarray(self.values, dtype=complex)
            if vals.shape != (self.dim,):
                raise ValueError(f"fixed spectrum must have shape ({self.dim},)")
            worst = float(np.max(np.abs(np.abs(vals) - 1.0)))
            if worst > 1e-12:
                raise ValueError(f"fixed spectrum entries must be unit modulus, worst defect {worst:.3e}")
            object.__setattr__(self, "values", vals)

    @classmethod
    def gue_exp(cls, dim: int, t: float) -> "SpectrumSpec":
        return cls(kind="gue_exp", dim=dim, t=float(t))

    @classmethod
    def zero_trace_paired(cls, dim: int) -> "SpectrumSpec":
        return cls(kind="zero_trace_paired", dim=dim)

    @classmethod
    def fixed(cls, values) -> "SpectrumSpec":
        values = np.asarray(values, dtype=complex)
        return cls(kind="fixed", dim=values.size, values=values)


def sample_spectrum(spec: SpectrumSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw a unit-modulus eigenvalue vector according to the spectrum recipe."""
    if spec.kind == "gue_exp":
        g = sample_gue(spec.dim, rng)
        return np.exp(-1j * g.spectrum * spec.t)
    if spec.kind == "zero_trace_paired":
        theta = rng.uniform(0.0, 2.0 * np.pi, spec.dim // 2)
        phases = np.exp(1j * theta)
        out = np.empty(spec.dim, dtype=complex)
        out[0::2] = phases        # interleaved antipodal pairs cancel exactly
        out[1::2] = -phases
        return out
    return spec.values.copy()


def build_structured_unitary(u: np.ndarray, spectrum: np.ndarray) -> np.ndarray:
    """Assemble V = u * diag(spectrum) * u^dag from a basis and unit-modulus spectrum."""
    u = check_unitary(u)
    d = np.asarray(spectrum, dtype=complex)
    if d.shape != (u.shape[0],):
        raise ValueError(f"dimension mismatch: basis {u.shape[0]}, spectrum {d.shape}")
    return (u * d) @ u.conj().T


def fixed_basis_unitary(n: int) -> np.ndarray:
    """Deterministic fixed eigenbasis, the negative-control alternative to Haar."""
    rng = np.random.default_rng(np.random.SeedSequence(_FIXED_BASIS_SEED))
    return sample_haar_unitary(n, rng)


@dataclass(frozen=True, eq=False)
class GlobalEnsembleSpec:
    """Recipe for the global bipartite pure state fed into projection.

    Kinds: ``haar_state``, ``gue_evolution`` (time t), and ``structured``
    (a SpectrumSpec plus eigenbasis choice ``haar`` or ``fixed``).
    """

    kind: str
    dims: DimensionSpec
    t: float = 0.0
    spectrum: SpectrumSpec | None = None
    basis: str = "haar"
    initial_state: PureState | None = None

    def __post_init__(self):
        if self.kind not in ("haar_state", "gue_evolution", "structured"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == "structured":
            if self.spectrum is None:
                raise ValueError("structured ensembles need a SpectrumSpec")
            if self.spectrum.dim != self.dims.dim:
                raise ValueError("spectrum dimension does not match dims")
            if self.basis not in ("haar", "fixed"):
                raise ValueError(f"unknown basis {self.basis!r}")
        if self.initial_state is not None and self.initial_state.dim != self.dims.dim:
            raise ValueError("initial state dimension does not match dims")

    def initial(self) -> PureState:
        return self.initial_state if self.initial_state is not None else computational_zero(self.dims.dim)


def sample_global_state(spec: GlobalEnsembleSpec, rng: np.random.Generator) -> PureState:
    """Draw one global pure state from the ensemble recipe."""
    n = spec.dims.dim
    if spec.kind == "haar_state":
        return sample_haar_state(n, rng)
    if spec.kind == "gue_evolution":
        g = sample_gue(n, rng)
        return evolve_with_decomposition(g.decomposition(), spec.t, spec.initial())
    d = sample_spectrum(spec.spectrum, rng)
    u = sample_haar_unitary(n, rng) if spec.basis == "haar" else fixed_basis_unitary(n)
    v = (u * d) @ u.conj().T
    return PureState(v @ spec.initial().amplitudes)
