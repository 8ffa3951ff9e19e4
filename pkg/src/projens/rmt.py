"""Gaussian unitary ensemble sampling, normalized trace moments of the
evolution unitary, and Bessel-function machinery for the moment envelope.

Normalization: matrix entries have E|G_ij|^2 = 1/N (diagonal variance 1/N),
so the spectral density converges to the semicircle on [-2, 2] and the
infinite-size first trace moment of exp(-iGt) is J1(2t)/t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import SpectralDecomposition

__all__ = [
    "GueSample",
    "TraceMomentVector",
    "sample_gue",
    "normalized_trace_moments",
    "bessel_j1",
    "bessel_zero_times",
    "gue_moment_envelope",
]


@dataclass(frozen=True, eq=False)
class GueSample:
    """A GUE draw with its spectral decomposition cached."""

    dim: int
    operator: np.ndarray
    spectrum: np.ndarray      # eigenvalues, ascending
    basis: np.ndarray         # eigenvector columns

    def decomposition(self) -> SpectralDecomposition:
        return SpectralDecomposition(eigenvalues=self.spectrum, eigenvectors=self.basis)


def sample_gue(n: int, rng: np.random.Generator) -> GueSample:
    """Draw an n x n GUE matrix.

    Diagonal entries are real N(0, 1/n); off-diagonal entries are complex
    Gaussian with E|G_ij|^2 = 1/n. Hermitian by construction.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(n)
    g = (a + a.conj().T) / 2.0    # diagonal variance 1/n, off-diagonal E|G_ij|^2 = 1/n
    w, v = np.linalg.eigh(g)
    return GueSample(dim=n, operator=g, spectrum=w, basis=v)


@dataclass(frozen=True, eq=False)
class TraceMomentVector:
    """Normalized trace moments alpha_p = (1/N) tr exp(-i*G*t*p), p = 1..p_max."""

    t: float
    p_max: int
    alpha: np.ndarray

    @property
    def one_norm(self) -> float:
        return float(np.sum(np.abs(self.alpha)))


def normalized_trace_moments(g: GueSample, t: float, p_max: int) -> TraceMomentVector:
    """Trace moments of the evolution unitary, from the cached spectrum."""
    if p_max < 1:
        raise ValueError(f"p_max must be >= 1, got {p_max}")
    p = np.arange(1, p_max + 1)
    phases = np.exp(-1j * np.outer(p, g.spectrum) * t)
    return TraceMomentVector(t=float(t), p_max=p_max, alpha=phases.mean(axis=1))


def bessel_j1(x: float) -> float:
    """Bessel function of the first kind J1.

    Ascending power series for |x| <= 12, Hankel asymptotic expansion beyond;
    absolute accuracy better than 1e-10 everywhere.
    """
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"argument must be finite, got {x}")
    ax = abs(x)
    if ax <= 12.0:
        half = x / 2.0
        term = half
        total = half
        for m in range(1, 30):
            term *= -(half * half) / (m * (m + 1))
            total += term
        return total
    # Hankel expansion with mu = 4*nu^2 = 4: terms a_k / x^k split into the
    # cosine (even k) and sine (odd k) series, truncated adaptively.
    chi = ax - 0.75 * math.pi
    p_sum = 0.0
    q_sum = 0.0
    term = 1.0
    prev = math.inf
    k = 0
    while k < 40:
        mag = abs(term)
        if mag >= prev or mag < 1e-18:
            break
        prev = mag
        signed = term if (k // 2) % 2 == 0 else -term
        if k % 2 == 0:
            p_sum += signed
        else:
            q_sum += signed
        k += 1
        term *= (4.0 - (2 * k - 1) ** 2) / (8.0 * k * ax)
    val = math.sqrt(2.0 / (math.pi * ax)) * (math.cos(chi) * p_sum - math.sin(chi) * q_sum)
    return val if x > 0 else -val


def bessel_zero_times(count: int) -> np.ndarray:
    """Ascending positive times t with J1(2t) = 0, i.e. where J1(2t)/t vanishes.

    t = 0 is excluded (there J1(2t)/t -> 1). Roots are isolated by sign-change
    bracketing on a 0.1-spaced grid and refined by bisection to 1e-10.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    roots = []
    step = 0.1
    x_lo = step
    f_lo = bessel_j1(x_lo)
    x = x_lo
    while len(roots) < count:
        x_hi = x + step
        f_hi = bessel_j1(x_hi)
        if f_lo == 0.0:
            roots.append(x)
        elif f_lo * f_hi < 0.0:
            a, b, fa = x, x_hi, f_lo
            while b - a > 1e-10:
                mid = 0.5 * (a + b)
                fm = bessel_j1(mid)
                if fa * fm <= 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
        x, f_lo = x_hi, f_hi
    return np.array(roots[:count]) / 2.0


def gue_moment_envelope(t: float, n: int, k0: float = 1.0) -> float:
    """Upper envelope |J1(2t)/t| + k0 * t / n for the mean first trace moment.

    The constant k0 is a free parameter; experiment summaries report the
    smallest value consistent with the data rather than asserting one.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    return abs(bessel_j1(2.0 * t) / t) + k0 * t / n
