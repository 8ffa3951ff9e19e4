"""Exact Haar integration over permutation sums: Weingarten tables by Gram
inversion, exact twirls, Haar moments of matrix-entry monomials, and the
closed-form average of the projected ensemble's first frame potential for
structured unitaries V = U diag(D) U^dag with a Haar eigenbasis.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .linalg import DimensionSpec, PureState

__all__ = [
    "all_permutations",
    "identity_permutation",
    "compose",
    "inverse",
    "cycle_type",
    "permutation_operator",
    "WeingartenTable",
    "weingarten_table",
    "gram_entry",
    "haar_twirl_exact",
    "haar_monomial_expectation",
    "expected_projected_f1",
    "catalan_number",
    "wg_leading",
    "wg_leading_from_cycle_type",
    "MAX_TABLE_DEGREE",
]

MAX_TABLE_DEGREE = 8          # 8! = 40320 permutations enumerated at most
MAX_TWIRL_COPIES = 4
MAX_TWIRL_DIM = 4096
MAX_PROJECTED_DIM = 64        # two-copy operator then has dimension <= 4096


@lru_cache(maxsize=16)
def all_permutations(q: int) -> tuple[tuple[int, ...], ...]:
    """All of S_q as image tuples, in lexicographic order."""
    if q < 1:
        raise ValueError(f"degree must be >= 1, got {q}")
    if math.factorial(q) > math.factorial(MAX_TABLE_DEGREE):
        raise ValueError(f"degree {q} exceeds the enumeration guard ({MAX_TABLE_DEGREE})")
    return tuple(itertools.permutations(range(q)))


def identity_permutation(q: int) -> tuple[int, ...]:
    return tuple(range(q))


def compose(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    """The composition p after q: i -> p[q[i]]."""
    return tuple(p[qi] for qi in q)


def inverse(p: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, pi in enumerate(p):
        inv[pi] = i
    return tuple(inv)


def cycle_type(p: tuple[int, ...]) -> tuple[int, ...]:
    """Cycle lengths of a permutation, sorted descending."""
    seen = [False] * len(p)
    lengths = []
    for start in range(len(p)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        lengths.append(length)
    return tuple(sorted(lengths, reverse=True))


def permutation_operator(perm: tuple[int, ...], n: int) -> np.ndarray:
    """Matrix of the copy permutation on (C^n)^(x q).

    Maps the basis vector with digits y to the one with digits x where
    x[perm[m]] = y[m].
    """
    q = len(perm)
    d = n ** q
    cols = np.arange(d)
    digits = np.empty((q, d), dtype=np.int64)
    rem = cols
    for m in range(q - 1, -1, -1):
        digits[m] = rem % n
        rem = rem // n
    inv = inverse(perm)
    rows = np.zeros(d, dtype=np.int64)
    for m in range(q):
        rows = rows * n + digits[inv[m]]
    op = np.zeros((d, d))
    op[rows, cols] = 1.0
    return op


@dataclass(frozen=True)
class WeingartenTable:
    """Weingarten values for S_q at dimension n, keyed by cycle type."""

    q: int
    dim: int
    values: dict

    def value(self, perm: tuple[int, ...]) -> float:
        return self.values[cycle_type(perm)]


def gram_entry(sigma: tuple[int, ...], tau: tuple[int, ...], n: int) -> int:
    """Entry n^cycles(sigma tau^-1) of the permutation Gram matrix."""
    return n ** len(cycle_type(compose(sigma, inverse(tau))))


@lru_cache(maxsize=64)
def weingarten_table(q: int, n: int) -> WeingartenTable:
    """Invert the permutation Gram matrix, collapsed onto conjugacy classes.

    The defining property is sum_tau n^cycles(sigma tau^-1) Wg(tau) =
    delta(sigma = id); since both sides are class functions the system
    reduces to one equation per cycle type, solved exactly over the
    rationals (the full Gram matrix is invertible for n >= q).
    """
    if n < q:
        raise ValueError(f"singular Gram matrix: need dimension >= degree, got n = {n} < q = {q}")
    perms = all_permutations(q)
    classes = sorted({cycle_type(p) for p in perms}, reverse=True)
    index = {c: i for i, c in enumerate(classes)}
    reps = {}
    for p in perms:
        reps.setdefault(cycle_type(p), p)
    m = len(classes)
    a = [[Fraction(0)] * m for _ in range(m)]
    for ci, c in enumerate(classes):
        rep = reps[c]
        row = a[ci]
        for tau in perms:
            row[index[cycle_type(tau)]] += n ** len(cycle_type(compose(rep, inverse(tau))))
    b = [Fraction(1) if c == (1,) * q else Fraction(0) for c in classes]
    sol = _solve_rational(a, b)
    return WeingartenTable(q=q, dim=n, values={c: float(v) for c, v in zip(classes, sol)})


def _solve_rational(a, b):
    """Gaussian elimination over the rationals; a and b are consumed."""
    m = len(b)
    for col in range(m):
        pivot = next(r for r in range(col, m) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        inv_p = Fraction(1) / a[col][col]
        a[col] = [x * inv_p for x in a[col]]
        b[col] *= inv_p
        for r in range(m):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
                b[r] -= factor * b[col]
    return b


def haar_twirl_exact(rho: np.ndarray, q: int, n: int) -> np.ndarray:
    """Average U^(x q) rho U^dag(x q) over Haar U, as an exact permutation sum."""
    if q > MAX_TWIRL_COPIES:
        raise ValueError(f"twirl guard exceeded: q = {q} > {MAX_TWIRL_COPIES}")
    d = n ** q
    if d > MAX_TWIRL_DIM:
        raise ValueError(f"twirl guard exceeded: n^q = {d} > {MAX_TWIRL_DIM}")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"expected shape {(d, d)}, got {rho.shape}")
    table = weingarten_table(q, n)
    perms = all_permutations(q)
    ops = {p: permutation_operator(p, n) for p in perms}
    spectral = {tau: complex(np.trace(rho @ ops[tau])) for tau in perms}
    out = np.zeros((d, d), dtype=complex)
    for sigma in perms:
        coeff = sum(table.values[cycle_type(compose(tau, sigma))] * spectral[tau] for tau in perms)
        out += coeff * ops[sigma]
    return out


def haar_monomial_expectation(rows, cols, conj_rows, conj_cols, n: int) -> complex:
    """Exact Haar mean of prod_m U[rows[m], cols[m]] * conj(U[conj_rows[m], conj_cols[m]]).

    Both factor lists must have the same length q; the value is the standard
    double permutation sum weighted by Weingarten coefficients.
    """
    q = len(rows)
    if not (len(cols) == len(conj_rows) == len(conj_cols) == q):
        raise ValueError("all four index tuples must have the same length")
    if q == 0:
        return 1.0 + 0j
    table = weingarten_table(q, n)
    perms = all_permutations(q)
    total = 0.0
    for sigma in perms:
        if any(rows[m] != conj_rows[sigma[m]] for m in range(q)):
            continue
        for tau in perms:
            if any(cols[m] != conj_cols[tau[m]] for m in range(q)):
                continue
            total += table.values[cycle_type(compose(tau, inverse(sigma)))]
    return complex(total)


# Column positions of the degree-4 monomial in the two-copy average below
# carry the diagonal factors D, D*, D, D* in this order.
_COL_SIGNS = (+1, -1, +1, -1)


def _spectral_trace_factor(tau: tuple[int, ...], d: np.ndarray) -> complex:
    """Product over cycles of tau of tr(D^a (D*)^b) for diagonal unitary D."""
    seen = [False] * 4
    val = 1.0 + 0j
    for start in range(4):
        if seen[start]:
            continue
        pos = neg = 0
        j = start
        while not seen[j]:
            seen[j] = True
            if _COL_SIGNS[j] > 0:
                pos += 1
            else:
                neg += 1
            j = tau[j]
        val *= complex(np.sum(d ** pos * np.conj(d) ** neg))
    return val


def expected_projected_f1(spectrum: np.ndarray, phi: PureState, dims: DimensionSpec) -> float:
    """Haar-eigenbasis average of the projected ensemble's first frame potential.

    For V = U diag(spectrum) U^dag with Haar U acting on the joint space, the
    two-copy averaged operator E_U (V phi V^dag)^(x 2) is assembled exactly
    from the degree-4 Weingarten sum and contracted against the swap of the
    two bath copies, which yields E_U of the reduced-state purity.
    """
    n = dims.dim
    if n > MAX_PROJECTED_DIM:
        raise ValueError(f"dimension guard exceeded: {n} > {MAX_PROJECTED_DIM}")
    d = np.asarray(spectrum, dtype=complex)
    if d.shape != (n,):
        raise ValueError(f"spectrum shape {d.shape} does not match dimension {n}")
    if phi.dim != n:
        raise ValueError(f"state dimension {phi.dim} does not match dims {n}")
    worst = float(np.max(np.abs(np.abs(d) - 1.0)))
    if worst > 1e-9:
        raise ValueError(f"spectrum entries must be unit modulus, worst defect {worst:.3e}")

    table = weingarten_table(4, n)
    perms = all_permutations(4)
    spectral = {tau: _spectral_trace_factor(tau, d) for tau in perms}
    amp = phi.amplitudes
    eye = np.eye(n)

    # Row positions of the monomial are (i1, b1, i2, b2) against the
    # conjugate rows (a1, j1, a2, j2); see the matching rules below. Output
    # axes of the accumulated tensor are [i1, i2, j1, j2] labelled a, b, c, d.
    t_op = np.zeros((n, n, n, n), dtype=complex)
    for sigma in perms:
        coeff = sum(
            table.values[cycle_type(compose(tau, inverse(sigma)))] * spectral[tau]
            for tau in perms
        )
        if abs(coeff) < 1e-18:
            continue
        factors = []
        subs = []
        for out_axis, row_pos in (("a", 0), ("b", 2)):      # ket indices i1, i2
            target = sigma[row_pos]
            if target in (0, 2):                            # tied to a phi ket index
                factors.append(amp)
                subs.append(out_axis)
            else:                                           # tied to an output bra index
                factors.append(eye)
                subs.append(out_axis + ("c" if target == 1 else "d"))
        for row_pos in (1, 3):                              # phi bra indices b1, b2
            target = sigma[row_pos]
            if target in (0, 2):
                continue                                    # contracts to <phi|phi> = 1
            factors.append(amp.conj())
            subs.append("c" if target == 1 else "d")
        t_op += coeff * np.einsum(",".join(subs) + "->abcd", *factors)

    na, nb = dims.dim_a, dims.dim_b
    t8 = t_op.reshape(na, nb, na, nb, na, nb, na, nb)
    value = complex(np.einsum("aebfafbe->", t8))
    if abs(value.imag) > 1e-9:
        raise ArithmeticError(f"imaginary residue {value.imag:.3e} in an expectation that must be real")
    return float(value.real)


def catalan_number(m: int) -> int:
    return math.comb(2 * m, m) // (m + 1)


def wg_leading_from_cycle_type(ct: tuple[int, ...], n: int) -> float:
    """Leading large-n term of the Weingarten function for the given class."""
    q = sum(ct)
    val = float(n) ** (-2 * q + len(ct))
    for length in ct:
        val *= (-1) ** (length - 1) * catalan_number(length - 1)
    return val


def wg_leading(sigma: tuple[int, ...], n: int) -> float:
    """Leading large-n asymptotics of Wg(sigma, n)."""
    return wg_leading_from_cycle_type(cycle_type(sigma), n)
