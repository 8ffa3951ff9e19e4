"""Reproducible sweep runner binding ensembles, projection and design metrics
into the named experiments E1..E7, with seeded parallel trials, CSV/JSON
persistence and per-experiment derived summaries.

Determinism contract: per-trial generator streams are derived from
(seed, experiment id, group index, trial index) through SeedSequence spawn
keys, and records are merged in (grid point, trial) order, so outputs are
identical for identical (config, seed) at any worker count.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from . import __version__
from .linalg import DimensionSpec, PureState, computational_zero, trace_distance
from .rmt import bessel_j1, bessel_zero_times, gue_moment_envelope, normalized_trace_moments, sample_gue
from .ensembles import sample_haar_state, sample_haar_unitary, sample_spectrum, SpectrumSpec
from .projected import MAX_BATH_QUBITS, bath_outcome_gram, build_projected_ensemble
from .designs import (
    MAX_DENSE_DIM,
    frame_potential,
    haar_frame_potential,
    haar_moment_operator,
    haar_overlap_moment,
    haar_q_moment,
    moment_operator,
)
from .weingarten import MAX_PROJECTED_DIM, expected_projected_f1

__all__ = [
    "ConfigError",
    "ExperimentError",
    "Thresholds",
    "ExperimentConfig",
    "ResultRecord",
    "EXPERIMENT_NAMES",
    "CSV_HEADER",
    "parse_config_text",
    "load_config",
    "config_canonical_text",
    "build_points",
    "run_experiment",
    "summarize",
    "write_results_csv",
]


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configuration."""


class ExperimentError(RuntimeError):
    """Raised when a run cannot produce a trustworthy result set."""


EXPERIMENT_NAMES = (
    "E1_bessel_roots",
    "E2_time_scan",
    "E3_2k_to_k",
    "E4_structured",
    "E5_weingarten_k1",
    "E6_haar_closed_forms",
    "E7_gue_diagnostics",
)
_EXPERIMENT_IDS = {name: i + 1 for i, name in enumerate(EXPERIMENT_NAMES)}

CSV_HEADER = (
    "experiment,trial,seed,n_a,n_b,k,t,f_k,f_haar,delta_sq,l1_exact,"
    "alpha1_re,alpha1_im,one_norm,wall_ms"
)

# Sub-stream index reserved for per-group setup (fixed spectra etc.),
# disjoint from trial indices.
_SETUP_STREAM = 0xFFFFFFFF

# E4 writes its spectrum arm into the otherwise unused t column:
# 0 = zero-trace spectrum, 1 = fixed biased control.
E4_ARM_ZERO_TRACE = 0.0
E4_ARM_CONTROL = 1.0


@dataclass(frozen=True)
class Thresholds:
    """Pinned constants for pass/fail bookkeeping where claims are asymptotic."""

    slope_target: float = -1.0
    slope_window: float = 0.3
    envelope_constant: float = 4.0      # distance envelope constant * k / sqrt(dim_a)
    separation_factor: float = 3.0      # zero-trace vs biased-control gap ratio
    root_contrast_factor: float = 5.0   # gap at |J1| peaks vs gap at roots


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n_a: tuple[int, ...]
    n_b: tuple[int, ...]
    k: tuple[int, ...]
    t_policy: str
    trials: int
    seed: int
    output_dir: str = "runs"
    k0: float = 1.0
    pair_dims: bool = False
    record_wall_ms: bool = False
    thresholds: Thresholds = field(default_factory=Thresholds)

    def t_values(self) -> tuple[float, ...]:
        return _resolve_t_policy(self.t_policy)

    def dims_list(self) -> list[tuple[int, int]]:
        if self.pair_dims:
            if len(self.n_a) != len(self.n_b):
                raise ConfigError("pair_dims requires n_a and n_b lists of equal length")
            return list(zip(self.n_a, self.n_b))
        return [(a, b) for a in self.n_a for b in self.n_b]


class GridPoint(NamedTuple):
    n_a: int
    n_b: int
    k: int
    t: float


@dataclass
class ResultRecord:
    experiment: str
    trial: int
    seed: int
    n_a: int
    n_b: int
    k: int
    t: float
    f_k: float | None = None
    f_haar: float | None = None
    delta_sq: float | None = None
    l1_exact: float | None = None
    alpha1_re: float | None = None
    alpha1_im: float | None = None
    one_norm: float | None = None
    wall_ms: float | None = None

    def point(self) -> GridPoint:
        return GridPoint(self.n_a, self.n_b, self.k, self.t)


_METRIC_FIELDS = ("f_k", "f_haar", "delta_sq", "l1_exact", "alpha1_re", "alpha1_im", "one_norm", "wall_ms")


# ----------------------------------------------------------------------------
# Configuration file parsing: a flat "key = value" text format.
# ----------------------------------------------------------------------------

_INT_LIST_KEYS = ("n_a", "n_b", "k")
_BOOL_KEYS = ("pair_dims", "record_wall_ms")
_FLOAT_KEYS = ("k0",)
_THRESHOLD_KEYS = ("slope_target", "slope_window", "envelope_constant", "separation_factor", "root_contrast_factor")


def _parse_int_list(value: str, key: str) -> tuple[int, ...]:
    value = value.strip()
    m = re.fullmatch(r"(-?\d+)\s*\.\.\s*(-?\d+)", value)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError(f"{key}: empty range {value!r}")
        return tuple(range(lo, hi + 1))
    try:
        return tuple(int(p.strip()) for p in value.split(","))
    except ValueError:
        raise ConfigError(f"{key}: cannot parse integer list from {value!r}") from None


def _resolve_t_policy(policy: str) -> tuple[float, ...]:
    policy = policy.strip()
    m = re.fullmatch(r"bessel_root\((\d+)\)", policy)
    if m:
        return (float(bessel_zero_times(int(m.group(1)))[-1]),)
    m = re.fullmatch(r"bessel_roots\((\d+)\)", policy)
    if m:
        return tuple(float(t) for t in bessel_zero_times(int(m.group(1))))
    m = re.fullmatch(r"scan\(([^,]+),([^,]+),([^)]+)\)", policy)
    if m:
        start, stop, step = (float(p) for p in m.groups())
        if step <= 0 or stop < start:
            raise ConfigError(f"invalid scan policy {policy!r}")
        out = []
        i = 0
        while True:
            v = start + i * step
            if v > stop + 1e-12:
                break
            out.append(v)
            i += 1
        return tuple(out)
    try:
        return tuple(float(p.strip()) for p in policy.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse t policy {policy!r}") from None


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the key = value experiment configuration format.

    Unknown keys are errors; the full schema is documented in the README.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    known = {"experiment", "n_a", "n_b", "k", "t", "trials", "seed", "output_dir",
             *_FLOAT_KEYS, *_BOOL_KEYS, *_THRESHOLD_KEYS}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for required in ("experiment", "trials", "seed", "n_a", "n_b", "k"):
        if required not in raw:
            raise ConfigError(f"missing required config key {required!r}")

    experiment = raw["experiment"]
    if experiment not in EXPERIMENT_NAMES:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENT_NAMES)}")

    kwargs: dict = {
        "experiment": experiment,
        "n_a": _parse_int_list(raw["n_a"], "n_a"),
        "n_b": _parse_int_list(raw["n_b"], "n_b"),
        "k": _parse_int_list(raw["k"], "k"),
        "t_policy": raw.get("t", "0.0"),
        "trials": int(raw["trials"]),
        "seed": int(raw["seed"]),
    }
    if "output_dir" in raw:
        kwargs["output_dir"] = raw["output_dir"]
    for key in _FLOAT_KEYS:
        if key in raw:
            kwargs[key] = float(raw[key])
    for key in _BOOL_KEYS:
        if key in raw:
            value = raw[key].lower()
            if value not in ("true", "false"):
                raise ConfigError(f"{key}: expected true or false, got {raw[key]!r}")
            kwargs[key] = value == "true"
    thr = {}
    for key in _THRESHOLD_KEYS:
        if key in raw:
            thr[key] = float(raw[key])
    if thr:
        kwargs["thresholds"] = replace(Thresholds(), **thr)

    cfg = ExperimentConfig(**kwargs)
    validate_config(cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def config_canonical_text(cfg: ExperimentConfig) -> str:
    """Canonical serialization used for the manifest hash."""
    items = {
        "experiment": cfg.experiment,
        "n_a": ",".join(map(str, cfg.n_a)),
        "n_b": ",".join(map(str, cfg.n_b)),
        "k": ",".join(map(str, cfg.k)),
        "t": cfg.t_policy,
        "trials": str(cfg.trials),
        "seed": str(cfg.seed),
        "k0": f"{cfg.k0:.17g}",
        "pair_dims": str(cfg.pair_dims).lower(),
        "record_wall_ms": str(cfg.record_wall_ms).lower(),
    }
    for f in fields(Thresholds):
        items[f.name] = f"{getattr(cfg.thresholds, f.name):.17g}"
    return "\n".join(f"{k}={v}" for k, v in sorted(items.items())) + "\n"


def validate_config(cfg: ExperimentConfig) -> None:
    """Check every grid point against module guards before any work starts."""
    problems = []
    if cfg.trials < 1:
        problems.append(f"trials must be >= 1, got {cfg.trials}")
    if not (0 <= cfg.seed < 2 ** 64):
        problems.append(f"seed must be a 64-bit unsigned integer, got {cfg.seed}")
    try:
        cfg.t_values()
    except ConfigError as exc:
        problems.append(str(exc))
    if cfg.pair_dims and len(cfg.n_a) != len(cfg.n_b):
        problems.append("pair_dims requires n_a and n_b of equal length")
        raise ConfigError("; ".join(problems))
    needs_projection = cfg.experiment != "E7_gue_diagnostics"
    for n_a, n_b in cfg.dims_list():
        label = f"(n_a={n_a}, n_b={n_b})"
        if n_a < 1 or n_b < 0:
            problems.append(f"{label}: invalid qubit counts")
            continue
        if needs_projection and n_b > MAX_BATH_QUBITS:
            problems.append(f"{label}: n_b exceeds the enumeration guard ({MAX_BATH_QUBITS})")
        dim = 2 ** (n_a + n_b)
        if cfg.experiment == "E7_gue_diagnostics" and dim > 4096:
            problems.append(f"{label}: joint dimension {dim} exceeds the sampling guard (4096)")
        if cfg.experiment == "E3_2k_to_k":
            for k in cfg.k:
                if (2 ** n_a) ** k > MAX_DENSE_DIM:
                    problems.append(f"{label}, k={k}: moment operator guard {MAX_DENSE_DIM} exceeded")
        if cfg.experiment == "E5_weingarten_k1":
            if dim > MAX_PROJECTED_DIM:
                problems.append(f"{label}: joint dimension {dim} exceeds the exact-average guard ({MAX_PROJECTED_DIM})")
            if dim % 2 != 0:
                problems.append(f"{label}: zero-trace spectra need even dimension")
    if cfg.experiment in ("E5_weingarten_k1", "E4_structured") and tuple(cfg.k) != (1,):
        problems.append(f"{cfg.experiment} requires k = 1")
    if cfg.experiment == "E7_gue_diagnostics" and len(cfg.k) != 1:
        problems.append("E7_gue_diagnostics takes a single k (the trace-moment count)")
    if any(k < 1 for k in cfg.k):
        problems.append("k entries must be >= 1")
    if problems:
        raise ConfigError("; ".join(problems))


# ----------------------------------------------------------------------------
# Experiment definitions: grouping, per-trial work, derived summaries.
# Groups share one sampled object per trial (a GUE draw, a Haar state...)
# across the inner sweep (k values or the t scan), which both cuts the
# dominant eigendecomposition cost and correlates scan points for cleaner
# contrasts.
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class _TrialOutput:
    point: GridPoint
    metrics: dict
    aux: dict


def _points_e1(cfg):
    return [GridPoint(a, b, k, t) for a, b in cfg.dims_list() for t in cfg.t_values() for k in cfg.k]


def _groups_e1(cfg):
    return [(a, b, t) for a, b in cfg.dims_list() for t in cfg.t_values()]


def _run_e1(cfg, group, ctx, rng):
    n_a, n_b, t = group
    dims = DimensionSpec(n_a, n_b)
    g = sample_gue(dims.dim, rng)
    psi = _evolve_zero(g, t)
    ens = build_projected_ensemble(psi, dims)
    alpha1 = complex(np.mean(np.exp(-1j * g.spectrum * t)))
    outs = []
    for k in cfg.k:
        f = frame_potential(ens, k)
        fh = haar_frame_potential(dims.dim_a, k)
        outs.append(_TrialOutput(
            GridPoint(n_a, n_b, k, t),
            {"f_k": f, "f_haar": fh, "delta_sq": f / fh - 1.0,
             "alpha1_re": alpha1.real, "alpha1_im": alpha1.imag},
            {},
        ))
    return outs


def _evolve_zero(g, t):
    coeffs = g.basis.conj()[0, :]
    return PureState(g.basis @ (np.exp(-1j * g.spectrum * t) * coeffs))


def _derived_e1(cfg, point_stats, aux_points, aux_groups):
    fits = []
    for (n_a, k, t) in sorted({(p.n_a, p.k, p.t) for p in point_stats}):
        rows = sorted((p.n_b, s) for p, s in point_stats.items() if (p.n_a, p.k, p.t) == (n_a, k, t))
        n_bs = [r[0] for r in rows]
        gaps = [r[1]["f_k"]["mean"] - r[1]["f_haar"]["mean"] for r in rows]
        entry = {"n_a": n_a, "k": k, "t": t, "n_b": n_bs, "gap": gaps}
        if len(rows) >= 2 and all(g > 0 for g in gaps):
            slope = float(np.polyfit(np.log([2.0 ** b for b in n_bs]), np.log(gaps), 1)[0])
            entry["slope"] = slope
            entry["slope_in_window"] = bool(
                abs(slope - cfg.thresholds.slope_target) <= cfg.thresholds.slope_window
            )
        fits.append(entry)
    return {"slope_fits": fits}


def _points_e2(cfg):
    return [GridPoint(a, b, k, t) for a, b in cfg.dims_list() for k in cfg.k for t in cfg.t_values()]


def _groups_e2(cfg):
    return [(a, b, k) for a, b in cfg.dims_list() for k in cfg.k]


def _run_e2(cfg, group, ctx, rng):
    n_a, n_b, k = group
    dims = DimensionSpec(n_a, n_b)
    g = sample_gue(dims.dim, rng)
    fh = haar_frame_potential(dims.dim_a, k)
    outs = []
    for t in cfg.t_values():
        psi = _evolve_zero(g, t)
        ens = build_projected_ensemble(psi, dims)
        f = frame_potential(ens, k)
        alpha1 = complex(np.mean(np.exp(-1j * g.spectrum * t)))
        outs.append(_TrialOutput(
            GridPoint(n_a, n_b, k, t),
            {"f_k": f, "f_haar": fh, "delta_sq": f / fh - 1.0,
             "alpha1_re": alpha1.real, "alpha1_im": alpha1.imag},
            {},
        ))
    return outs


def _derived_e2(cfg, point_stats, aux_points, aux_groups):
    out = {}
    for (n_a, n_b, k) in sorted({(p.n_a, p.n_b, p.k) for p in point_stats}):
        rows = sorted((p.t, s) for p, s in point_stats.items() if (p.n_a, p.n_b, p.k) == (n_a, n_b, k))
        ts = np.array([r[0] for r in rows])
        gaps = np.array([r[1]["f_k"]["mean"] - r[1]["f_haar"]["mean"] for r in rows])
        a1 = np.array([abs(complex(r[1]["alpha1_re"]["mean"], r[1]["alpha1_im"]["mean"])) for r in rows])
        step = float(np.min(np.diff(ts))) if len(ts) > 1 else 0.0

        minima = [i for i in range(1, len(ts) - 1) if gaps[i] < gaps[i - 1] and gaps[i] < gaps[i + 1]]
        roots = [float(r) for r in bessel_zero_times(16) if ts[0] - 1e-9 <= r <= ts[-1] + 1e-9]
        root_idx = [int(np.argmin(np.abs(ts - r))) for r in roots]
        minima_dist = [
            float(min((abs(ts[m] - r) for m in minima), default=math.inf)) for r in roots
        ]

        peak_idx = []
        for lo, hi in zip(root_idx[:-1], root_idx[1:]):
            if hi - lo > 1:
                inner = range(lo + 1, hi)
                curve = [abs(bessel_j1(2.0 * ts[i]) / ts[i]) for i in inner]
                peak_idx.append(lo + 1 + int(np.argmax(curve)))
        contrasts = []
        for j, pk in enumerate(peak_idx):
            for ri in (root_idx[j], root_idx[j + 1]):
                if gaps[ri] > 0:
                    contrasts.append(float(gaps[pk] / gaps[ri]))
        entry = {
            "n_a": n_a, "n_b": n_b, "k": k, "scan_step": step,
            "roots_in_range": roots,
            "gap_at_roots": [float(gaps[i]) for i in root_idx],
            "peak_times": [float(ts[i]) for i in peak_idx],
            "gap_at_peaks": [float(gaps[i]) for i in peak_idx],
            "local_minima_times": [float(ts[i]) for i in minima],
            "root_to_nearest_minimum": minima_dist,
            "gap_contrast_min": float(min(contrasts)) if contrasts else None,
            "gap_contrast_ok": bool(contrasts and min(contrasts) >= cfg.thresholds.root_contrast_factor),
            "alpha1_at_roots": [float(a1[i]) for i in root_idx],
            "alpha1_at_peaks": [float(a1[i]) for i in peak_idx],
        }
        out[f"n_a={n_a},n_b={n_b},k={k}"] = entry
    return {"time_scans": out}


def _points_e3(cfg):
    return [GridPoint(a, b, k, 0.0) for a, b in cfg.dims_list() for k in cfg.k]


def _groups_e3(cfg):
    return _points_e3(cfg)


def _run_e3(cfg, group, ctx, rng):
    point = GridPoint(*group)
    dims = DimensionSpec(point.n_a, point.n_b)
    psi = sample_haar_state(dims.dim, rng)
    ens = build_projected_ensemble(psi, dims)
    k = point.k
    f = frame_potential(ens, k)
    fh = haar_frame_potential(dims.dim_a, k)
    mom = moment_operator(ens, k)
    l1 = trace_distance(mom.matrix, haar_moment_operator(dims.dim_a, k).matrix)
    return [_TrialOutput(point, {"f_k": f, "f_haar": fh, "delta_sq": f / fh - 1.0, "l1_exact": l1}, {})]


def _derived_e3(cfg, point_stats, aux_points, aux_groups):
    out = []
    for k in sorted({p.k for p in point_stats}):
        rows = sorted((p.n_a, p.n_b, s) for p, s in point_stats.items() if p.k == k)
        means = [r[2]["l1_exact"]["mean"] for r in rows]
        envs = [cfg.thresholds.envelope_constant * k / math.sqrt(2.0 ** r[0]) for r in rows]
        out.append({
            "k": k,
            "n_a": [r[0] for r in rows],
            "mean_l1": means,
            "envelope": envs,
            "within_envelope": bool(all(m <= e for m, e in zip(means, envs))),
            "strictly_decreasing": bool(all(means[i + 1] < means[i] for i in range(len(means) - 1))),
        })
    return {"distance_vs_dim": out}


def _points_e4(cfg):
    return [GridPoint(a, b, 1, arm) for a, b in cfg.dims_list()
            for arm in (E4_ARM_ZERO_TRACE, E4_ARM_CONTROL)]


def _groups_e4(cfg):
    return cfg.dims_list()


def _setup_e4(cfg, group, rng):
    n_a, n_b = group
    dim = 2 ** (n_a + n_b)
    # Fixed biased control spectrum: phases limited to a half circle keep the
    # mean trace bounded away from zero.
    theta = rng.uniform(-np.pi / 2.0, np.pi / 2.0, dim)
    return {"control_spectrum": np.exp(1j * theta)}


def _run_e4(cfg, group, ctx, rng):
    n_a, n_b = group
    dims = DimensionSpec(n_a, n_b)
    fh = haar_frame_potential(dims.dim_a, 1)
    outs = []
    for arm, d in (
        (E4_ARM_ZERO_TRACE, sample_spectrum(SpectrumSpec.zero_trace_paired(dims.dim), rng)),
        (E4_ARM_CONTROL, ctx["control_spectrum"]),
    ):
        u = sample_haar_unitary(dims.dim, rng)
        psi = PureState((u * d) @ (u.conj().T @ computational_zero(dims.dim).amplitudes))
        f = frame_potential(build_projected_ensemble(psi, dims), 1)
        tau = complex(np.mean(d))
        outs.append(_TrialOutput(
            GridPoint(n_a, n_b, 1, arm),
            {"f_k": f, "f_haar": fh, "delta_sq": f / fh - 1.0,
             "alpha1_re": tau.real, "alpha1_im": tau.imag},
            {},
        ))
    return outs


def _derived_e4(cfg, point_stats, aux_points, aux_groups):
    out = []
    for (n_a, n_b) in sorted({(p.n_a, p.n_b) for p in point_stats}):
        gaps = {}
        for arm, name in ((E4_ARM_ZERO_TRACE, "zero_trace"), (E4_ARM_CONTROL, "control")):
            s = point_stats[GridPoint(n_a, n_b, 1, arm)]
            gaps[name] = s["f_k"]["mean"] - s["f_haar"]["mean"]
        ratio = gaps["control"] / gaps["zero_trace"] if gaps["zero_trace"] > 0 else None
        out.append({
            "n_a": n_a, "n_b": n_b,
            "gap_zero_trace": gaps["zero_trace"],
            "gap_control": gaps["control"],
            "separation_ratio": ratio,
            "separation_ok": bool(ratio is None or ratio >= cfg.thresholds.separation_factor),
        })
    return {"structured_separation": out}


def _points_e5(cfg):
    return [GridPoint(a, b, 1, 0.0) for a, b in cfg.dims_list()]


def _groups_e5(cfg):
    return cfg.dims_list()


def _setup_e5(cfg, group, rng):
    n_a, n_b = group
    dims = DimensionSpec(n_a, n_b)
    d = sample_spectrum(SpectrumSpec.zero_trace_paired(dims.dim), rng)
    exact = expected_projected_f1(d, computational_zero(dims.dim), dims)
    return {"spectrum": d, "exact_f1": exact}


def _run_e5(cfg, group, ctx, rng):
    n_a, n_b = group
    dims = DimensionSpec(n_a, n_b)
    d = ctx["spectrum"]
    u = sample_haar_unitary(dims.dim, rng)
    psi = PureState((u * d) @ (u.conj().T @ computational_zero(dims.dim).amplitudes))
    f = frame_potential(build_projected_ensemble(psi, dims), 1)
    fh = haar_frame_potential(dims.dim_a, 1)
    return [_TrialOutput(GridPoint(n_a, n_b, 1, 0.0),
                         {"f_k": f, "f_haar": fh, "delta_sq": f / fh - 1.0}, {})]


def _mc_agreement(mean: float, exact: float, se: float) -> dict:
    """z-score bookkeeping; a zero-variance estimator must match exactly."""
    if se > 0:
        z = (mean - exact) / se
        return {"z_score": float(z), "agrees_3s": bool(abs(z) <= 3.0)}
    return {"z_score": None, "agrees_3s": bool(abs(mean - exact) <= 1e-12)}


def _derived_e5(cfg, point_stats, aux_points, aux_groups):
    out = []
    for gi, (n_a, n_b) in enumerate(_groups_e5(cfg)):
        s = point_stats[GridPoint(n_a, n_b, 1, 0.0)]
        exact = aux_groups[gi]["exact_f1"]
        mean, se = s["f_k"]["mean"], s["f_k"]["stderr"]
        out.append({
            "n_a": n_a, "n_b": n_b,
            "exact_f1": exact,
            "mc_mean": mean, "mc_stderr": se,
            **_mc_agreement(mean, exact, se),
        })
    return {"exact_vs_mc": out}


def _points_e6(cfg):
    return [GridPoint(a, b, k, 0.0) for a, b in cfg.dims_list() for k in cfg.k]


def _groups_e6(cfg):
    return cfg.dims_list()


def _run_e6(cfg, group, ctx, rng):
    n_a, n_b = group
    dims = DimensionSpec(n_a, n_b)
    psi = sample_haar_state(dims.dim, rng)
    q, gram = bath_outcome_gram(psi, dims)
    ens = build_projected_ensemble(psi, dims)
    abs_sq = np.abs(gram) ** 2
    off = ~np.eye(dims.dim_b, dtype=bool)
    outs = []
    for k in cfg.k:
        f = frame_potential(ens, k)
        fh = haar_frame_potential(dims.dim_a, k)
        outs.append(_TrialOutput(
            GridPoint(n_a, n_b, k, 0.0),
            {"f_k": f, "f_haar": fh, "delta_sq": f / fh - 1.0},
            {"q_moment": float(np.mean(q ** k)),
             "overlap_moment": float(np.mean(abs_sq[off] ** k)) if dims.dim_b > 1 else 0.0},
        ))
    return outs


def _derived_e6(cfg, point_stats, aux_points, aux_groups):
    out = []
    for point in sorted(point_stats, key=lambda p: (p.n_a, p.n_b, p.k)):
        n_a, n_b, k = point.n_a, point.n_b, point.k
        rows = {}
        for name, exact in (
            ("q_moment", float(haar_q_moment(n_a, n_b, k))),
            ("overlap_moment", float(haar_overlap_moment(n_a, n_b, k))),
        ):
            vals = np.array(aux_points[point][name])
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            rows[name] = {"exact": exact, "mc_mean": mean, "mc_stderr": se,
                          **_mc_agreement(mean, exact, se)}
        out.append({"n_a": n_a, "n_b": n_b, "k": k, **rows})
    return {"closed_forms": out}


def _points_e7(cfg):
    return [GridPoint(a, b, k, t) for a, b in cfg.dims_list() for k in cfg.k for t in cfg.t_values()]


def _groups_e7(cfg):
    return [(a, b, k) for a, b in cfg.dims_list() for k in cfg.k]


def _run_e7(cfg, group, ctx, rng):
    n_a, n_b, k = group
    dim = 2 ** (n_a + n_b)
    g = sample_gue(dim, rng)
    outs = []
    for i, t in enumerate(cfg.t_values()):
        moments = normalized_trace_moments(g, t, k)
        a1 = complex(moments.alpha[0])
        aux = {}
        if i == 0:
            for m in (1, 2, 3):
                aux[f"catalan_{m}"] = float(np.mean(g.spectrum ** (2 * m)))
            aux["spectral_radius"] = float(np.max(np.abs(g.spectrum)))
        outs.append(_TrialOutput(
            GridPoint(n_a, n_b, k, t),
            {"alpha1_re": a1.real, "alpha1_im": a1.imag, "one_norm": moments.one_norm},
            aux,
        ))
    return outs


def _derived_e7(cfg, point_stats, aux_points, aux_groups):
    catalan_targets = {1: 1.0, 2: 2.0, 3: 5.0}
    by_dims = {}
    for (n_a, n_b, k) in sorted({(p.n_a, p.n_b, p.k) for p in point_stats}):
        dim = 2 ** (n_a + n_b)
        rows = sorted((p.t, p, s) for p, s in point_stats.items()
                      if (p.n_a, p.n_b, p.k) == (n_a, n_b, k))
        k0_min = 0.0
        envelope = []
        for t, point, s in rows:
            mean_abs = abs(complex(s["alpha1_re"]["mean"], s["alpha1_im"]["mean"]))
            n = s["alpha1_re"]["n"]
            se = math.sqrt((s["alpha1_re"]["stderr"] ** 2 + s["alpha1_im"]["stderr"] ** 2))
            std = se * math.sqrt(n)
            bound = gue_moment_envelope(t, dim, cfg.k0) + 3.0 * se if t > 0 else None
            if t > 0:
                needed = (mean_abs - abs(bessel_j1(2.0 * t) / t) - 3.0 * se) * dim / t
                k0_min = max(k0_min, needed)
            envelope.append({
                "t": t,
                "mean_abs_alpha1": mean_abs,
                "stderr": se,
                "envelope_bound": bound,
                "within_envelope": bool(bound is None or mean_abs <= bound),
                "std_alpha1": std,
                "concentration_bound": 2.0 * t / math.sqrt(dim),
                "concentration_ok": bool(std <= 2.0 * t / math.sqrt(dim)) if t > 0 else None,
                "mean_one_norm": s["one_norm"]["mean"],
            })
        decay_ts = [t for t, _, _ in rows if any(abs(t - x) < 1e-9 for x in (1.0, 2.0, 4.0, 8.0))]
        decay_means = [e["mean_one_norm"] for e in envelope if e["t"] in decay_ts]
        first_point = rows[0][1]
        catalan = {}
        for m in (1, 2, 3):
            vals = np.array(aux_points[first_point][f"catalan_{m}"])
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            catalan[f"m{m}"] = {"target": catalan_targets[m], "mc_mean": mean,
                                "mc_stderr": se,
                                **_mc_agreement(mean, catalan_targets[m], se)}
        radius = float(np.max(aux_points[first_point]["spectral_radius"]))
        by_dims[f"n_a={n_a},n_b={n_b}"] = {
            "dim": dim,
            "k": k,
            "envelope": envelope,
            "envelope_all_within": bool(all(e["within_envelope"] for e in envelope)),
            "spectral_radius_max": radius,
            "spectral_edge_ok": bool(radius <= 2.2),
            "smallest_consistent_k0": float(max(k0_min, 0.0)),
            "one_norm_decay_ts": decay_ts,
            "one_norm_decay_means": decay_means,
            "one_norm_decreasing": bool(all(decay_means[i + 1] < decay_means[i]
                                            for i in range(len(decay_means) - 1))),
            "catalan": catalan,
        }
    return {"gue_diagnostics": by_dims}


@dataclass(frozen=True)
class _ExperimentDef:
    points: Callable
    groups: Callable
    run: Callable
    derived: Callable
    setup: Callable | None = None


_DEFS = {
    "E1_bessel_roots": _ExperimentDef(_points_e1, _groups_e1, _run_e1, _derived_e1),
    "E2_time_scan": _ExperimentDef(_points_e2, _groups_e2, _run_e2, _derived_e2),
    "E3_2k_to_k": _ExperimentDef(_points_e3, _groups_e3, _run_e3, _derived_e3),
    "E4_structured": _ExperimentDef(_points_e4, _groups_e4, _run_e4, _derived_e4, _setup_e4),
    "E5_weingarten_k1": _ExperimentDef(_points_e5, _groups_e5, _run_e5, _derived_e5, _setup_e5),
    "E6_haar_closed_forms": _ExperimentDef(_points_e6, _groups_e6, _run_e6, _derived_e6),
    "E7_gue_diagnostics": _ExperimentDef(_points_e7, _groups_e7, _run_e7, _derived_e7),
}


def build_points(cfg: ExperimentConfig) -> list[GridPoint]:
    """The expanded grid in canonical record order."""
    return _DEFS[cfg.experiment].points(cfg)


def _stream(cfg: ExperimentConfig, group_idx: int, stream_idx: int) -> np.random.Generator:
    key = (_EXPERIMENT_IDS[cfg.experiment], group_idx, stream_idx)
    return np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=key))


# ----------------------------------------------------------------------------
# Runner
# ----------------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, threads: int = 0, quiet: bool = False):
    """Execute all trials of the configured experiment and persist outputs.

    Returns (records, summary). Files written into cfg.output_dir:
    results.csv, summary.json, manifest.json.
    """
    validate_config(cfg)
    exp = _DEFS[cfg.experiment]
    groups = exp.groups(cfg)
    points = exp.points(cfg)
    point_index = {p: i for i, p in enumerate(points)}
    workers = threads if threads > 0 else (os.cpu_count() or 1)

    contexts = {}
    for gi, group in enumerate(groups):
        contexts[gi] = exp.setup(cfg, group, _stream(cfg, gi, _SETUP_STREAM)) if exp.setup else {}

    t_start = time.perf_counter()
    results: dict[tuple[int, int], list[_TrialOutput]] = {}
    timings: dict[tuple[int, int], float] = {}
    failures: list[dict] = []

    def task(gi: int, trial: int):
        rng = _stream(cfg, gi, trial)
        t0 = time.perf_counter()
        outs = exp.run(cfg, groups[gi], contexts[gi], rng)
        return outs, (time.perf_counter() - t0) * 1e3

    jobs = [(gi, trial) for gi in range(len(groups)) for trial in range(cfg.trials)]
    if workers <= 1:
        for gi, trial in jobs:
            try:
                results[(gi, trial)], timings[(gi, trial)] = task(gi, trial)
            except Exception as exc:  # noqa: BLE001 - recorded, never dropped
                failures.append({"group": list(groups[gi]), "trial": trial, "error": repr(exc)})
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(task, gi, trial): (gi, trial) for gi, trial in jobs}
            for fut, (gi, trial) in futs.items():
                try:
                    results[(gi, trial)], timings[(gi, trial)] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    failures.append({"group": list(groups[gi]), "trial": trial, "error": repr(exc)})

    if failures and len(failures) > 0.01 * len(jobs):
        raise ExperimentError(
            f"{len(failures)} of {len(jobs)} trials failed (> 1%); first: {failures[0]}"
        )

    records: list[ResultRecord] = []
    aux_points: dict[GridPoint, dict[str, list]] = {}
    for gi in range(len(groups)):
        for trial in range(cfg.trials):
            outs = results.get((gi, trial))
            if outs is None:
                continue
            wall = timings[(gi, trial)]
            for out in outs:
                rec = ResultRecord(experiment=cfg.experiment, trial=trial, seed=cfg.seed,
                                   n_a=out.point.n_a, n_b=out.point.n_b,
                                   k=out.point.k, t=out.point.t, **out.metrics)
                if cfg.record_wall_ms:
                    rec.wall_ms = wall
                records.append(rec)
                for name, val in out.aux.items():
                    aux_points.setdefault(out.point, {}).setdefault(name, []).append(val)
    records.sort(key=lambda r: (point_index[r.point()], r.trial))

    summary = summarize(records, cfg=cfg, aux_points=aux_points, aux_groups=contexts)
    summary["failures"] = failures
    summary["timing"] = {
        "total_s": time.perf_counter() - t_start,
        "mean_trial_ms": float(np.mean(list(timings.values()))) if timings else None,
        "workers": workers,
    }

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(records, out_dir / "results.csv")
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n",
        encoding="utf-8",
    )
    manifest = {
        "config_hash": hashlib.sha256(config_canonical_text(cfg).encode()).hexdigest(),
        "seed": cfg.seed,
        "version": __version__,
        "experiment": cfg.experiment,
        "n_records": len(records),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if not quiet:
        print(f"{cfg.experiment}: {len(records)} records, {len(failures)} failures "
              f"-> {out_dir}/results.csv")
    return records, summary


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj)}")


def summarize(records: list[ResultRecord], cfg: ExperimentConfig | None = None,
              aux_points=None, aux_groups=None) -> dict:
    """Per-grid-point statistics plus experiment-specific derived sections."""
    if not records:
        raise ValueError("no records to summarize")
    experiments = {r.experiment for r in records}
    if len(experiments) > 1:
        raise ValueError(f"records mix experiments: {sorted(experiments)}")
    experiment = records[0].experiment

    grouped: dict[GridPoint, list[ResultRecord]] = {}
    for r in records:
        grouped.setdefault(r.point(), []).append(r)
    point_stats: dict[GridPoint, dict] = {}
    for point, rows in grouped.items():
        stats = {}
        for name in _METRIC_FIELDS:
            vals = np.array([getattr(r, name) for r in rows if getattr(r, name) is not None])
            if vals.size == 0:
                continue
            stats[name] = {
                "mean": float(vals.mean()),
                "stderr": float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0,
                "min": float(vals.min()),
                "max": float(vals.max()),
                "n": int(vals.size),
            }
        point_stats[point] = stats

    summary = {
        "experiment": experiment,
        "points": [
            {"n_a": p.n_a, "n_b": p.n_b, "k": p.k, "t": p.t, "metrics": point_stats[p]}
            for p in sorted(point_stats)
        ],
    }
    if cfg is not None:
        summary["derived"] = _DEFS[experiment].derived(cfg, point_stats, aux_points or {},
                                                       aux_groups or {})
        summary["thresholds"] = {f.name: getattr(cfg.thresholds, f.name) for f in fields(Thresholds)}
        summary["k0"] = cfg.k0
    return summary


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_results_csv(records: list[ResultRecord], path: str | Path) -> None:
    """Write records under the exact pinned header, UTF-8 with LF endings."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            row = [r.experiment, str(r.trial), str(r.seed), str(r.n_a), str(r.n_b),
                   str(r.k), _format_value(r.t)]
            row += [_format_value(getattr(r, name)) for name in _METRIC_FIELDS]
            fh.write(",".join(row) + "\n")
