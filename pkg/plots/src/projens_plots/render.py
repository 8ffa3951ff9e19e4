"""The four figure kinds, each a pure function of the parsed CSV rows.

Images are deterministic for identical inputs: fixed figure geometry, a fixed
SVG hash salt and no date metadata.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy.special import j1, jn_zeros  # noqa: E402

from .io import group_mean, read_results  # noqa: E402

KINDS = ("bessel_curve", "decay_loglog", "time_scan", "distance_vs_dim")

plt.rcParams["svg.hashsalt"] = "projens-plots"


def trace_moment_reference(t: np.ndarray) -> np.ndarray:
    """The limiting first-trace-moment curve J1(2t)/t (1 at t = 0)."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    nz = t != 0
    out[nz] = j1(2 * t[nz]) / t[nz]
    return out


def reference_root_times(t_max: float) -> np.ndarray:
    """Vanishing times of the reference curve up to t_max."""
    roots = []
    m = 1
    while True:
        batch = jn_zeros(1, m + 8)[m - 1:] / 2.0
        for r in batch:
            if r > t_max:
                return np.array(roots)
            roots.append(float(r))
        m += len(batch)


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=100)
    return fig, ax


def _save(fig, out_path: Path) -> None:
    fig.savefig(out_path, metadata={"Date": None} if out_path.suffix == ".svg" else None)
    plt.close(fig)


def render_bessel_curve(rows: list[dict], out_path: Path) -> None:
    """Measured mean first trace moment against time, with the limiting curve
    and its vanishing times marked in red."""
    re_mean = group_mean(rows, ("t",), "alpha1_re")
    im_mean = group_mean(rows, ("t",), "alpha1_im")
    if not re_mean:
        raise ValueError("no alpha1 columns in this file; bessel_curve needs a time-scan result")
    ts = np.array(sorted(t for (t,) in re_mean))
    measured = np.array([abs(complex(re_mean[(t,)], im_mean[(t,)])) for t in ts])

    fig, ax = _new_axes()
    dense = np.linspace(min(ts.min(), 0.05), ts.max(), 800)
    ax.plot(dense, np.abs(trace_moment_reference(dense)), "-", color="#1f77b4",
            lw=1.2, label="|J1(2t)/t|")
    ax.plot(ts, measured, "o", ms=3.5, color="#444444", label="measured |mean trace moment|")
    roots = reference_root_times(float(ts.max()))
    ax.plot(roots, np.zeros_like(roots), "o", ms=7, mfc="none", mec="red", mew=1.6,
            label="vanishing times", zorder=5)
    ax.set_xlabel("t")
    ax.set_ylabel("first trace moment")
    ax.set_ylim(bottom=-0.02)
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("First trace moment of the evolution unitary")
    _save(fig, out_path)


def fit_decay_slopes(rows: list[dict]) -> list[dict]:
    """Log-log slope of the mean frame-potential gap against bath dimension,
    one fit per (n_a, k, t) group; matches the experiment summary's fit."""
    fk = group_mean(rows, ("n_a", "k", "t", "n_b"), "f_k")
    fh = group_mean(rows, ("n_a", "k", "t", "n_b"), "f_haar")
    groups = sorted({key[:3] for key in fk})
    fits = []
    for n_a, k, t in groups:
        pts = sorted((key[3], fk[key] - fh[key]) for key in fk if key[:3] == (n_a, k, t))
        n_bs = [p[0] for p in pts]
        gaps = [p[1] for p in pts]
        if len(pts) < 2 or any(g <= 0 for g in gaps):
            continue
        slope, intercept = np.polyfit(np.log([2.0 ** b for b in n_bs]), np.log(gaps), 1)
        fits.append({"n_a": n_a, "k": k, "t": t, "n_b": n_bs, "gap": gaps,
                     "slope": float(slope), "intercept": float(intercept)})
    if not fits:
        raise ValueError("no groups with at least two positive-gap bath sizes to fit")
    return fits


def render_decay_loglog(rows: list[dict], out_path: Path) -> list[dict]:
    """Frame-potential gap versus bath dimension on log-log axes with the
    fitted line; prints one slope per group and returns the fits."""
    fits = fit_decay_slopes(rows)
    fig, ax = _new_axes()
    for fit in fits:
        nb_dim = np.array([2.0 ** b for b in fit["n_b"]])
        label = f"n_a={fit['n_a']}, k={fit['k']}: slope {fit['slope']:.3f}"
        line, = ax.loglog(nb_dim, fit["gap"], "o", ms=4, label=label)
        ax.loglog(nb_dim, np.exp(fit["intercept"]) * nb_dim ** fit["slope"], "--",
                  lw=1, color=line.get_color())
    ax.set_xlabel("bath dimension")
    ax.set_ylabel("mean frame potential gap")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("Design-quality decay with bath size")
    _save(fig, out_path)
    for fit in fits:
        print(f"slope n_a={fit['n_a']} k={fit['k']} t={fit['t']:.6g}: {fit['slope']:.12g}")
    return fits


def render_time_scan(rows: list[dict], out_path: Path) -> None:
    """Mean frame-potential gap along the time scan, reference roots marked."""
    fk = group_mean(rows, ("n_a", "k", "t"), "f_k")
    fh = group_mean(rows, ("n_a", "k", "t"), "f_haar")
    groups = sorted({key[:2] for key in fk})
    fig, ax = _new_axes()
    t_max = 0.0
    for n_a, k in groups:
        pts = sorted((key[2], fk[key] - fh[key]) for key in fk if key[:2] == (n_a, k))
        ts = [p[0] for p in pts]
        t_max = max(t_max, max(ts))
        ax.semilogy(ts, [max(p[1], 1e-12) for p in pts], "-", lw=1.2,
                    label=f"n_a={n_a}, k={k}")
    for r in reference_root_times(t_max):
        ax.axvline(r, color="red", lw=0.8, alpha=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("mean frame potential gap")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("Projected-ensemble quality along the time scan")
    _save(fig, out_path)


def render_distance_vs_dim(rows: list[dict], out_path: Path) -> None:
    """Mean trace-norm distance of the projected moment to the Haar moment
    against subsystem dimension."""
    l1 = group_mean(rows, ("k", "n_a"), "l1_exact")
    if not l1:
        raise ValueError("no l1_exact column values; distance_vs_dim needs a moment-distance result")
    fig, ax = _new_axes()
    for k in sorted({key[0] for key in l1}):
        pts = sorted((key[1], val) for key, val in l1.items() if key[0] == k)
        dims = np.array([2.0 ** p[0] for p in pts])
        ax.semilogy(dims, [p[1] for p in pts], "o-", ms=4, label=f"measured, k={k}")
        ax.semilogy(dims, k / np.sqrt(dims), "--", lw=1,
                    label=f"k/sqrt(dim), k={k}")
    ax.set_xlabel("subsystem dimension")
    ax.set_ylabel("mean L1 distance to the Haar moment")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("Moment distance versus remaining dimension")
    _save(fig, out_path)


def render(kind: str, input_path: str | Path, output_path: str | Path):
    """Render one figure kind from a results.csv file."""
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {', '.join(KINDS)}")
    out = Path(output_path)
    if out.suffix not in (".svg", ".png"):
        raise ValueError(f"output must be .svg or .png, got {out.suffix!r}")
    rows = read_results(input_path)
    if kind == "bessel_curve":
        return render_bessel_curve(rows, out)
    if kind == "decay_loglog":
        return render_decay_loglog(rows, out)
    if kind == "time_scan":
        return render_time_scan(rows, out)
    return render_distance_vs_dim(rows, out)
