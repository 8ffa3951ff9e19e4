import json
import shutil
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import j1, jn_zeros

from projens_plots.cli import main
from projens_plots.io import EXPECTED_HEADER
from projens_plots.render import (
    fit_decay_slopes,
    reference_root_times,
    render,
    trace_moment_reference,
)


def make_rows(grid, trials=3):
    """Rows of (n_a, n_b, k, t, metrics) tuples expanded over trials."""
    lines = [EXPECTED_HEADER]
    for n_a, n_b, k, t, metrics in grid:
        for trial in range(trials):
            cells = {"experiment": "E1_bessel_roots", "trial": trial, "seed": 1,
                     "n_a": n_a, "n_b": n_b, "k": k, "t": t, **metrics}
            lines.append(",".join(
                "" if cells.get(name) is None else str(cells.get(name, ""))
                for name in EXPECTED_HEADER.split(",")))
    return lines


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def decay_csv(tmp_path, slope=-1.0):
    grid = []
    for n_b in (4, 6, 8):
        gap = 0.8 * (2.0 ** n_b) ** slope
        grid.append((1, n_b, 1, 1.9, {"f_k": 0.5 + gap, "f_haar": 0.5, "delta_sq": 2 * gap}))
    return write_csv(tmp_path / "decay.csv", make_rows(grid))


def scan_csv(tmp_path):
    grid = []
    for t in np.arange(0.2, 6.01, 0.2):
        a1 = j1(2 * t) / t if t > 0 else 1.0
        grid.append((1, 8, 1, round(float(t), 10),
                     {"f_k": 0.5 + 0.003 + a1 ** 4, "f_haar": 0.5,
                      "alpha1_re": a1, "alpha1_im": 0.0}))
    return write_csv(tmp_path / "scan.csv", make_rows(grid))


class TestReference:
    def test_curve_matches_bessel(self):
        ts = np.linspace(0.01, 8, 200)
        assert np.max(np.abs(trace_moment_reference(ts) - j1(2 * ts) / ts)) < 1e-12
        assert trace_moment_reference(np.array([0.0]))[0] == 1.0

    def test_root_times(self):
        roots = reference_root_times(6.0)
        expected = jn_zeros(1, 3) / 2
        assert len(roots) == 3
        assert np.max(np.abs(roots - expected)) < 1e-9


class TestDecayLoglog:
    def test_exact_power_law_slope(self, tmp_path, capsys):
        path = decay_csv(tmp_path, slope=-1.0)
        fits = render(kind="decay_loglog", input_path=path, output_path=tmp_path / "out.svg")
        assert (tmp_path / "out.svg").exists()
        assert fits[0]["slope"] == pytest.approx(-1.0, abs=1e-12)
        printed = capsys.readouterr().out.strip().splitlines()[-1]
        assert printed.startswith("slope n_a=1 k=1")
        assert float(printed.split(":")[-1]) == pytest.approx(-1.0, abs=1e-9)

    def test_matches_independent_fit(self, tmp_path):
        path = decay_csv(tmp_path, slope=-0.83)
        fits = fit_decay_slopes(__import__("projens_plots.io", fromlist=["read_results"]).read_results(path))
        n_bs = np.array([4, 6, 8], dtype=float)
        gaps = 0.8 * (2.0 ** n_bs) ** -0.83
        expected = np.polyfit(np.log(2.0 ** n_bs), np.log(gaps), 1)[0]
        assert fits[0]["slope"] == pytest.approx(expected, abs=1e-6)

    def test_rejects_gapless_data(self, tmp_path):
        grid = [(1, b, 1, 1.9, {"f_k": 0.5, "f_haar": 0.5}) for b in (4, 6)]
        path = write_csv(tmp_path / "flat.csv", make_rows(grid))
        with pytest.raises(ValueError, match="positive-gap"):
            render(kind="decay_loglog", input_path=path, output_path=tmp_path / "o.svg")


class TestBesselCurve:
    def test_svg_with_red_root_markers(self, tmp_path):
        path = scan_csv(tmp_path)
        out = tmp_path / "curve.svg"
        render(kind="bessel_curve", input_path=path, output_path=out)
        svg = out.read_text()
        assert "stroke: #ff0000" in svg or "stroke:#ff0000" in svg
        # three vanishing times inside the scan range, drawn as distinct markers
        assert len(reference_root_times(6.0)) == 3

    def test_deterministic_output(self, tmp_path):
        path = scan_csv(tmp_path)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render(kind="bessel_curve", input_path=path, output_path=a)
        render(kind="bessel_curve", input_path=path, output_path=b)
        assert a.read_bytes() == b.read_bytes()

    def test_png_output(self, tmp_path):
        path = scan_csv(tmp_path)
        out = tmp_path / "curve.png"
        render(kind="bessel_curve", input_path=path, output_path=out)
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_needs_alpha_columns(self, tmp_path):
        grid = [(1, 4, 1, 0.0, {"f_k": 0.6, "f_haar": 0.5})]
        path = write_csv(tmp_path / "noalpha.csv", make_rows(grid))
        with pytest.raises(ValueError, match="alpha1"):
            render(kind="bessel_curve", input_path=path, output_path=tmp_path / "o.svg")


class TestOtherKinds:
    def test_time_scan(self, tmp_path):
        path = scan_csv(tmp_path)
        out = tmp_path / "scan.svg"
        render(kind="time_scan", input_path=path, output_path=out)
        assert out.stat().st_size > 0

    def test_distance_vs_dim(self, tmp_path):
        grid = [(a, 3 * a + 2, 2, 0.0, {"l1_exact": 1.4 / np.sqrt(2.0 ** a)})
                for a in (1, 2, 3)]
        path = write_csv(tmp_path / "dist.csv", make_rows(grid))
        out = tmp_path / "dist.svg"
        render(kind="distance_vs_dim", input_path=path, output_path=out)
        assert out.stat().st_size > 0

    def test_distance_requires_l1(self, tmp_path):
        grid = [(1, 4, 1, 0.0, {"f_k": 0.6, "f_haar": 0.5})]
        path = write_csv(tmp_path / "nol1.csv", make_rows(grid))
        with pytest.raises(ValueError, match="l1_exact"):
            render(kind="distance_vs_dim", input_path=path, output_path=tmp_path / "o.svg")


class TestCli:
    def test_render_ok(self, tmp_path, capsys):
        path = decay_csv(tmp_path)
        code = main(["render", "--kind", "decay_loglog",
                     "--in", str(path), "--out", str(tmp_path / "fig.svg")])
        assert code == 0
        assert (tmp_path / "fig.svg").exists()

    def test_header_mismatch_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text(EXPECTED_HEADER.replace("f_haar", "fhaar") + "\nE1,0,0,1,1,1,0,,,,,,,,\n")
        code = main(["render", "--kind", "time_scan", "--in", str(bad),
                     "--out", str(tmp_path / "fig.svg")])
        assert code == 1
        assert "f_haar" in capsys.readouterr().err

    def test_empty_csv_exit(self, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text(EXPECTED_HEADER + "\n")
        code = main(["render", "--kind", "time_scan", "--in", str(empty),
                     "--out", str(tmp_path / "fig.svg")])
        assert code == 1
        assert "no rows" in capsys.readouterr().err

    def test_bad_kind_exit(self, tmp_path, capsys):
        code = main(["render", "--kind", "sparkline", "--in", "x.csv", "--out", "y.svg"])
        assert code == 1

    def test_bad_extension_exit(self, tmp_path, capsys):
        path = decay_csv(tmp_path)
        code = main(["render", "--kind", "decay_loglog", "--in", str(path),
                     "--out", str(tmp_path / "fig.pdf")])
        assert code == 1
        assert ".svg or .png" in capsys.readouterr().err


@pytest.mark.skipif(shutil.which("projens") is None,
                    reason="primary CLI not installed; plots stays functional on archived CSVs")
class TestAgainstLiveRun:
    def test_slope_matches_run_summary(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("""
experiment = E1_bessel_roots
n_a = 1
n_b = 3,4,5
k = 1
t = bessel_root(1)
trials = 8
seed = 99
output_dir = {out}
""".format(out=tmp_path / "run"))
        subprocess.run(["projens", "run", "--config", str(cfg), "--quiet"], check=True)
        proc = subprocess.run(
            [sys.executable, "-m", "projens_plots.cli", "render", "--kind", "decay_loglog",
             "--in", str(tmp_path / "run" / "results.csv"),
             "--out", str(tmp_path / "fig.svg")],
            capture_output=True, text=True, check=True)
        printed = float(proc.stdout.strip().splitlines()[-1].split(":")[-1])
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        fitted = summary["derived"]["slope_fits"][0]["slope"]
        assert printed == pytest.approx(fitted, abs=1e-6)
