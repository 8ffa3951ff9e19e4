import pytest

from projens_plots.io import EXPECTED_HEADER, ResultsFormatError, read_results


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestHeaderContract:
    def test_reads_valid_file(self, tmp_path):
        p = tmp_path / "results.csv"
        write_csv(p, [EXPECTED_HEADER,
                      "E1_bessel_roots,0,7,1,4,1,1.5,0.6,0.5,0.2,,0.1,-0.05,,"])
        rows = read_results(p)
        assert len(rows) == 1
        assert rows[0]["n_b"] == 4
        assert rows[0]["f_k"] == pytest.approx(0.6)
        assert rows[0]["l1_exact"] is None
        assert rows[0]["wall_ms"] is None

    def test_names_first_bad_column(self, tmp_path):
        p = tmp_path / "results.csv"
        bad = EXPECTED_HEADER.replace("delta_sq", "delta2")
        write_csv(p, [bad, "E1,0,0,1,1,1,0,,,,,,,,"])
        with pytest.raises(ResultsFormatError, match="column 10.*delta_sq.*delta2"):
            read_results(p)

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "results.csv"
        write_csv(p, [EXPECTED_HEADER.rsplit(",", 1)[0]])
        with pytest.raises(ResultsFormatError, match="wall_ms"):
            read_results(p)

    def test_no_rows(self, tmp_path):
        p = tmp_path / "results.csv"
        write_csv(p, [EXPECTED_HEADER])
        with pytest.raises(ResultsFormatError, match="no rows"):
            read_results(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ResultsFormatError, match="not found"):
            read_results(tmp_path / "nope.csv")
