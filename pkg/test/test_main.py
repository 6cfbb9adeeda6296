import json

from fdisac.main import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


class TestMain:
    """Tests for the command line entry point."""

    def test_list(self, capsys):
        """Test that the builtin scenarios are listed."""
        assert main(["list-scenarios"]) == EXIT_OK
        assert "fig_acf" in capsys.readouterr().out

    def test_validate(self, capsys):
        """Test validation of a builtin scenario."""
        assert main(["validate", "fig_sic_factor"]) == EXIT_OK
        assert "fig_sic_factor: valid, 3 series, 71 points" in capsys.readouterr().out

    def test_invalid_file(self, tmp_path):
        """Test the exit code of an invalid scenario."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"name": "bad", "sweep": {"variable": "altitude"}}))
        assert main(["validate", str(path)]) == EXIT_CONFIG
        assert main(["run", str(path)]) == EXIT_CONFIG

    def test_run(self, tmp_path, capsys):
        """Test a run writing CSV and a sparkline."""
        out = tmp_path / "rows.csv"
        args = ["-q", "run", "fig_sinr_vs_pc", "--out", str(out), "--curve", "-"]
        assert main(args) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("scenario,sweep_value,metric")
        assert len(lines) == 1 + 2 * 51 * 2
        assert "sinr1_db:" in capsys.readouterr().err

    def test_stdout(self, capsys):
        """Test CSV on standard output."""
        assert main(["-q", "run", "fig_sinr_vs_pc"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("scenario,")

    def test_invalid_override(self):
        """Test that nonpositive trial counts are configuration errors."""
        assert main(["run", "fig_sinr_vs_pc", "--trials", "0"]) == EXIT_CONFIG

    def test_runtime_error(self, tmp_path):
        """Test the exit code of a failed write."""
        out = tmp_path / "missing" / "rows.csv"
        assert main(["-q", "run", "fig_sinr_vs_pc", "--out", str(out)]) == EXIT_RUNTIME
