"""Integration tests for the sweep commands."""

import csv
import re
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

from typer.testing import CliRunner

from orthoris.cli import app
from orthoris.runner import THREADS_ENV_VAR


def strip_ansi_codes(text: str) -> str:
    """Remove ANSI escape sequences from text."""
    ansi_escape = re.compile(r'\x1b\[[0-9;]*m')
    return ansi_escape.sub('', text)


GAIN_ARGS = ["gain-sweep", "--M", "3", "--K", "2", "--kinds", "bdris,fris", "--eta-db", "-10:10:0", "--trials", "3"]


class TestSweepCommands(unittest.TestCase):
    """Run tiny sweeps through the CLI."""

    def setUp(self):
        self.runner = CliRunner()
        self.env = {"NO_COLOR": "1"}

    def _sweep(self, tmpdir: Path, name: str, args: list[str], env=None) -> list[list[str]]:
        out = tmpdir / name
        result = self.runner.invoke(app, args + ["--out", str(out)], env=env or self.env)
        self.assertEqual(result.exit_code, 0, strip_ansi_codes(result.output))
        with open(out, newline="") as f:
            return list(csv.reader(f))

    def test_gain_sweep_csv(self):
        """Test the gain sweep writes a header and one row per point and kind."""
        with TemporaryDirectory() as tmpdir:
            rows = self._sweep(Path(tmpdir), "gain.csv", GAIN_ARGS + ["--seed", "7", "--workers", "1"])
        self.assertEqual(rows[0][:3], ["sweep_value", "blockage_db", "kind"])
        self.assertEqual(len(rows), 1 + 2 * 2)
        self.assertEqual({r[2] for r in rows[1:]}, {"bdris", "fris"})

    def test_same_seed_same_csv_across_workers(self):
        """Test the CSV is identical for one and several workers."""
        with TemporaryDirectory() as tmpdir:
            tmp = Path(tmpdir)
            serial = self._sweep(tmp, "a.csv", GAIN_ARGS + ["--seed", "7", "--workers", "1"])
            parallel = self._sweep(tmp, "b.csv", GAIN_ARGS + ["--seed", "7", "--workers", "3"])
            capped = self._sweep(
                tmp, "c.csv", GAIN_ARGS + ["--seed", "7", "--workers", "3"],
                env={"NO_COLOR": "1", THREADS_ENV_VAR: "2"},
            )
        self.assertEqual(serial, parallel)
        self.assertEqual(serial, capped)

    def test_different_seed_differs(self):
        """Test another seed changes the gains."""
        with TemporaryDirectory() as tmpdir:
            tmp = Path(tmpdir)
            first = self._sweep(tmp, "a.csv", GAIN_ARGS + ["--seed", "1", "--workers", "1"])
            second = self._sweep(tmp, "b.csv", GAIN_ARGS + ["--seed", "2", "--workers", "1"])
        self.assertNotEqual(first[1:], second[1:])

    def test_config_file_with_override(self):
        """Test a YAML config drives the sweep and flags override it."""
        with TemporaryDirectory() as tmpdir:
            tmp = Path(tmpdir)
            config = tmp / "csi.yaml"
            config.write_text(
                "experiment: csi\nM: 3\nK: 2\nkinds: [fris]\nsweep: \"20:10:40\"\ntrials: 5\nestimation_mode: reduced\n"
            )
            rows = self._sweep(tmp, "csi.csv", ["csi-sweep", "--config", str(config), "--trials", "2", "--workers", "1"])
        self.assertEqual(len(rows), 1 + 3)
        self.assertTrue(all(r[-2] == "2" for r in rows[1:]))

    def test_rician_sweep(self):
        """Test the Rician sweep emits method rows per blockage level."""
        with TemporaryDirectory() as tmpdir:
            rows = self._sweep(
                Path(tmpdir),
                "rician.csv",
                ["rician-sweep", "--kinds", "fris", "--snr-db", "10", "--blockage-db", "0,inf",
                 "--placements", "1", "--fading", "1", "--workers", "1"],
            )
        self.assertEqual(len(rows), 1 + 2 * 3)
        self.assertEqual({r[1] for r in rows[1:]}, {"0", "inf"})

    def test_invalid_thread_cap(self):
        """Test a malformed ORTHORIS_THREADS fails with exit code 1."""
        result = self.runner.invoke(app, GAIN_ARGS, env={"NO_COLOR": "1", THREADS_ENV_VAR: "many"})
        self.assertEqual(result.exit_code, 1)
        self.assertIn(THREADS_ENV_VAR, strip_ansi_codes(result.output))

    def test_invalid_range(self):
        """Test a malformed range is a usage error."""
        result = self.runner.invoke(app, ["gain-sweep", "--eta-db", "1:2"], env=self.env)
        self.assertEqual(result.exit_code, 2)

    def test_config_mismatch(self):
        """Test a config for another experiment is rejected."""
        with TemporaryDirectory() as tmpdir:
            config = Path(tmpdir) / "gain.yaml"
            config.write_text("experiment: gain\n")
            result = self.runner.invoke(app, ["csi-sweep", "--config", str(config)], env=self.env)
        self.assertEqual(result.exit_code, 1)

    def test_selftest(self):
        """Test the built-in checks pass."""
        result = self.runner.invoke(app, ["selftest"], env=self.env)
        self.assertEqual(result.exit_code, 0, strip_ansi_codes(result.output))
        self.assertIn("checks passed", strip_ansi_codes(result.output))


if __name__ == "__main__":
    unittest.main()
