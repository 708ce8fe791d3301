"""Unit tests for sweep configuration loading."""

import math
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

from orthoris.config import ExperimentKind, SweepSpec, build_spec, load_config, parse_config_data
from orthoris.errors import ConfigError
from orthoris.estimation import EstimationMode
from orthoris.rs_models import RsKind
from orthoris.selection import SelectionMode
from orthoris.types import SweepRange


class TestSweepSpec(unittest.TestCase):
    """Tests for SweepSpec defaults and validation."""

    def test_defaults(self):
        """Test per-experiment default sweeps."""
        self.assertEqual(SweepSpec(ExperimentKind.GAIN).sweep, SweepRange(-20.0, 5.0, 10.0))
        self.assertEqual(SweepSpec(ExperimentKind.CSI).sweep, SweepRange(0.0, 10.0, 40.0))
        spec = SweepSpec(ExperimentKind.RICIAN)
        self.assertEqual(spec.blockage_db, [0.0, 20.0, 30.0, math.inf])

    def test_elements(self):
        """Test surface sizes fall back to the minimum and RIS uses the ARIS size."""
        spec = SweepSpec(ExperimentKind.GAIN, M=4, K=2, N={RsKind.FRIS: 6})
        self.assertEqual(spec.elements(RsKind.FRIS), 6)
        self.assertEqual(spec.elements(RsKind.BDRIS), 5)
        self.assertEqual(spec.elements(RsKind.RIS), 8)

    def test_invalid(self):
        """Test validation errors."""
        for kwargs in ({"K": 5}, {"trials": 0}, {"workers": 0}, {"kinds": []}, {"fading": 0}):
            with self.assertRaises(ConfigError, msg=str(kwargs)):
                SweepSpec(ExperimentKind.GAIN, **kwargs)


class TestParseConfig(unittest.TestCase):
    """Tests for parse_config_data()."""

    def test_fields(self):
        """Test every field type converts."""
        fields = parse_config_data(
            {
                "experiment": "csi",
                "M": 4,
                "kinds": ["fris", "bd-ris"],
                "N": {"fris": 5},
                "sweep": "0:5:10",
                "selection": "Simplified",
                "estimation_mode": "reduced",
                "blockage_db": [0, "inf"],
            }
        )
        self.assertIs(fields["experiment"], ExperimentKind.CSI)
        self.assertEqual(fields["kinds"], [RsKind.FRIS, RsKind.BDRIS])
        self.assertEqual(fields["N"], {RsKind.FRIS: 5})
        self.assertEqual(fields["sweep"], SweepRange(0.0, 5.0, 10.0))
        self.assertIs(fields["selection"], SelectionMode.SIMPLIFIED)
        self.assertIs(fields["estimation_mode"], EstimationMode.REDUCED)
        self.assertEqual(fields["blockage_db"], [0.0, math.inf])

    def test_sweep_mapping(self):
        """Test the start/step/stop mapping form."""
        fields = parse_config_data({"sweep": {"start": -10, "step": 10, "stop": 30}})
        self.assertEqual(fields["sweep"].values(), [-10.0, 0.0, 10.0, 20.0, 30.0])

    def test_unknown_key(self):
        """Test unknown keys are reported with the valid ones."""
        with self.assertRaises(ConfigError) as cm:
            parse_config_data({"trails": 3})
        self.assertIn("trials", str(cm.exception))

    def test_wrong_types(self):
        """Test type errors."""
        for data in ({"M": "four"}, {"M": True}, {"snr_db": "loud"}, {"selection": "greedy"}, {"kinds": 3}):
            with self.assertRaises(ConfigError, msg=str(data)):
                parse_config_data(data)

    def test_empty_and_non_mapping(self):
        """Test an empty document is fine and a list is not."""
        self.assertEqual(parse_config_data(None), {})
        with self.assertRaises(ConfigError):
            parse_config_data([1, 2])


class TestBuildSpec(unittest.TestCase):
    """Tests for build_spec() layering."""

    def test_file_then_overrides(self):
        """Test CLI overrides win over the file and None overrides are ignored."""
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "sweep.yaml"
            path.write_text("experiment: gain\ntrials: 7\nseed: 3\nN: 9\nkinds: [aris, fris]\n")
            spec = build_spec("gain", path, {"trials": 2, "seed": None})
        self.assertEqual(spec.trials, 2)
        self.assertEqual(spec.seed, 3)
        self.assertEqual(spec.N, {RsKind.ARIS: 9, RsKind.FRIS: 9})

    def test_experiment_mismatch(self):
        """Test a file for another experiment is rejected."""
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "sweep.yaml"
            path.write_text("experiment: csi\n")
            with self.assertRaises(ConfigError):
                build_spec("gain", path)

    def test_rician_defaults(self):
        """Test the Rician sweep defaults to the room's M and three UEs."""
        spec = build_spec(ExperimentKind.RICIAN)
        self.assertEqual((spec.M, spec.K), (4, 3))

    def test_missing_file(self):
        """Test a missing file raises."""
        with self.assertRaises(ConfigError):
            load_config(Path("/nonexistent/sweep.yaml"))

    def test_invalid_yaml(self):
        """Test broken YAML raises ConfigError."""
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "sweep.yaml"
            path.write_text("trials: [1, 2\n")
            with self.assertRaises(ConfigError):
                load_config(path)


if __name__ == "__main__":
    unittest.main()
