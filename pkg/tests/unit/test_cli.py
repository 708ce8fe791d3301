"""Tests for CLI helpers and the single-instance commands."""

import unittest
from unittest.mock import patch

import typer
from typer.testing import CliRunner

from orthoris.cli import (
    _convert,
    _supports_unicode,
    app,
    get_action_failure_string,
    get_action_success_string,
)
from orthoris.rs_models import RsKind


class TestSupportsUnicode(unittest.TestCase):
    """Tests for _supports_unicode()."""

    @patch('orthoris.cli.os.environ', {})
    @patch('orthoris.cli.os.name', 'posix')
    @patch('orthoris.cli.sys.stderr')
    def test_supports_unicode_with_utf8_encoding(self, mock_stderr):
        """Test that UTF-8 encoding returns True."""
        mock_stderr.encoding = 'utf-8'
        self.assertTrue(_supports_unicode())

    @patch('orthoris.cli.os.environ', {})
    @patch('orthoris.cli.os.name', 'nt')
    @patch('orthoris.cli.sys.stderr')
    def test_supports_unicode_on_classic_windows_console(self, mock_stderr):
        """Test that classic Windows console (conhost) returns False."""
        mock_stderr.encoding = 'utf-8'
        self.assertFalse(_supports_unicode())

    @patch('orthoris.cli.os.environ', {})
    @patch('orthoris.cli.os.name', 'posix')
    @patch('orthoris.cli.sys.stderr')
    def test_supports_unicode_with_ascii(self, mock_stderr):
        """Test that an encoding without the symbols returns False."""
        mock_stderr.encoding = 'ascii'
        self.assertFalse(_supports_unicode())

    @patch('orthoris.cli.os.environ', {})
    @patch('orthoris.cli.os.name', 'posix')
    @patch('orthoris.cli.sys.stderr')
    def test_supports_unicode_without_encoding(self, mock_stderr):
        """Test that a stream without an encoding returns False."""
        mock_stderr.encoding = None
        self.assertFalse(_supports_unicode())


class TestActionStrings(unittest.TestCase):
    """Tests for the status markers."""

    @patch('orthoris.cli._supports_unicode', return_value=True)
    def test_unicode_markers(self, _):
        """Test tick and cross with Unicode."""
        self.assertEqual(get_action_success_string(), "✓")
        self.assertEqual(get_action_failure_string(), "✗")

    @patch('orthoris.cli._supports_unicode', return_value=False)
    def test_ascii_markers(self, _):
        """Test ASCII fallbacks."""
        self.assertEqual(get_action_success_string(), "[ OK ]")
        self.assertEqual(get_action_failure_string(), "[ FAIL ]")


class TestConvert(unittest.TestCase):
    """Tests for _convert()."""

    def test_none_passes_through(self):
        """Test unset options stay None."""
        self.assertIsNone(_convert("kinds", None))

    def test_kinds(self):
        """Test kind lists convert."""
        self.assertEqual(_convert("kinds", "aris,fris"), [RsKind.ARIS, RsKind.FRIS])

    def test_bad_value(self):
        """Test conversion errors surface as BadParameter."""
        with self.assertRaises(typer.BadParameter):
            _convert("floats", "a,b")


class TestInstanceCommands(unittest.TestCase):
    """Tests for solve, estimate and version."""

    def setUp(self):
        self.runner = CliRunner()
        self.env = {"NO_COLOR": "1"}

    def test_version(self):
        """Test --version prints the package version."""
        result = self.runner.invoke(app, ["--version"], env=self.env)
        self.assertEqual(result.exit_code, 0)
        self.assertIn("orthoris", result.output)

    def test_solve_reports_feasible(self):
        """Test solve at the minimum size is rank feasible."""
        result = self.runner.invoke(app, ["solve", "--kind", "bdris", "--impedance"], env=self.env)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("rank feasible", result.output)
        self.assertIn("True", result.output)

    def test_solve_rejects_ris(self):
        """Test RIS has no solver and fails cleanly."""
        result = self.runner.invoke(app, ["solve", "--kind", "ris"], env=self.env)
        self.assertEqual(result.exit_code, 1)

    def test_estimate_budget(self):
        """Test estimate prints the counted and closed-form budgets."""
        result = self.runner.invoke(app, ["estimate", "--kind", "bdris", "--M", "4", "--K", "2"], env=self.env)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("15", result.output)
        self.assertIn("closed-form BD-RIS budget", result.output)

    def test_estimate_reduced(self):
        """Test reduced mode spends MK steps."""
        result = self.runner.invoke(app, ["estimate", "--kind", "fris", "--mode", "reduced"], env=self.env)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("reduced", result.output)


if __name__ == "__main__":
    unittest.main()
