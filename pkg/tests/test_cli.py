"""
Tests for the command line
"""

import json

import pytest

from bwalk.cli import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, main, parse_assignments
from bwalk.core.exceptions import InvalidConfigError

STRIP_ARGS = ["--param", "M=10", "--param", "bo_per_walker=4", "--param", "walkers=5",
              "--seed", "1"]


@pytest.fixture
def cube_file(tmp_path):
    """Body descriptor file for the unit square"""
    path = tmp_path / "cube.json"
    path.write_text(json.dumps({"type": "unit_cube", "n": 2}))
    return path


class TestParseAssignments:
    """Test KEY=VALUE parsing"""

    def test_json_and_string_values(self):
        """Test values parse as JSON when possible"""
        parsed = parse_assignments(["a=1", "b=[1, 2]", "c=text", 'd={"at_least": 2}'])
        assert parsed == {"a": 1, "b": [1, 2], "c": "text", "d": {"at_least": 2}}

    def test_malformed(self):
        """Test items without '=' are rejected"""
        with pytest.raises(InvalidConfigError):
            parse_assignments(["novalue"])


class TestListCommands:
    """Test the listing sub-commands"""

    def test_list_bodies(self):
        """Test body types are listed"""
        assert main(["list-bodies"]) == EXIT_OK

    def test_list_experiments(self):
        """Test scenarios are listed"""
        assert main(["list-experiments"]) == EXIT_OK


class TestSampleCommand:
    """Test the sample sub-command"""

    def test_writes_report(self, cube_file, tmp_path):
        """Test a sampling run with a JSON report"""
        out = tmp_path / "report.json"
        code = main(["sample", "--body", str(cube_file), "--samples", "10", "--seed", "3",
                     "--out", str(out)])
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["n_samples"] == 10
        assert len(report["samples"]) == 10

    def test_length_redraw_flag(self, cube_file, tmp_path):
        """Test the restart policy reaches the recorded sampler config"""
        out = tmp_path / "report.json"
        code = main(["sample", "--body", str(cube_file), "--samples", "5",
                     "--length-redraw-after", "0", "--out", str(out)])
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["config"]["length_redraw_after"] == 0
        assert report["length_redraws"] == 0

    def test_csv_with_preconditioning(self, cube_file, tmp_path):
        """Test a preconditioned HR run written as CSV"""
        out = tmp_path / "samples.csv"
        code = main(["sample", "--body", str(cube_file), "--sampler", "hr", "--bo-budget", "40",
                     "--precondition", "dikin", "--format", "csv", "--out", str(out)])
        assert code == EXIT_OK
        assert len(out.read_text().splitlines()) == 21

    def test_missing_body(self, tmp_path):
        """Test an unreadable body file is a usage error"""
        assert main(["sample", "--body", str(tmp_path / "none.json"),
                     "--samples", "5"]) == EXIT_USAGE

    def test_unbounded_without_tau(self, tmp_path):
        """Test unbounded bodies need tau"""
        path = tmp_path / "orthant.json"
        path.write_text(json.dumps({"type": "orthant", "n": 2}))
        assert main(["sample", "--body", str(path), "--samples", "5"]) == EXIT_USAGE

    def test_budget_required(self, cube_file):
        """Test argparse errors map to the usage exit code"""
        assert main(["sample", "--body", str(cube_file)]) == EXIT_USAGE


class TestExperimentCommand:
    """Test the experiment sub-command"""

    def test_passing_checks(self):
        """Test an overridden expectation that holds"""
        code = main(["experiment", "strip", *STRIP_ARGS, "--expect", 'ratio={"at_least": 0}'])
        assert code == EXIT_OK

    def test_failing_checks(self):
        """Test a failed check exits with 1"""
        code = main(["experiment", "strip", *STRIP_ARGS, "--expect", 'ratio={"at_least": 1e9}'])
        assert code == EXIT_CHECK_FAILED

    def test_unknown_parameter(self):
        """Test scenario parameter errors are usage errors"""
        assert main(["experiment", "strip", "--param", "width=3"]) == EXIT_USAGE

    def test_bad_expectation(self):
        """Test malformed expectations are usage errors"""
        assert main(["experiment", "strip", *STRIP_ARGS, "--expect", "ratio=5"]) == EXIT_USAGE

    def test_unknown_scenario(self):
        """Test unknown scenario names"""
        assert main(["experiment", "no_such_scenario"]) == EXIT_USAGE

    def test_no_command(self):
        """Test a missing sub-command"""
        assert main([]) == EXIT_USAGE
