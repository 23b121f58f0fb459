"""
Tests for the kz-associator command line.

Each test drives main() through sys.argv, the way the console script
does, with the basis cache in a temporary directory.
"""

import json
import math
from unittest.mock import patch

import pytest

from kz_associator.algebra.braid_relations import build_presentation
from kz_associator.associator.identities import LIMIT_GRID, VerificationReport
from kz_associator.cli import build_parser, main, sample_points
from kz_associator.geometry.connections import pentagon_connection


def run_cli(capsys, tmp_path, *argv):
    """Run the CLI with JSON output and return (exit code, parsed report or None)."""
    args = ['kz-associator', *argv, '--cache-dir', str(tmp_path / 'cache'), '--format', 'json']
    with patch('sys.argv', args):
        code = main()
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


class TestParser:
    """Test suite for argument parsing."""

    def test_command_required(self):
        """Test a missing subcommand exits with a usage error."""
        with patch('sys.argv', ['kz-associator']):
            with pytest.raises(SystemExit):
                main()

    def test_verify_defaults(self):
        """Test verify defaults to finite mode."""
        args = build_parser().parse_args(['verify', 'hexagon'])
        assert args.mode == 'finite'
        assert args.order == 4
        assert args.extrapolation is None

    def test_unknown_identity(self):
        """Test only hexagon and pentagon are accepted."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(['verify', 'square'])


class TestAssociatorCommand:
    """Test suite for the associator subcommand."""

    def test_order_zero(self, capsys, tmp_path):
        """Test the order-0 associator is reported as 1."""
        code, report = run_cli(capsys, tmp_path, 'associator', '--order', '0',
                               '--grid', '0.125,0.0625', '--steps', '64')
        assert code == 0
        assert report['status'] == 'pass'
        assert report['results']['extrapolation'] == 'last'
        assert report['results']['series']['order'] == 0

    def test_convergence_table(self, capsys, tmp_path):
        """Test one convergence row per grid step."""
        code, report = run_cli(capsys, tmp_path, 'associator', '--order', '2',
                               '--grid', '2^-3..2^-6', '--steps', '128')
        assert code == 0
        assert len(report['results']['convergence']) == 3

    def test_epsilon_changes_the_sample(self, capsys, tmp_path):
        """Test --epsilon is the second regulator of the reported finite sample."""
        argv = ('associator', '--order', '2', '--grid', '0.125,0.0625', '--delta', '0.125')
        _, narrow = run_cli(capsys, tmp_path, *argv, '--epsilon', '0.25')
        _, wide = run_cli(capsys, tmp_path, *argv, '--epsilon', '0.0625')
        assert narrow['results']['sample'] != wide['results']['sample']
        assert narrow['results']['sample']['epsilon'] == 0.25

        terms = {(t['lambda'], tuple(t['word'])): complex(t['re'], t['im'])
                 for t in narrow['results']['sample']['series']['terms']}
        assert terms[(1, ('A',))].real == pytest.approx(math.log(0.75), abs=1e-6)
        assert terms[(1, ('B',))].real == pytest.approx(-math.log(0.875), abs=1e-6)

    def test_no_sample_without_epsilon(self, capsys, tmp_path):
        """Test the finite sample is only reported when --epsilon is given."""
        _, report = run_cli(capsys, tmp_path, 'associator', '--order', '1',
                            '--grid', '0.125,0.0625', '--steps', '32')
        assert 'sample' not in report['results']

    @pytest.mark.slow
    def test_commuting_quotient(self, capsys, tmp_path):
        """Test Phi reduces to 1 modulo the commutators."""
        code, report = run_cli(capsys, tmp_path, 'associator', '--commuting', '--order', '3',
                               '--grid', '2^-10..2^-16', '--extrapolation', 'richardson')
        assert code == 0
        assert max(report['results']['residual_norm']) <= 1e-6


class TestVerifyCommand:
    """Test suite for the verify subcommand."""

    def test_pentagon_finite(self, capsys, tmp_path):
        """Test the finite pentagon passes in T_4."""
        code, report = run_cli(capsys, tmp_path, 'verify', 'pentagon', '--order', '3')
        assert code == 0
        assert report['command'] == 'verify pentagon'
        assert report['results']['max_residual'] <= 1e-6
        assert 'seconds' not in report['results']['details']

    def test_hexagon_finite(self, capsys, tmp_path):
        """Test the finite hexagon loop passes in T_3."""
        code, report = run_cli(capsys, tmp_path, 'verify', 'hexagon', '--order', '3')
        assert code == 0
        assert len(report['results']['residual_norm']) == 4

    def test_hexagon_free_images_fail_precondition(self, capsys, tmp_path):
        """Test free images violate centrality and exit with 3."""
        code, report = run_cli(capsys, tmp_path, 'verify', 'hexagon', '--images', 'free', '--order', '2')
        assert code == 3
        assert report['status'] == 'precondition-failed'
        assert report['results']['relation'].startswith('[A+B+C')

    def test_limit_mode_defaults(self, capsys, tmp_path, mocker):
        """Test limit mode uses the fine grid and Richardson unless told otherwise."""
        fake = VerificationReport('hexagon', 'limit', 2, True, 1e-3, [0.0, 1e-5, 2e-4],
                                  grid=LIMIT_GRID, converged=True,
                                  details={'convergence': [], 'seconds': 0.5})
        verify = mocker.patch('kz_associator.cli.verify_hexagon', return_value=fake)
        code, report = run_cli(capsys, tmp_path, 'verify', 'hexagon', '--mode', 'limit', '--order', '2')
        assert code == 0
        options = verify.call_args.kwargs
        assert options['grid'] == LIMIT_GRID
        assert options['extrapolation'] == 'richardson'
        assert report['results']['convergence'] == []

    def test_tight_tolerance_fails(self, capsys, tmp_path):
        """Test an unreachable tolerance exits with 1."""
        code, report = run_cli(capsys, tmp_path, 'verify', 'pentagon', '--order', '3',
                               '--steps', '16', '--tolerance', '1e-15')
        assert code == 1
        assert report['passed'] is False


class TestTransportCommand:
    """Test suite for the transport subcommand."""

    def test_hexagon_loop(self, capsys, tmp_path):
        """Test the loop transport is 1 modulo T_3."""
        spec = json.dumps({'family': 'hexagon', 'delta': 0.125, 'leg': 'loop'})
        code, report = run_cli(capsys, tmp_path, 'transport', '--path-spec', spec, '--order', '3')
        assert code == 0
        results = report['results']
        assert results['connection'] == 'punctured-plane'
        assert results['group_element'] is True
        assert max(results['loop_residual']) <= 1e-6

    def test_interval_commuting_closed_form(self, capsys, tmp_path):
        """Test commuting images match exp(lambda (A ln(x1/x0) + B ln((1-x1)/(1-x0))))."""
        spec = json.dumps({'family': 'interval', 'delta': 0.25})
        code, report = run_cli(capsys, tmp_path, 'transport', '--path-spec', spec,
                               '--commuting', '--order', '4')
        assert code == 0
        assert report['results']['connection'] == 'interval'
        assert max(report['results']['closed_form_residual']) <= 1e-8

    def test_epsilon_ends_the_interval(self, capsys, tmp_path):
        """Test --epsilon fills in the interval end when the spec leaves it out."""
        spec = json.dumps({'family': 'interval', 'delta': 0.25})
        code, report = run_cli(capsys, tmp_path, 'transport', '--path-spec', spec,
                               '--epsilon', '0.125', '--order', '2')
        assert code == 0
        assert report['results']['final_point'][0]['re'] == pytest.approx(0.875)
        assert report['results']['path_spec']['epsilon'] == 0.125

    def test_spec_from_file(self, capsys, tmp_path):
        """Test @file path specs are read from disk."""
        spec_file = tmp_path / 'leg.json'
        spec_file.write_text(json.dumps({'family': 'pentagon', 'delta': 0.125, 'leg': 'I'}))
        code, report = run_cli(capsys, tmp_path, 'transport', '--path-spec', f'@{spec_file}', '--order', '2')
        assert code == 0
        assert report['results']['connection'] == 'pentagon'

    def test_invalid_spec(self, capsys, tmp_path):
        """Test a malformed spec exits with 3."""
        code, report = run_cli(capsys, tmp_path, 'transport', '--path-spec', 'not json')
        assert code == 3
        assert report is None


class TestFlatnessCommand:
    """Test suite for the flatness subcommand."""

    def test_pentagon_is_flat(self, capsys, tmp_path):
        """Test the pentagon connection is exactly flat modulo T_4."""
        code, report = run_cli(capsys, tmp_path, 'flatness', '--samples', '3')
        assert code == 0
        assert report['results']['max_residual'] <= 1e-12
        assert report['config']['scalar_kind'] == 'rational'
        assert len(report['results']['samples']) == 3

    def test_kz3_free_images_not_flat(self, capsys, tmp_path):
        """Test KZ_3 with free generators has curvature."""
        code, report = run_cli(capsys, tmp_path, 'flatness', '--connection', 'kz3',
                               '--images', 'free', '--samples', '2')
        assert code == 1
        assert report['results']['max_residual'] > 0

    def test_one_dimensional_is_vacuous(self, capsys, tmp_path):
        """Test a one-dimensional connection has no curvature pairs."""
        code, report = run_cli(capsys, tmp_path, 'flatness', '--connection', 'interval', '--samples', '2')
        assert code == 0
        assert report['results']['vacuous'] is True
        assert report['results']['samples'] == []

    def test_sample_points_are_admissible_and_seeded(self):
        """Test sampled points avoid the singular lines and repeat with the seed."""
        gamma = pentagon_connection(build_presentation(4).generators())
        first = sample_points(gamma, 5, seed=3)
        assert first == sample_points(gamma, 5, seed=3)
        assert all(gamma.is_admissible(p) for p in first)
        assert all(0 < p[0] < p[1] < 1 for p in first)


class TestClassifyCommand:
    """Test suite for the classify subcommand."""

    def test_exp_log(self, capsys, tmp_path):
        """Test exp(lambda ln(delta) A) classifies L."""
        code, report = run_cli(capsys, tmp_path, 'classify', '--family', 'exp-log', '--order', '3')
        assert code == 0
        assert report['results']['classification'] == 'L'
        assert report['results']['family'] == 'exp-log'

    def test_short_grid(self, capsys, tmp_path):
        """Test fewer than five grid points is an input error."""
        code, _ = run_cli(capsys, tmp_path, 'classify', '--family', 'exp-log', '--grid', '0.125,0.0625')
        assert code == 3


class TestOutput:
    """Test suite for report output."""

    def test_bad_grid_exits_with_3(self, capsys, tmp_path):
        """Test a grid value above 1/4 is a configuration error."""
        code, report = run_cli(capsys, tmp_path, 'associator', '--grid', '0.5')
        assert code == 3
        assert report is None

    def test_output_file(self, capsys, tmp_path):
        """Test --output writes the JSON report."""
        target = tmp_path / 'reports' / 'assoc.json'
        code, _ = run_cli(capsys, tmp_path, 'associator', '--order', '1', '--grid', '0.125,0.0625',
                          '--steps', '32', '--output', str(target))
        assert code == 0
        data = json.loads(target.read_text())
        assert data['command'] == 'associator'
        assert 'total' in data['timings']

    def test_text_summary(self, capsys, tmp_path):
        """Test the default console output is the text summary."""
        with patch('sys.argv', ['kz-associator', 'classify', '--family', 'exp-log', '--order', '2',
                                '--cache-dir', str(tmp_path)]):
            code = main()
        out = capsys.readouterr().out
        assert code == 0
        assert 'CLASSIFY RESULTS' in out
        assert 'Classification: L' in out


class TestReproducibility:
    """Test suite for replayable runs."""

    def _body(self, capsys, tmp_path, *argv):
        code, report = run_cli(capsys, tmp_path, *argv)
        report.pop('timings')
        return code, report

    def test_replay_is_identical(self, capsys, tmp_path):
        """Test the same config twice gives identical report bodies."""
        argv = ('associator', '--order', '2', '--grid', '2^-3..2^-5', '--steps', '64')
        assert self._body(capsys, tmp_path, *argv) == self._body(capsys, tmp_path, *argv)

    @pytest.mark.integration
    def test_warm_cache_matches_cold(self, capsys, tmp_path):
        """Test a second run reading the ideal bases from disk reports the same."""
        argv = ('verify', 'pentagon', '--order', '2', '--steps', '64')
        cold = self._body(capsys, tmp_path, *argv)
        assert any((tmp_path / 'cache').iterdir())
        warm = self._body(capsys, tmp_path, *argv)
        assert cold == warm
