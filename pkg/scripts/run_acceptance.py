#!/usr/bin/env python3
"""
Acceptance run for kz-associator.

This script:
1. Runs each acceptance scenario through the kz-associator command line
2. Checks exit codes and the numbers in each JSON report
3. Generates a detailed text report

Scenarios marked slow (limit-mode identities, the zeta(2) cross-check)
are skipped with --quick.
"""

import argparse
import json
import math
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple


ZETA2 = math.pi ** 2 / 6


def _max(values: List[float]) -> float:
    return max(values, default=0.0)


def _coefficient(series: Dict, degree: int, word: List[str]) -> complex:
    for term in series['terms']:
        if term['lambda'] == degree and term['word'] == word:
            return complex(term['re'], term['im'])
    return 0j


@dataclass
class Scenario:
    """One command line with its expected exit code and result check."""
    name: str
    argv: List[str]
    expected_exit: int = 0
    check: Optional[Callable[[Dict], Tuple[bool, str]]] = None
    slow: bool = False
    timeout: int = 900


def check_residual(key: str, tolerance: float) -> Callable[[Dict], Tuple[bool, str]]:
    def check(report: Dict) -> Tuple[bool, str]:
        value = _max(report['results'][key]) if isinstance(report['results'][key], list) \
            else report['results'][key]
        return value <= tolerance, f"{key} = {value:.3e} (tolerance {tolerance:.0e})"
    return check


def check_lambda_one(report: Dict) -> Tuple[bool, str]:
    series = report['results']['series']
    worst = max((abs(_coefficient(series, 1, [w])) for w in ('A', 'B')), default=0.0)
    return worst <= 1e-3, f"|lambda^1| = {worst:.3e}"


def check_zeta2(report: Dict) -> Tuple[bool, str]:
    series = report['results']['series']
    ab = _coefficient(series, 2, ['A', 'B']).real
    ba = _coefficient(series, 2, ['B', 'A']).real
    ok = abs(abs(ab) - ZETA2) <= 5e-3 and abs(ab + ba) <= 5e-3
    return ok, f"c(AB) = {ab:.6f}, c(BA) = {ba:.6f}, zeta(2) = {ZETA2:.6f}"


def check_classes(expected: str) -> Callable[[Dict], Tuple[bool, str]]:
    def check(report: Dict) -> Tuple[bool, str]:
        found = report['results']['classification']
        return found == expected, f"classification {found} (expected {expected})"
    return check


SCENARIOS = [
    Scenario('Associator at order 0',
             ['associator', '--order', '0'],
             check=lambda r: (r['results']['series']['order'] == 0, 'constant series')),
    Scenario('Associator lambda^1 vanishes',
             ['associator', '--order', '4', '--grid', '2^-4..2^-10'],
             check=check_lambda_one),
    Scenario('Associator in the commuting quotient',
             ['associator', '--commuting', '--order', '3', '--grid', '2^-10..2^-16',
              '--extrapolation', 'richardson'],
             check=check_residual('residual_norm', 1e-6), slow=True),
    Scenario('zeta(2) cross-check',
             ['associator', '--order', '2', '--grid', '2^-6..2^-14', '--extrapolation', 'richardson'],
             check=check_zeta2, slow=True),
    Scenario('Interval transport, commuting closed form',
             ['transport', '--commuting', '--order', '6',
              '--path-spec', json.dumps({'family': 'interval', 'delta': 0.25})],
             check=check_residual('closed_form_residual', 1e-8)),
    Scenario('Hexagon leg IV is a group element',
             ['transport', '--order', '4',
              '--path-spec', json.dumps({'family': 'hexagon', 'delta': 0.125, 'leg': 'IV'})],
             check=lambda r: (r['results']['group_element'], 'lambda^0 = 1')),
    Scenario('Hexagon loop transport',
             ['transport', '--order', '4',
              '--path-spec', json.dumps({'family': 'hexagon', 'delta': 0.125, 'leg': 'loop'})],
             check=check_residual('loop_residual', 1e-6)),
    Scenario('Pentagon flatness at 10 points',
             ['flatness', '--connection', 'pentagon', '--samples', '10'],
             check=check_residual('max_residual', 1e-10)),
    Scenario('Free KZ_3 is not flat',
             ['flatness', '--connection', 'kz3', '--images', 'free', '--samples', '3'],
             expected_exit=1),
    Scenario('Hexagon, finite delta',
             ['verify', 'hexagon', '--mode', 'finite', '--delta', '0.125', '--order', '4'],
             check=check_residual('max_residual', 1e-6)),
    Scenario('Pentagon, finite delta',
             ['verify', 'pentagon', '--mode', 'finite', '--delta', '0.125', '--order', '4'],
             check=check_residual('max_residual', 1e-6)),
    Scenario('Hexagon precondition with free images',
             ['verify', 'hexagon', '--images', 'free', '--order', '2'],
             expected_exit=3),
    Scenario('Hexagon, limit mode',
             ['verify', 'hexagon', '--mode', 'limit', '--order', '3'],
             check=check_residual('max_residual', 1e-3), slow=True),
    Scenario('Pentagon, limit mode',
             ['verify', 'pentagon', '--mode', 'limit', '--order', '4'],
             check=check_residual('max_residual', 1e-3), slow=True, timeout=1800),
    Scenario('exp(lambda ln(delta) A) is logarithmic',
             ['classify', '--family', 'exp-log', '--order', '4'],
             check=check_classes('L')),
    Scenario('Hexagon remainder is harmless',
             ['classify', '--family', 'hexagon-remainder', '--order', '3', '--grid', '2^-4..2^-9'],
             check=check_classes('H'), slow=True),
]


@dataclass
class AcceptanceRunner:
    """Run the acceptance scenarios and collect a report."""
    cache_dir: Path
    work_dir: Path
    quick: bool = False
    report: List[str] = field(default_factory=list)
    issues: List[str] = field(default_factory=list)
    outcomes: List[Dict] = field(default_factory=list)

    def log(self, message: str, level: str = "INFO"):
        """Log a message to console and report."""
        timestamp = datetime.now().strftime("%H:%M:%S")
        formatted = f"[{timestamp}] {level}: {message}"
        print(formatted)
        self.report.append(formatted)

    def run_scenario(self, index: int, scenario: Scenario) -> Dict:
        """Run one scenario and check its exit code and report."""
        output = self.work_dir / f"scenario-{index:02d}.json"
        command = [sys.executable, '-m', 'kz_associator.cli', *scenario.argv,
                   '--cache-dir', str(self.cache_dir), '--output', str(output), '--format', 'json']
        self.log(f"\nRunning: {scenario.name}")
        self.log(f"Command: kz-associator {' '.join(scenario.argv)}")

        outcome = {'name': scenario.name, 'success': False, 'detail': '', 'seconds': None}
        try:
            process = subprocess.run(command, capture_output=True, text=True, timeout=scenario.timeout)
        except subprocess.TimeoutExpired:
            self.log(f"✗ {scenario.name} timed out", "ERROR")
            self.issues.append(f"{scenario.name} timed out")
            self.outcomes.append(outcome)
            return outcome

        if process.returncode != scenario.expected_exit:
            outcome['detail'] = f"exit {process.returncode}, expected {scenario.expected_exit}"
            self.log(f"✗ {scenario.name}: {outcome['detail']}", "ERROR")
            if process.stderr:
                self.log(f"Error: {process.stderr.strip()[-300:]}", "ERROR")
            self.issues.append(f"{scenario.name}: {outcome['detail']}")
            self.outcomes.append(outcome)
            return outcome

        ok, detail = True, f"exit {process.returncode}"
        if scenario.check is not None and output.exists():
            data = json.loads(output.read_text(encoding='utf-8'))
            ok, detail = scenario.check(data)
            outcome['seconds'] = data.get('timings', {}).get('total')
        outcome['success'] = ok
        outcome['detail'] = detail
        if ok:
            self.log(f"✓ {scenario.name}: {detail}")
        else:
            self.log(f"✗ {scenario.name}: {detail}", "ERROR")
            self.issues.append(f"{scenario.name}: {detail}")
        self.outcomes.append(outcome)
        return outcome

    def generate_report(self) -> bool:
        """Generate the final summary."""
        self.log("\n" + "=" * 80)
        self.log("FINAL REPORT: kz-associator acceptance")
        self.log("=" * 80)
        for i, outcome in enumerate(self.outcomes, 1):
            status = "✓" if outcome['success'] else "✗"
            seconds = f" ({outcome['seconds']:.1f}s)" if outcome['seconds'] is not None else ""
            self.log(f"  {i}. {status} {outcome['name']}{seconds}")
        self.log(f"\nIssues found: {len(self.issues)}")
        if not self.issues:
            self.log("\nSUCCESS: all scenarios passed")
            return True
        for issue in self.issues:
            self.log(f"  - {issue}")
        return False

    def save_report(self, filename: str = "acceptance_report.txt"):
        """Save report to file."""
        report_path = Path(filename)
        report_path.write_text("\n".join(self.report) + "\n", encoding='utf-8')
        self.log(f"\nReport saved to: {report_path.absolute()}")

    def run(self, report_file: str) -> bool:
        self.log("Starting kz-associator acceptance run")
        self.log(f"Cache directory: {self.cache_dir}")
        for index, scenario in enumerate(SCENARIOS, 1):
            if scenario.slow and self.quick:
                self.log(f"\nSkipping slow scenario: {scenario.name}")
                continue
            self.run_scenario(index, scenario)
        success = self.generate_report()
        self.save_report(report_file)
        return success


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(description='Run the kz-associator acceptance scenarios')
    parser.add_argument('--quick', action='store_true', help='Skip slow scenarios')
    parser.add_argument('--cache-dir', help='Ideal basis cache (default: a temporary directory)')
    parser.add_argument('--report-file', default='acceptance_report.txt', help='Where to save the report')
    args = parser.parse_args()

    with tempfile.TemporaryDirectory(prefix='kz-acceptance-') as tmp:
        runner = AcceptanceRunner(
            cache_dir=Path(args.cache_dir) if args.cache_dir else Path(tmp) / 'cache',
            work_dir=Path(tmp),
            quick=args.quick,
        )
        success = runner.run(args.report_file)
    return 0 if success else 1


if __name__ == "__main__":
    sys.exit(main())
