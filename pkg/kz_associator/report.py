#!/usr/bin/env python3
"""
Run reports: one self-describing JSON document per run, plus a plain-text
summary rendered from a Jinja2 template.

The report body (everything except timings) depends only on the config
and the code, so two identical runs produce identical bodies.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

from jinja2 import Environment, FileSystemLoader


logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).parent / 'templates'

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_NOT_CONVERGED = 2
EXIT_PRECONDITION = 3

STATUS_BY_EXIT = {
    EXIT_PASS: 'pass',
    EXIT_FAIL: 'fail',
    EXIT_NOT_CONVERGED: 'not-converged',
    EXIT_PRECONDITION: 'precondition-failed',
}


def _jsonable(value):
    """Turn complex numbers and tuples into plain JSON values."""
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class RunReport:
    """Outcome of one command."""
    command: str
    config: Dict
    results: Dict = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    passed: bool = True
    exit_code: int = EXIT_PASS

    @property
    def status(self) -> str:
        return STATUS_BY_EXIT.get(self.exit_code, 'error')

    def body(self) -> Dict:
        """Everything but the timings."""
        return _jsonable({
            'command': self.command,
            'config': self.config,
            'results': self.results,
            'passed': self.passed,
            'status': self.status,
            'exit_code': self.exit_code,
        })

    def to_dict(self) -> Dict:
        data = self.body()
        data['timings'] = dict(self.timings)
        return data

    def to_json(self, include_timings: bool = True) -> str:
        data = self.to_dict() if include_timings else self.body()
        return json.dumps(data, sort_keys=True, indent=2)

    def write(self, path: Union[str, Path]) -> Path:
        """Write the JSON report, creating parent directories."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + '\n', encoding='utf-8')
        logger.info(f"Wrote report to {path}")
        return path


def summary_environment(template_dir: Optional[Path] = None) -> Environment:
    return Environment(
        loader=FileSystemLoader(str(template_dir or TEMPLATE_DIR)),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )


def render_summary(report: RunReport, template_dir: Optional[Path] = None) -> str:
    """Plain-text summary for the terminal."""
    template = summary_environment(template_dir).get_template('summary.txt.j2')
    return template.render(report=report, body=report.body(), timings=report.timings)
