"""Acceptance criteria 1-11, one pass/fail line each.

The whole library is run twice through the CLI (`run all`); criteria 1-10 are
read from the first run's summaries and criterion 11 compares both runs byte
for byte.  `python3 tests/test_acceptance.py` prints the report without pytest.
"""

import json
import os
import sys
import tempfile
from pathlib import Path

import pytest

from mcflab import cli
from mcflab.scenarios import SCENARIOS

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "all.ini"
BY_CRITERION = {s.criterion: name for name, s in SCENARIOS.items() if s.criterion is not None}
OSC1_BUDGET = 10.0  # seconds

REPORT: dict[int, str] = {}


def _run_all(root: Path) -> int:
    old = os.environ.get("MCFLAB_OUTPUT")
    os.environ["MCFLAB_OUTPUT"] = str(root)
    try:
        return cli.main(["run", str(CONFIG)])
    finally:
        if old is None:
            del os.environ["MCFLAB_OUTPUT"]
        else:
            os.environ["MCFLAB_OUTPUT"] = old


def _tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _record(k: int, ok: bool, detail: str) -> str:
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT[k] = line
    print(line)
    return line


def evaluate_criterion(k: int, root: Path) -> tuple[bool, str]:
    name = BY_CRITERION[k]
    summary = json.loads((root / "all" / name / "summary.json").read_text())
    failed = [c["name"] for c in summary["checks"] if not c["passed"]] + summary["errors"]
    ok = summary["passed"] and not failed
    detail = f"{name}: {len(summary['checks'])} checks"
    if k == 1:
        res = SCENARIOS[name].run()
        ok = ok and res.passed and res.runtime < OSC1_BUDGET
        detail += f", runtime {res.runtime:.2f} s (budget {OSC1_BUDGET:g} s)"
    if failed:
        detail += "; failed: " + "; ".join(failed)
    return ok, detail


def evaluate_determinism(first: Path, second: Path) -> tuple[bool, str]:
    a, b = _tree(first), _tree(second)
    differing = sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))
    ok = bool(a) and not differing
    detail = f"{len(a)} output files compared"
    if differing:
        detail += "; differing: " + ", ".join(differing[:5])
    return ok, detail


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    first = tmp_path_factory.mktemp("acceptance-a")
    second = tmp_path_factory.mktemp("acceptance-b")
    codes = (_run_all(first), _run_all(second))
    return first, second, codes


@pytest.mark.parametrize("k", sorted(BY_CRITERION))
def test_criterion(runs, k):
    ok, detail = evaluate_criterion(k, runs[0])
    _record(k, ok, detail)
    assert ok, detail


def test_run_all_exit_code(runs):
    assert runs[2] == (0, 0)


def test_criterion_11_determinism(runs):
    ok, detail = evaluate_determinism(runs[0], runs[1])
    _record(11, ok, detail)
    assert ok, detail


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        first, second = Path(tmp) / "a", Path(tmp) / "b"
        _run_all(first)
        _run_all(second)
        oks = []
        for k in sorted(BY_CRITERION):
            ok, detail = evaluate_criterion(k, first)
            oks.append(ok)
            _record(k, ok, detail)
        ok, detail = evaluate_determinism(first, second)
        oks.append(ok)
        _record(11, ok, detail)
    return 0 if all(oks) else 1


if __name__ == "__main__":
    sys.exit(main())
