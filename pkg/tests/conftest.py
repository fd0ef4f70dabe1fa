import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FULLSCALE = bool(os.environ.get("CEFURA_FULLSCALE"))


def pytest_collection_modifyitems(config, items):
    if FULLSCALE:
        return
    skip = pytest.mark.skip(reason="reference-scale run; set CEFURA_FULLSCALE=1")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    if 6 not in results:
        results = dict(results)
        results[6] = ("criterion  6: SKIPPED reference-scale run (set CEFURA_FULLSCALE=1); "
                      "desk-scale ordering reported as 6s")
    for key in sorted(results, key=lambda k: (int(str(k).rstrip("s")), str(k))):
        terminalreporter.write_line(results[key])
