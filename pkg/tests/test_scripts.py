import subprocess
import sys
from pathlib import Path

import pytest

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


@pytest.mark.parametrize("name, expect", [
    ("reproduce_tables.py", "M3 flags: alpha=0.05: 6"),
    ("reproduce_ncurves.py", "strong_r: r1=0.94: 5623"),
    ("make_synthetic_survey.py", "survey.csv"),
])
def test_script_runs(tmp_path, name, expect):
    proc = subprocess.run([sys.executable, str(SCRIPTS / name), "--output-dir", str(tmp_path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert expect in proc.stdout
    assert any(tmp_path.iterdir())
