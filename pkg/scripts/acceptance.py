"""Run the acceptance suite and print one PASS/FAIL line per criterion."""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    sys.exit(subprocess.call([sys.executable, "-m", "pytest", "-q", "-m", "acceptance", str(ROOT / "tests" / "test_acceptance.py"), *sys.argv[1:]], cwd=ROOT))
