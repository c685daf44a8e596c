"""Run the acceptance criteria and print one pass/fail line per criterion."""
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    code = pytest.main([str(ROOT / "tests" / "test_acceptance.py"), "-q", "-rN", *sys.argv[1:]])
    sys.exit(int(code))
