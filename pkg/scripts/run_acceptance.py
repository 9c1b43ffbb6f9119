"""Run the acceptance criteria without pytest and print one line per criterion."""
import runpy
from pathlib import Path

runpy.run_path(str(Path(__file__).resolve().parents[1] / "tests" / "test_acceptance.py"),
               run_name="__main__")
