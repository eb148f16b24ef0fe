#!/usr/bin/env python3
"""
MNL Best-Arm Identification - Startup Script

    python run.py run --spec sample_specs/sweep_d.json --out results/sweep_d
    python run.py lower-bound --instance sample_specs/orthonormal_d3.json --epsilon 0.1
    python run.py verify
"""
import sys


def check_python_version():
    """Check if Python version is compatible"""
    if sys.version_info < (3, 9):
        print("❌ Python 3.9+ is required", file=sys.stderr)
        sys.exit(1)


def main():
    check_python_version()
    try:
        import numpy  # noqa: F401
        import pydantic  # noqa: F401
        import scipy  # noqa: F401
    except ImportError as e:
        print(f"❌ Missing dependency ({e.name}); run: pip install -r requirements.txt", file=sys.stderr)
        sys.exit(1)

    from src.cli import main as cli_main

    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
