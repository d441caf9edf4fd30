import os
import sys

# Get the absolute path of the directory containing this script
# so the package imports work no matter where the lab is run from
BASE_DIR = os.path.dirname(os.path.abspath(__file__))

# Add the repository root to the Python path
sys.path.insert(0, BASE_DIR)

try:
    from core.cli_controller import main as cli_main
except ImportError:
    # Show where we looked before re-raising; path problems are the usual cause
    print(f"Current path: {sys.path}")
    print(f"Looking for module in: {os.path.join(BASE_DIR, 'core')}")
    raise


def main():
    """
    Application entry point.

    Runs one subcommand and exits with its code:
    0 success, 1 infeasible, 2 usage/IO, 3 validation.
    """
    return cli_main(sys.argv[1:], base_dir=BASE_DIR)


if __name__ == "__main__":
    sys.exit(main())
