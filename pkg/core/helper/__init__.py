# This file is intentionally empty.
# Its presence marks the 'helper' directory as a Python package.
