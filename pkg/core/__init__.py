# This file is intentionally empty.
# Its presence marks the 'core' directory as a Python package.
