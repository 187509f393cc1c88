"""Crystal structure prediction on a discretized periodic cell."""
__version__ = "0.1.0"
