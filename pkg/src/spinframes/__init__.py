"""Chart-level spin frames, projectable connections and Dirac residuals."""

__version__ = "0.1.0"
