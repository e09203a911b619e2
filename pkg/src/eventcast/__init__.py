"""Attack-class forecasting from discretized network flow records."""

__version__ = "0.1.0"
