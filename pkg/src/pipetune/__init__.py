"""pipetune: trace-driven parameter tuning for packet-processing programs
against a switch-pipeline resource model."""

__version__ = "0.1.0"
