"""Fair allocation of an aggregator's purchased energy under alpha-fairness."""

__version__ = "0.1.0"
