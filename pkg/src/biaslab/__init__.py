"""Monte Carlo estimation of the bias operators and error forms of approximation schemes."""

__version__ = "0.1.0"
