"""Simulation and Monte Carlo verification for processes decomposing as
``X = m + v + A`` (local martingale, drift carried by the zeros of a driving
martingale, drift carried by the zeros of ``X``)."""

__version__ = "0.1.0"
