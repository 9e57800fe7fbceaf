"""Simulation and fitting toolkit for spin-3/2 silicon vacancies in 6H-SiC."""

__version__ = "0.1.0"
