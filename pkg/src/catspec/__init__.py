"""
Simulation and analysis toolkit for cat-state spectroscopy with a trapped-ion
logic qubit: phase-space geometry, the closed-form qubit signal, Monte Carlo
and truncated Fock-space cross-checks, shot statistics, fits, line profiles
and a small pulse-sequence language.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"
