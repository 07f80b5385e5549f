"""Convex score-matching programs for two-layer networks, with Langevin samplers.

Submodules are imported explicitly (``from scorekit import sm1d``); importing
the package itself stays cheap so that the command-line entry point can set
thread limits before numpy is loaded.
"""

__version__ = "0.1.0"
