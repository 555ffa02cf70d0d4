"""Simulation and verification lab for Bessel and Dunkl particle systems.

Subpackages cover the Weyl-chamber geometry, electrostatic polynomial
zeros, frozen ODE flows, stochastic (diffusion and jump) dynamics, the
limiting moment recurrences, free-probability numerics for the limit
laws, and a convergence-experiment harness.
"""

__version__ = "0.1.0"

from . import chambers, freeprob, frozen, harness, moments, stochastic, zeros  # noqa: E402,F401
