"""Numerical toolkit for periodic traveling waves of lattice systems.

Covers profile solution and continuation for reaction-diffusion,
conservation/relaxation and Hamiltonian lattices, their Floquet-Bloch
spectra near exponent zero, averaged (modulation) quantities of the wave
family, and the cross-checks tying the spectral expansion to the
modulation system, plus direct ring simulations.
"""

from .errors import LatticeWaveError

__all__ = ["LatticeWaveError"]
__version__ = "0.1.0"
