"""Numerics for Euclidean path integrals and constructive field theory.

Subpackages by theme:

- ``numerics``   shared kernels: symmetric-convention Fourier transform,
  Fresnel/Gaussian closed forms, modified Bessel K by quadrature,
  Gauss-Hermite expectations
- ``mechanics``  polynomial phase-space observables, Poisson brackets,
  leapfrog flow, Legendre transform, discrete action functionals
- ``quantum``    truncated oscillator algebra, Weyl/Wick quantization,
  free kernels, split-step and Trotter evolution, time-sliced path integral
- ``wiener``     Brownian sampling, cylinder-set probabilities, bridges,
  Feynman-Kac Monte Carlo estimators
- ``gaussian``   finite-dimensional Gaussian measures, Wick ordering,
  pairing/diagram combinatorics, Cameron-Martin densities, Fock inner
  products
- ``freefield``  continuum (Delta+m^2)^(-1) covariance, 2D lattice free
  field, Wick-power interactions, reflection-positivity and invariance
  checks
- ``experiments`` / ``cli``  named, seeded experiment runner
"""

from funcint.rng import RngStream

__all__ = ["RngStream"]
__version__ = "0.1.0"
