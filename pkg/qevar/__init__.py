"""
qevar: quantum variances of random orthonormal bases.

Components:
  sympoly    – symmetric polynomials and Laplacian-at-zero coefficients
  orbit      – moments of the diagonal pushforward of a conjugation orbit
  haar       – Haar unitary sampling and Monte-Carlo estimators
  weingarten – exact Haar moments through the Weingarten function
  qe         – quantum variances, SLLN runs and Szegő checks
  torus      – flat-torus lattice shells and observables
"""

__version__ = "0.1.0"
