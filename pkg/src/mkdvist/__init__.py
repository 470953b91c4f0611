"""Numerical inverse scattering transform for the mKdV equation with fully
asymmetric nonzero boundary conditions q(x) -> q_pm as x -> pm infinity,
q_- > q_+ > 0, in both the focusing and defocusing regimes.

Modules
-------
branch      branch-cut aware spectral functions lambda_pm, gamma_pm, E_pm
jost        direct scattering: Jost functions mu_pm(x, k)
scattering  scattering matrix, reflection coefficients, discrete spectrum
evolution   time evolution of scattering data via the f_pm dispersion laws
rhp         contour assembly, jump matrices, collocation RH solver
reconstruct recovery of q(x, t) from the RH solution
pde_ref     independent finite-difference mKdV time stepper (cross-check)
cli         configuration-driven pipeline driver
"""

__version__ = "0.1.0"
