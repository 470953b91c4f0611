"""Time evolution of scattering data.

Under mKdV q_t - 6 sigma q^2 q_x + q_xxx = 0 the Jost functions evolve so
that the scattering matrix is constant when the plane-wave normalization
carries the phases

    theta_pm(x, t; k) = lambda_pm x - f_pm(k) t,

    f_pm = 2 (q_pm^2 - 2 k^2) lambda_pm        (focusing),
    f_pm = -2 (q_pm^2 + 2 k^2) lambda_pm       (defocusing).

The jump matrices at time t are therefore the t = 0 jumps with every
occurrence of lambda_pm x replaced by theta_pm(x, t).  Equivalently, the
reflection coefficient freshly computed from the field q(., t) obeys

    rho(k, t) = rho(k, 0) e^{-2 i f_plus(k) t},
    tilde_rho(k, t) = tilde_rho(k, 0) e^{+2 i f_plus(k) t},

and the norming constants C_j(t) = C_j(0) e^{-2 i f_plus(k_j) t},
C_conj_j(t) = C_conj_j(0) e^{+2 i f_plus(conj k_j) t}.  (The sign
convention is pinned by the linearized dispersion relation about the
constant background, which the e^{2 i theta_-} jump entry must match.)
"""
from __future__ import annotations

import numpy as np

from .branch import BoundaryData, Regime, PRINCIPAL, lam
from .scattering import ScatteringData, DiscreteEigen


def f_pm(k, bd: BoundaryData, which: str, side=PRINCIPAL):
    """Dispersion phase coefficient f_pm(k) (vectorized over k)."""
    q = bd.q(which)
    lm = lam(k, q, bd.regime, side)
    k = np.asarray(k, dtype=complex)
    if bd.regime is Regime.FOCUSING:
        return 2.0 * (q * q - 2.0 * k * k) * lm
    return -2.0 * (q * q + 2.0 * k * k) * lm


def theta(k, x, t, bd: BoundaryData, which: str, side=PRINCIPAL):
    """theta_pm(x, t; k) = lambda_pm x - f_pm t."""
    q = bd.q(which)
    return lam(k, q, bd.regime, side) * x - f_pm(k, bd, which, side) * t


def evolved_rho_phase(k, t, bd: BoundaryData, side=PRINCIPAL):
    """Multiplier carrying rho(k, 0) to the freshly-scattered rho(k, t)."""
    return np.exp(-2j * f_pm(k, bd, "plus", side) * t)


def evolve(data: ScatteringData, t: float) -> ScatteringData:
    """Return scattering data advanced to time t.

    The segment samples themselves are time-invariant (the solver applies
    the theta phases analytically); only the timestamp and the discrete
    norming constants change.
    """
    bd = data.bd
    disc = []
    for d in data.discrete:
        dt = t - data.t
        C = d.C * np.exp(-2j * f_pm(d.k, bd, "plus") * dt)
        Cc = None
        if d.C_conj is not None:
            Cc = d.C_conj * np.exp(2j * f_pm(np.conj(d.k), bd, "plus") * dt)
        disc.append(DiscreteEigen(k=d.k, C=complex(C),
                                  C_conj=None if Cc is None else complex(Cc)))
    return ScatteringData(bd=bd, t=t, segments=data.segments, discrete=disc,
                          meta=dict(data.meta))
