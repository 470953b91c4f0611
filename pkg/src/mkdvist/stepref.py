"""Closed-form reference solution for the pure step background

    q(x) = q_minus (x <= 0),  q_plus (x > 0).

Everything here is exact piecewise linear algebra: Jost functions are
E-frame conjugations of plane waves, the scattering matrix is
S = E_+^{-1} E_-, and the Riemann-Hilbert unknown M and its normalized
version N follow from the frame definitions.  The module serves three
purposes: a test oracle for the whole pipeline, the piecewise-exact
initializer demanded by the step-scattering acceptance check, and the
parametrix used to precondition the RH solve at large |x| (the "ratio"
formulation).
"""
from __future__ import annotations

import numpy as np

from .branch import BoundaryData, Regime, emat, lam, PRINCIPAL


def _phase(lm, x):
    return np.array([[np.exp(-1j * lm * x), 0.0], [0.0, np.exp(1j * lm * x)]],
                    dtype=complex)


def step_phi(x: float, k: complex, bd: BoundaryData,
             side_m: int = PRINCIPAL, side_p: int = PRINCIPAL):
    """Exact Jost solutions (phi_minus, phi_plus, lambda_minus, lambda_plus)."""
    Em = emat(k, bd.q_minus, bd.regime, side_m)
    Ep = emat(k, bd.q_plus, bd.regime, side_p)
    lmm = lam(k, bd.q_minus, bd.regime, side_m)
    lmp = lam(k, bd.q_plus, bd.regime, side_p)
    if x <= 0:
        phim = Em @ _phase(lmm, x)
        phip = phim @ np.linalg.solve(Em, Ep)
    else:
        phip = Ep @ _phase(lmp, x)
        phim = phip @ np.linalg.solve(Ep, Em)
    return phim, phip, lmm, lmp


def step_S(k: complex, bd: BoundaryData,
           side_m: int = PRINCIPAL, side_p: int = PRINCIPAL) -> np.ndarray:
    """S = E_+^{-1} E_- at the tagged one-sided branch values."""
    Em = emat(k, bd.q_minus, bd.regime, side_m)
    Ep = emat(k, bd.q_plus, bd.regime, side_p)
    return np.linalg.solve(Ep, Em)


def step_rho(k: complex, bd: BoundaryData,
             side_m: int = PRINCIPAL, side_p: int = PRINCIPAL):
    S = step_S(k, bd, side_m, side_p)
    return S[1, 0] / S[0, 0], S[0, 1] / S[1, 1]


def mu_cols(x: float, k: complex, bd: BoundaryData,
            side_m: int = PRINCIPAL, side_p: int = PRINCIPAL):
    """Phase-normalized Jost columns (mu_-1, mu_-2, mu_+1, mu_+2)."""
    phim, phip, lmm, lmp = step_phi(x, k, bd, side_m, side_p)
    return (phim[:, 0] * np.exp(1j * lmm * x),
            phim[:, 1] * np.exp(-1j * lmm * x),
            phip[:, 0] * np.exp(1j * lmp * x),
            phip[:, 1] * np.exp(-1j * lmp * x))


def fframe(k, bd: BoundaryData, side_m: int = PRINCIPAL,
           side_p: int = PRINCIPAL) -> np.ndarray:
    """Normalization frame F used to renormalize M at infinity.

    focusing:  F = [(q_-/q_+) E_{-,1}, E_{+,2}]  (both half planes);
    defocusing: F = E_+ (the paper's N = M E_+^{-1} transform).
    In either case N = M F^{-1} -> I as |k| -> infinity off the contour.
    """
    if bd.regime is Regime.DEFOCUSING:
        return emat(k, bd.q_plus, bd.regime, side_p)
    Em = emat(k, bd.q_minus, bd.regime, side_m)
    Ep = emat(k, bd.q_plus, bd.regime, side_p)
    return np.column_stack([(bd.q_minus / bd.q_plus) * Em[:, 0], Ep[:, 1]])


def step_M(x: float, k: complex, bd: BoundaryData,
           side_m: int = PRINCIPAL, side_p: int = PRINCIPAL,
           half: str | None = None) -> np.ndarray:
    """The RH unknown M of the step at a tagged one-sided point.

    focusing: upper-half frame [mu_-1/s11, mu_+2], lower [mu_+1, mu_-2/s22];
    defocusing: [mu_-1/s11, mu_+2] in all of C minus the contour.
    """
    S = step_S(k, bd, side_m, side_p)
    m1, m2, p1, p2 = mu_cols(x, k, bd, side_m, side_p)
    if bd.regime is Regime.DEFOCUSING or half == "upper":
        return np.column_stack([m1 / S[0, 0], p2])
    if half == "lower":
        return np.column_stack([p1, m2 / S[1, 1]])
    raise ValueError("half-plane tag required for focusing")


def step_N(x: float, k: complex, bd: BoundaryData,
           side_m: int = PRINCIPAL, side_p: int = PRINCIPAL,
           half: str | None = None) -> np.ndarray:
    """Normalized unknown N = M F^{-1} (N -> I at infinity)."""
    if half is None and bd.regime is Regime.FOCUSING:
        half = "upper" if complex(k).imag >= 0 else "lower"
    M = step_M(x, k, bd, side_m, side_p, half)
    F = fframe(k, bd, side_m, side_p)
    return M @ np.linalg.inv(F)


def step_q(x: float, bd: BoundaryData) -> float:
    """The step potential itself (mean value at the jump)."""
    if x < 0:
        return bd.q_minus
    if x > 0:
        return bd.q_plus
    return 0.5 * (bd.q_minus + bd.q_plus)


def step_has_discrete_spectrum(bd: BoundaryData, n_scan: int = 400) -> bool:
    """Coarse scan for zeros of the step s11 off the contour.

    Used to decide whether the step parametrix is pole-free (required by the
    ratio-preconditioned RH solve).  For the defocusing regime the candidate
    region is the real gap (-q_+, q_+); for focusing, the upper half plane
    off the cut.
    """
    if bd.regime is Regime.DEFOCUSING:
        qs = min(bd.q_plus, bd.q_minus)
        xs = np.linspace(-qs + 1e-6, qs - 1e-6, n_scan)
        vals = np.array([abs(step_S(complex(x), bd)[0, 0]) for x in xs])
        return bool(vals.min() < 1e-3)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-3, 3, n_scan) + 1j * rng.uniform(0.05, 3.0, n_scan)
    qm = max(bd.q_plus, bd.q_minus)
    pts = pts[np.abs(pts.real) > 0.05 * qm]
    vals = np.array([abs(step_S(k, bd)[0, 0]) for k in pts])
    return bool(vals.min() < 1e-3)
