"""Branch-cut-aware spectral functions.

For the ZS-type spectral problem attached to mKdV with nonzero backgrounds
q_pm, the relevant multivalued functions are

    focusing   lambda_pm(k)^2 = k^2 + q_pm^2,  cut [-i q_pm, i q_pm],
    defocusing lambda_pm(k)^2 = k^2 - q_pm^2,  cut {k real, |k| >= q_pm},

together with gamma_pm = 2 lambda_pm / (lambda_pm - k) and the asymptotic
eigenvector matrices E_pm = I + i/(k - lambda_pm) sigma3 Q_pm.

Branch fixing (validated against numerical continuation from large |k|):

* focusing: lambda = k sqrt(1 + (q/k)^2) off the cut (principal square
  root), so lambda ~ +k as |k| -> infinity in every direction.  On the open
  cut the Principal side is the limit from Re k > 0 and equals the positive
  real root +sqrt(q^2 - s^2) at k = i s; MinusSide is its negation.
* defocusing: lambda = i sqrt(q^2 - k^2) off the cut (principal square
  root), so Im lambda >= 0 everywhere off the cut and lambda ~ +k for
  Im k > 0 but lambda ~ -k for Im k < 0 (the paper's piecewise asymptotic
  law).  On the open cut the Principal side is the limit from Im k > 0 and
  equals sign(Re k) sqrt(k^2 - q^2); MinusSide is its negation.

Note: the defocusing branch with Im lambda >= 0 globally cannot satisfy
Schwarz reality lambda(conj k) = conj(lambda(k)); that identity is
incompatible with the piecewise ~ +-k asymptotics and is not enforced.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import EPS_BP_FACTOR, I2

PRINCIPAL = +1
MINUS_SIDE = -1

_ONCUT_TOL = 1e-13


class Regime(str, Enum):
    FOCUSING = "focusing"
    DEFOCUSING = "defocusing"

    @property
    def sigma(self) -> float:
        return -1.0 if self is Regime.FOCUSING else +1.0


@dataclass(frozen=True)
class BoundaryData:
    """Background pair (q_minus, q_plus) and regime.

    The paper's standing assumption is q_minus > q_plus > 0.  The mirrored
    ordering q_minus < q_plus arises internally from the reflection
    x -> -x and is accepted; strictly positive amplitudes are required.
    The degenerate symmetric case q_minus == q_plus is permitted only as an
    internal oracle for the symmetric-limit checks.
    """
    q_minus: float
    q_plus: float
    regime: Regime

    def __post_init__(self):
        if isinstance(self.regime, str):
            object.__setattr__(self, "regime", Regime(self.regime))
        if not (self.q_minus > 0 and self.q_plus > 0):
            raise ValueError("backgrounds must be strictly positive")

    @property
    def sigma(self) -> float:
        return self.regime.sigma

    @property
    def eps_bp(self) -> float:
        return EPS_BP_FACTOR * min(self.q_plus, self.q_minus)

    @property
    def standard_order(self) -> bool:
        return self.q_minus > self.q_plus

    def q(self, which: str) -> float:
        return self.q_plus if which == "plus" else self.q_minus

    def reflected(self) -> "BoundaryData":
        """Backgrounds of the parity-reflected potential q(-x)."""
        return BoundaryData(self.q_plus, self.q_minus, self.regime)


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral value with a cut-side tag.

    side = PRINCIPAL (+1) selects the limit from Re k > 0 (focusing
    vertical cuts) / from Im k > 0 (defocusing horizontal cuts); MinusSide
    (-1) the opposite limit.  Off every cut the tag is ignored.
    """
    k: complex
    side: int = PRINCIPAL


@dataclass
class BranchValue:
    lambda_plus: complex
    lambda_minus: complex
    gamma_plus: complex
    gamma_minus: complex
    E_plus: np.ndarray
    E_minus: np.ndarray
    near_branch_point: bool = False


def sigma3Q(q: float, regime: Regime) -> np.ndarray:
    """sigma3 Q with Q = [[0, q], [sigma q, 0]]."""
    sg = Regime(regime).sigma
    return np.array([[0.0, q], [-sg * q, 0.0]], dtype=complex)


def on_cut(k, q: float, regime: Regime):
    """True where k lies on the open branch cut of lambda(.; q)."""
    k = np.asarray(k, dtype=complex)
    if Regime(regime) is Regime.FOCUSING:
        return (np.abs(k.real) <= _ONCUT_TOL * (1 + np.abs(k.imag))) & \
               (np.abs(k.imag) < q)
    return (np.abs(k.imag) <= _ONCUT_TOL * (1 + np.abs(k.real))) & \
           (np.abs(k.real) > q)


def lam(k, q: float, regime: Regime, side=PRINCIPAL):
    """Branch value of lambda(k; q); vectorized over k (and side)."""
    regime = Regime(regime)
    k = np.asarray(k, dtype=complex)
    side = np.broadcast_to(np.asarray(side), k.shape)
    cut = on_cut(k, q, regime)
    if regime is Regime.FOCUSING:
        with np.errstate(divide="ignore", invalid="ignore"):
            off = k * np.sqrt(1.0 + (q / k) ** 2)
        s = k.imag
        oncut = side * np.sqrt(np.maximum(q * q - s * s, 0.0))
    else:
        off = 1j * np.sqrt(q * q - k * k)
        x = k.real
        oncut = side * np.sign(x) * np.sqrt(np.maximum(x * x - q * q, 0.0))
    out = np.where(cut, oncut.astype(complex), off)
    # branch points (k = +-iq / +-q) give exactly 0 via the cut formula;
    # k == 0 focusing lies on the cut and gives +-q
    if out.ndim == 0:
        return complex(out)
    return out


def gam(k, q: float, regime: Regime, side=PRINCIPAL):
    """gamma = 2 lambda / (lambda - k) = det E."""
    lm = lam(k, q, regime, side)
    return 2.0 * lm / (lm - np.asarray(k, dtype=complex))


def emat(k, q: float, regime: Regime, side=PRINCIPAL) -> np.ndarray:
    """E = I + i/(k - lambda) sigma3 Q; shape (..., 2, 2) for array k."""
    regime = Regime(regime)
    k = np.asarray(k, dtype=complex)
    lm = lam(k, q, regime, side)
    c = 1j / (k - lm)
    sg = regime.sigma
    E = np.zeros(k.shape + (2, 2), dtype=complex)
    E[..., 0, 0] = 1.0
    E[..., 1, 1] = 1.0
    E[..., 0, 1] = c * q
    E[..., 1, 0] = -sg * c * q
    if k.ndim == 0:
        return E.reshape(2, 2)
    return E


# ---- spec-facing wrappers on SpectralPoint -------------------------------

def lambda_(point: SpectralPoint, which: str, bd: BoundaryData) -> complex:
    return complex(lam(point.k, bd.q(which), bd.regime, point.side))


def gamma(point: SpectralPoint, which: str, bd: BoundaryData):
    """gamma value plus a NearBranchPoint flag (value always returned)."""
    val = complex(gam(point.k, bd.q(which), bd.regime, point.side))
    lm = lambda_(point, which, bd)
    return val, abs(lm) < bd.eps_bp


def eigenmatrix(point: SpectralPoint, which: str, bd: BoundaryData) -> np.ndarray:
    return emat(point.k, bd.q(which), bd.regime, point.side)


def branch_value(point: SpectralPoint, bd: BoundaryData) -> BranchValue:
    lp = lambda_(point, "plus", bd)
    lmn = lambda_(point, "minus", bd)
    gp, fp = gamma(point, "plus", bd)
    gm, fm = gamma(point, "minus", bd)
    return BranchValue(
        lambda_plus=lp, lambda_minus=lmn, gamma_plus=gp, gamma_minus=gm,
        E_plus=eigenmatrix(point, "plus", bd),
        E_minus=eigenmatrix(point, "minus", bd),
        near_branch_point=fp or fm,
    )


def lam_continued(k: complex, q: float, regime: Regime, n_steps: int = 4000,
                  r_start: float = 1e6) -> complex:
    """Numerical-continuation oracle: track lambda ~ +k from |k| = r_start
    along a straight path to k, flipping the sqrt sign to keep continuity.
    Used only in tests to validate the piecewise branch formulas.
    """
    regime = Regime(regime)
    k = complex(k)
    k0 = r_start * np.exp(1j * np.angle(k if k != 0 else 1.0))
    path = k0 + (k - k0) * np.linspace(0.0, 1.0, n_steps)
    if regime is Regime.FOCUSING:
        raw = np.sqrt(path ** 2 + q * q)
    else:
        raw = np.sqrt(path ** 2 - q * q)
    val = raw[0] if abs(raw[0] - k0) < abs(-raw[0] - k0) else -raw[0]
    sign = 1.0 if val == raw[0] else -1.0
    prev = val
    for j in range(1, n_steps):
        cand = sign * raw[j]
        if abs(cand - prev) > abs(-cand - prev):
            sign = -sign
            cand = -cand
        prev = cand
    return complex(prev)
