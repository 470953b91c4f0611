"""Independent mKdV time-stepper used as a cross-validation oracle.

Integrates q_t - 6 sigma q^2 q_x + q_xxx = 0 by method of lines:
fourth-order centered differences for q_x and q_xxx on a uniform grid,
explicit RK4 in time.  The boundary closure pins the ghost values to the
constant backgrounds q_-/q_+ (no background subtraction: the two tails
differ, so no single background could be subtracted), which is exact as
long as the disturbance has not reached the ends; a sponge-zone energy
probe near each end monitors that assumption and raises BoundaryDrift
when reflections exceed tolerance.

Stability: the dispersive symbol of the fourth-order q_xxx stencil has
modulus at most S3_MAX / h^3 on the imaginary axis, and RK4's imaginary
stability interval is |z| <= 2.83, so steps must satisfy
dt <= CFL_LIMIT h^3 (with a small safety margin for the advective term).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .branch import BoundaryData
from .constants import TAU_TAIL

# max_xi |2 (13/8 sin xi - sin 2 xi + 1/8 sin 3 xi)| for the 7-point
# fourth-order q_xxx stencil
S3_MAX = 4.608
# RK4 imaginary-axis stability bound 2.83 against S3_MAX, with margin
CFL_LIMIT = 0.55
CFL_DEFAULT = 0.30

# width of each boundary sponge probe zone, as a fraction of the domain
SPONGE_FRACTION = 0.08
BOUNDARY_DRIFT_TOL = 1e-6


class StabilityViolation(ArithmeticError):
    """Time step above the RK4/FD4 stability bound, or blow-up detected."""


class BoundaryDrift(ArithmeticError):
    """The disturbance reached the pinned boundaries beyond tolerance."""


@dataclass
class PdeState:
    """Field samples q(x, t) on a uniform grid with pinned backgrounds."""
    x: np.ndarray
    q: np.ndarray
    t: float
    bd: BoundaryData

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        h = self.x[1] - self.x[0]
        if not np.allclose(np.diff(self.x), h, rtol=0.0, atol=1e-9 * h):
            raise ValueError("pde_ref requires a uniform grid")
        if self.q.shape != self.x.shape:
            raise ValueError("grid/sample shape mismatch")

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @classmethod
    def from_profile(cls, profile, n: int | None = None,
                     half_domain: float | None = None) -> "PdeState":
        """Sample a PotentialProfile at t = 0 (optionally on its own grid)."""
        L = profile.half_domain if half_domain is None else half_domain
        if n is None:
            x = profile.x
        else:
            x = np.linspace(-L, L, n)
        return cls(x=x, q=np.asarray(profile.func(x), dtype=float),
                   t=0.0, bd=profile.bd)

    def tail_defect(self) -> float:
        """Worst deviation of the two boundary samples from q_-/q_+."""
        return max(abs(self.q[0] - self.bd.q_minus),
                   abs(self.q[-1] - self.bd.q_plus))


def _rhs(q: np.ndarray, h: float, sigma: float, qm: float,
         qp: float) -> np.ndarray:
    """dq/dt = 6 sigma q^2 q_x - q_xxx with background-pinned ghosts."""
    ext = np.empty(len(q) + 6)
    ext[3:-3] = q
    ext[:3] = qm
    ext[-3:] = qp
    qx = (ext[1:-5] - 8.0 * ext[2:-4] + 8.0 * ext[4:-2]
          - ext[5:-1]) / (12.0 * h)
    qxxx = (ext[:-6] - 8.0 * ext[1:-5] + 13.0 * ext[2:-4]
            - 13.0 * ext[4:-2] + 8.0 * ext[5:-1] - ext[6:]) / (8.0 * h ** 3)
    return 6.0 * sigma * q * q * qx - qxxx


def step(state: PdeState, dt: float) -> PdeState:
    """One explicit RK4 step (stability precondition checked)."""
    h = state.h
    if abs(dt) > CFL_LIMIT * h ** 3:
        raise StabilityViolation(
            f"dt = {dt:g} above the stability bound "
            f"{CFL_LIMIT:g} h^3 = {CFL_LIMIT * h ** 3:g}")
    sigma = state.bd.sigma
    qm, qp = state.bd.q_minus, state.bd.q_plus
    q = state.q
    k1 = _rhs(q, h, sigma, qm, qp)
    k2 = _rhs(q + 0.5 * dt * k1, h, sigma, qm, qp)
    k3 = _rhs(q + 0.5 * dt * k2, h, sigma, qm, qp)
    k4 = _rhs(q + dt * k3, h, sigma, qm, qp)
    qn = q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(qn)) or np.max(np.abs(qn)) > 100.0 * max(
            1.0, np.max(np.abs(q))):
        raise StabilityViolation("blow-up detected during RK4 step")
    return replace(state, q=qn, t=state.t + dt)


def _sponge_energy(state: PdeState, base: PdeState) -> float:
    """Max deviation from the initial field over the two sponge zones."""
    n = max(2, int(SPONGE_FRACTION * len(state.x)))
    d = np.abs(state.q - base.q)
    return float(max(d[:n].max(), d[-n:].max()))


def evolve_to(state: PdeState, t_final: float, dt: float | None = None,
              check_boundaries: bool = True) -> PdeState:
    """Repeated stepping to t_final (final partial step included).

    Monitors the mass-like functional int (q - q_linear) dx and the sponge
    zones; the mass drift is attached to nothing (the scheme is not exactly
    conservative) but boundary reflections above tolerance raise
    BoundaryDrift because they invalidate the pinned closure.
    """
    span = t_final - state.t
    if span == 0.0:
        return state
    h = state.h
    if dt is None:
        dt = CFL_DEFAULT * h ** 3
    dt = abs(dt) * np.sign(span)
    nsteps = int(np.ceil(abs(span) / abs(dt)))
    base = state
    cur = state
    for j in range(nsteps):
        target = state.t + span * (j + 1) / nsteps
        cur = step(cur, target - cur.t)
    if check_boundaries:
        drift = _sponge_energy(cur, base)
        if drift > BOUNDARY_DRIFT_TOL:
            raise BoundaryDrift(
                f"sponge-zone deviation {drift:.2e} exceeds "
                f"{BOUNDARY_DRIFT_TOL:g}; enlarge the domain")
        if cur.tail_defect() > max(BOUNDARY_DRIFT_TOL, 10.0 * TAU_TAIL):
            raise BoundaryDrift("boundary samples drifted off q_-/q_+")
    return cur


def mass_functional(state: PdeState) -> float:
    """Trapezoid integral of q minus the linear background interpolant
    (a mass-like drift monitor for convergence studies)."""
    lin = (state.bd.q_minus
           + (state.bd.q_plus - state.bd.q_minus)
           * (state.x - state.x[0]) / (state.x[-1] - state.x[0]))
    return float(np.trapezoid(state.q - lin, state.x))
