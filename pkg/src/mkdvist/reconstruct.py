"""Recovery of the potential q(x, t) from the Riemann-Hilbert solution.

Two independent routes to the same number are kept alive deliberately:

1. the reconstruction formula — the background value plus the residue sum
   and the contour integral of [M^-(V - I)]_12, evaluated on the exact
   quadrature the RH solve used (this is the 1/k moment of the solved
   density, so it costs nothing extra);
2. the large-k limit q = -i lim k M_12, sampled at k = iR for three
   decades of R and Richardson-extrapolated in 1/R.

Route 2 exercises the off-contour Cauchy evaluation rather than the
moment bookkeeping, so a disagreement between the two is a sharp signal
of an orientation or sign error somewhere in the jump assembly; it is
reported as LimitMismatch instead of being averaged away.

Realness of q is a property of the solution, not an input assumption, so
it is monitored (|Im q| recorded per point) and never forced.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .branch import BoundaryData, Regime
from .constants import TAU_TAIL
from .rhp import RHSolution, solve_rhp

# radii for the large-k cross-check, in units of q_-
LIMIT_RADII = (1e2, 1e3, 1e4)
# |Im q| above this is flagged in FieldGrid diagnostics
IMAG_TOL = 1e-8
# floor of the formula-vs-limit agreement tolerance; per-solution
# truncation and residual estimates widen it
LIMIT_TOL_FLOOR = 1e-5


class LimitMismatch(ArithmeticError):
    """Reconstruction formula and large-k limit disagree beyond tolerance
    (signals an RHP orientation/sign bug, not a resolution problem)."""


def _limit_route(sol: RHSolution) -> tuple[float, float]:
    """q from -i lim k M_12 along the positive imaginary axis.

    Samples at k = iR q_- for three decades of R and eliminates the 1/R
    and 1/R^2 error terms by Richardson extrapolation (the limits are
    taken in the upper half plane, which is the only half plane the
    defocusing M frame admits; for focusing it is a valid choice).
    """
    qm = sol.bd.q_minus
    zs = np.array([1j * r * qm for r in LIMIT_RADII])
    M = sol.evaluate(zs, frame="M")
    v = -1j * zs * M[:, 0, 1]
    r = LIMIT_RADII[1] / LIMIT_RADII[0]
    v01 = (r * v[1] - v[0]) / (r - 1.0)
    v12 = (r * v[2] - v[1]) / (r - 1.0)
    ext = (r * r * v12 - v01) / (r * r - 1.0)
    spread = float(np.max(np.abs(v - ext)))
    return complex(ext), spread


def _limit_tolerance(sol: RHSolution, tol: float | None) -> float:
    if tol is not None:
        return tol
    diag = sol.diagnostics
    resid = diag.get("residual") or 0.0
    trunc = diag.get("trunc_est") or 0.0
    return max(LIMIT_TOL_FLOOR, 20.0 * (resid + trunc))


def _reconstruct(sol: RHSolution, data, bd: BoundaryData,
                 limit_tol: float | None) -> float:
    """Common body of the two regime-specific entry points."""
    if bd is None:
        bd = sol.bd
    resid = sol.diagnostics.get("residual")
    if resid is not None and not np.isfinite(resid):
        raise ValueError("solution carries a non-finite jump residual")
    # the formula route: background + residue sum + contour integral,
    # already folded into the solution's 1/k moments
    q_formula = sol.q
    q_limit, spread = _limit_route(sol)
    tol = _limit_tolerance(sol, limit_tol)
    gap = abs(q_limit - sol.q_a)
    if gap > tol + 3.0 * spread:
        raise LimitMismatch(
            f"formula q = {sol.q_a:.8g} vs large-k limit {q_limit:.8g} "
            f"(gap {gap:.2e}, tolerance {tol:.2e})")
    return float(q_formula.real)


def reconstruct_focusing(sol: RHSolution, data=None,
                         bd: BoundaryData | None = None,
                         limit_tol: float | None = None) -> float:
    """q(x, t) for the focusing regime.

    Evaluates q_-(t) minus the conjugate-residue sum plus the contour
    integral of [M^-(V - I)]_12 / 2 pi on the solve's own quadrature,
    then cross-checks the independent limit -i lim k M_12 at k = iR q_-,
    R in LIMIT_RADII, Richardson-extrapolated.  Raises LimitMismatch on
    disagreement.
    """
    bd = sol.bd if bd is None else bd
    if bd.regime is not Regime.FOCUSING:
        raise ValueError("reconstruct_focusing needs focusing boundary data")
    return _reconstruct(sol, data, bd, limit_tol)


def reconstruct_defocusing(sol: RHSolution, data=None,
                           bd: BoundaryData | None = None,
                           limit_tol: float | None = None) -> float:
    """q(x, t) for the defocusing regime.

    Same contract as the focusing case with the q_+-anchored formula (the
    1/lambda_+ weighted integral) and the large-k limit taken in the
    upper half plane only.
    """
    bd = sol.bd if bd is None else bd
    if bd.regime is not Regime.DEFOCUSING:
        raise ValueError("reconstruct_defocusing needs defocusing "
                         "boundary data")
    return _reconstruct(sol, data, bd, limit_tol)


def reconstruct_point(sol: RHSolution, data=None,
                      bd: BoundaryData | None = None,
                      limit_tol: float | None = None) -> float:
    """Regime dispatch for a single solved point."""
    bd = sol.bd if bd is None else bd
    if bd.regime is Regime.FOCUSING:
        return reconstruct_focusing(sol, data, bd, limit_tol)
    return reconstruct_defocusing(sol, data, bd, limit_tol)


# ------------------------------ grids --------------------------------------

@dataclass
class FieldGrid:
    """q(x, t) samples with per-point solver diagnostics.

    Failed points carry q = nan and failed[i] = True with the error
    message in messages; they never abort the rest of the grid.  The
    imaginary part of q is monitored against IMAG_TOL, not forced to
    zero.
    """
    x: np.ndarray
    t: float
    bd: BoundaryData
    q: np.ndarray
    imag_defect: np.ndarray
    jump_residual: np.ndarray
    trunc_est: np.ndarray
    failed: np.ndarray
    messages: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.x)

    @property
    def n_failed(self) -> int:
        return int(np.count_nonzero(self.failed))

    @property
    def max_imag(self) -> float:
        ok = ~self.failed
        return float(self.imag_defect[ok].max()) if ok.any() else 0.0

    def tail_defect(self) -> float:
        """Worst deviation of the end samples from q_-/q_+ (nan if either
        end point failed)."""
        if len(self.x) == 0 or self.failed[0] or self.failed[-1]:
            return float("nan")
        return max(abs(self.q[0] - self.bd.q_minus),
                   abs(self.q[-1] - self.bd.q_plus))

    def check_invariants(self, imag_tol: float = IMAG_TOL,
                         tail_tol: float = 1e-3) -> list[str]:
        """List of invariant violations (empty when clean)."""
        out = []
        if self.n_failed:
            out.append(f"{self.n_failed} of {len(self)} points failed")
        if len(self) and self.max_imag > imag_tol:
            out.append(f"max |Im q| = {self.max_imag:.2e} > {imag_tol:g}")
        td = self.tail_defect()
        if len(self) and np.isfinite(td) and td > tail_tol:
            out.append(f"boundary defect {td:.2e} > {tail_tol:g}")
        return out

    def to_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(header_comment.rstrip("\n") + "\n")
            w = csv.writer(fh)
            w.writerow(["x", "q", "jump_residual", "trunc_est"])
            for i in range(len(self.x)):
                w.writerow([f"{self.x[i]:.16g}", f"{self.q[i]:.16g}",
                            f"{self.jump_residual[i]:.6e}",
                            f"{self.trunc_est[i]:.6e}"])

    def diagnostics_dict(self) -> dict:
        return {
            "t": self.t,
            "q_minus": self.bd.q_minus, "q_plus": self.bd.q_plus,
            "regime": self.bd.regime.name.lower(),
            "n_points": len(self.x), "n_failed": self.n_failed,
            "max_imag": self.max_imag,
            "tail_defect": self.tail_defect(),
            "max_jump_residual": (
                float(np.nanmax(self.jump_residual))
                if len(self.x) else 0.0),
            "failures": {str(self.x[i]): msg
                         for i, msg in sorted(self.messages.items())},
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.diagnostics_dict(), fh, indent=2)
            fh.write("\n")


def reconstruct_grid(data, xs, t: float | None = None,
                     method: str = "auto", n_per_panel: int = 12,
                     residual_tol: float = 1e-4,
                     limit_tol: float | None = None,
                     workers: int = 1) -> FieldGrid:
    """Map solve_rhp + reconstruct over an x grid at one time.

    Solves at distinct x are independent; workers > 1 runs them on a
    thread pool (the dense linear algebra releases the GIL).  Per-point
    failures are recorded and marked, not propagated.
    """
    xs = np.asarray(xs, dtype=float)
    bd = data.bd
    if t is None:
        t = data.t
    n = len(xs)
    q = np.full(n, np.nan)
    imag_defect = np.full(n, np.nan)
    resid = np.full(n, np.nan)
    trunc = np.full(n, np.nan)
    failed = np.zeros(n, dtype=bool)
    messages: dict[int, str] = {}

    def _one(i: int):
        xi = float(xs[i])
        try:
            sol = solve_rhp(data, xi, t=t, method=method,
                            n_per_panel=n_per_panel,
                            residual_tol=residual_tol,
                            raise_on_residual=True)
            qi = reconstruct_point(sol, data, bd, limit_tol)
        except Exception as exc:  # mark, don't abort the grid
            failed[i] = True
            messages[i] = f"{type(exc).__name__}: {exc}"
            return
        q[i] = qi
        imag_defect[i] = abs(sol.q.imag)
        d = sol.diagnostics
        resid[i] = d.get("residual") if d.get("residual") is not None \
            else np.nan
        trunc[i] = d.get("trunc_est", np.nan)

    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_one, range(n)))
    else:
        for i in range(n):
            _one(i)

    return FieldGrid(x=xs, t=float(t), bd=bd, q=q, imag_defect=imag_defect,
                     jump_residual=resid, trunc_est=trunc, failed=failed,
                     messages=messages)
