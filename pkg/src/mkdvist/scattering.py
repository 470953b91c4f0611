"""Scattering matrix, reflection coefficients and discrete spectrum.

Entries are Wronskians of Jost columns at the matching point x_m = 0:

    s11 = Wr(phi_-1, phi_+2)/gamma_+,   s12 = Wr(phi_-2, phi_+2)/gamma_+,
    s21 = Wr(phi_+1, phi_-1)/gamma_+,   s22 = Wr(phi_+1, phi_-2)/gamma_+,

with det S = gamma_-/gamma_+.  A Jost column can only be computed stably
when it does not decay in its integration direction:

    mu_-1 stable iff Im lambda_- >= 0,   mu_-2 stable iff Im lambda_- <= 0,
    mu_+1 stable iff Im lambda_+ <= 0,   mu_+2 stable iff Im lambda_+ >= 0.

On every contour segment the jump matrices only ever need entries (or the
combinations below) built from stable columns:

    combo_plus  = rho - 1/tilde_rho  = -(gamma_-/gamma_+)/(s11 s12),
    combo_minus = tilde_rho - 1/rho = -(gamma_-/gamma_+)/(s22 s21),

which replace the exponentially unstable direct formulas on the cut
segments where one Jost family decays.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .branch import BoundaryData, Regime, PRINCIPAL, gam, lam, emat
from .constants import (K_SEARCH_FACTOR, RHO_DENOM_FLOOR, RHO_INV_FLOOR,
                        ROOT_TOL, X_MATCH)
from .jost import PotentialProfile, jost_columns

_STAB_TOL = 1e-12


class DenominatorVanished(ArithmeticError):
    pass


class UnstableEntry(ValueError):
    pass


def _wr(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def column_stability(bd: BoundaryData, k, side_m=PRINCIPAL, side_p=PRINCIPAL):
    """Boolean stability masks (m1, m2, p1, p2) for the four Jost columns."""
    im_m = np.imag(lam(np.atleast_1d(k), bd.q_minus, bd.regime, side_m))
    im_p = np.imag(lam(np.atleast_1d(k), bd.q_plus, bd.regime, side_p))
    tol = _STAB_TOL
    return (im_m >= -tol, im_m <= tol, im_p <= tol, im_p >= -tol)


def scattering_entries(profile: PotentialProfile, ks, side_m=PRINCIPAL,
                       side_p=PRINCIPAL, keys: Sequence[str] = ("s11",),
                       strict: bool = True, step: float | None = None,
                       x_match: float = X_MATCH) -> dict:
    """Evaluate requested scattering quantities at the points ks.

    keys: subset of s11, s12, s21, s22, rho, rho_inv, rho_tilde,
    rho_product, combo_plus, combo_minus, gamma_ratio.  Raises UnstableEntry when a
    requested quantity needs a column that decays in its integration
    direction (strict=True), else fills NaN.
    """
    bd = profile.bd
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    st_m1, st_m2, st_p1, st_p2 = column_stability(bd, ks, side_m, side_p)

    need = set(keys)
    if need & {"rho", "rho_inv", "rho_product"}:
        need |= {"s11", "s21"}
    if "rho_tilde" in need or "rho_product" in need:
        need |= {"s12", "s22"}
    if "combo_plus" in need:
        need |= {"s11", "s12"}
    if "combo_minus" in need:
        need |= {"s21", "s22"}

    need_m = [c for c, key in ((0, {"s11", "s21"}), (1, {"s12", "s22"}))
              if need & key]
    need_p = [c for c, key in ((0, {"s21", "s22"}), (1, {"s11", "s12"}))
              if need & key]

    stab = {"s11": st_m1 & st_p2, "s12": st_m2 & st_p2,
            "s21": st_p1 & st_m1, "s22": st_p1 & st_m2}
    if strict:
        for name in sorted(need & set(stab)):
            if not stab[name].all():
                bad = ks[~stab[name]][:3]
                raise UnstableEntry(
                    f"{name} requires an unstable Jost column at k={bad}")

    mu_m = jost_columns(profile, ks, "minus", side_m, columns=tuple(need_m),
                        x_record=[x_match], step=step)[x_match] \
        if need_m else None
    mu_p = jost_columns(profile, ks, "plus", side_p, columns=tuple(need_p),
                        x_record=[x_match], step=step)[x_match] \
        if need_p else None
    col_m = {c: i for i, c in enumerate(need_m)}
    col_p = {c: i for i, c in enumerate(need_p)}

    lmm = lam(ks, bd.q_minus, bd.regime, side_m)
    lmp = lam(ks, bd.q_plus, bd.regime, side_p)
    gp = gam(ks, bd.q_plus, bd.regime, side_p)
    gm = gam(ks, bd.q_minus, bd.regime, side_m)
    gratio = gm / gp

    # phi columns at x_match (phases restore the e^{+-i lambda x} factors)
    def phi(mu, cmap, lm, col):
        ph = np.exp((-1 if col == 0 else 1) * 1j * lm * x_match)
        return mu[:, :, cmap[col]] * ph[:, None]

    out = {}
    vals = {}
    if "s11" in need:
        vals["s11"] = _wr(phi(mu_m, col_m, lmm, 0),
                          phi(mu_p, col_p, lmp, 1)) / gp
    if "s12" in need:
        vals["s12"] = _wr(phi(mu_m, col_m, lmm, 1),
                          phi(mu_p, col_p, lmp, 1)) / gp
    if "s21" in need:
        vals["s21"] = _wr(phi(mu_p, col_p, lmp, 0),
                          phi(mu_m, col_m, lmm, 0)) / gp
    if "s22" in need:
        vals["s22"] = _wr(phi(mu_p, col_p, lmp, 0),
                          phi(mu_m, col_m, lmm, 1)) / gp
    for name, v in vals.items():
        vals[name] = np.where(stab[name], v, np.nan + 0j)

    def safe_div(a, b, what):
        if np.any(np.abs(b) < RHO_DENOM_FLOOR):
            raise DenominatorVanished(f"|{what}| below floor {RHO_DENOM_FLOOR}")
        return a / b

    for key in keys:
        if key in ("s11", "s12", "s21", "s22"):
            out[key] = vals[key]
        elif key == "rho":
            out[key] = safe_div(vals["s21"], vals["s11"], "s11")
        elif key == "rho_inv":
            out[key] = safe_div(vals["s11"], vals["s21"], "s21")
        elif key == "rho_tilde":
            out[key] = safe_div(vals["s12"], vals["s22"], "s22")
        elif key == "rho_product":
            out[key] = safe_div(vals["s21"] * vals["s12"],
                                vals["s11"] * vals["s22"], "s11 s22")
        elif key == "combo_plus":
            out[key] = -safe_div(gratio, vals["s11"] * vals["s12"], "s11 s12")
        elif key == "combo_minus":
            out[key] = -safe_div(gratio, vals["s22"] * vals["s21"], "s22 s21")
        elif key == "gamma_ratio":
            out[key] = gratio
        else:
            raise KeyError(key)
    return out


def s11_interior(profile: PotentialProfile, ks,
                 step: float | None = None) -> np.ndarray:
    """s11 off the contour where its defining columns are stable:
    the upper half plane (focusing) or the full analyticity domain
    (defocusing: upper plane, lower plane and the real spectral gap)."""
    return scattering_entries(profile, ks, keys=("s11",), step=step)["s11"]


def s22_interior(profile: PotentialProfile, ks,
                 step: float | None = None) -> np.ndarray:
    return scattering_entries(profile, ks, keys=("s22",), step=step)["s22"]


# --------------------------- data containers ------------------------------

@dataclass
class SegmentSamples:
    """Scattering quantities sampled on one contour segment."""
    label: str
    k: np.ndarray
    side_m: int
    side_p: int
    data: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class DiscreteEigen:
    """Discrete eigenvalue with norming constant.

    focusing: k in C^+ (zero of s11) with conjugate partner handled by the
    solver; C is the residue coefficient C = b / s11'(k), with
    phi_-1(k) = b phi_+2(k).  C_conj belongs to the conjugate zero of s22.
    defocusing: k real in the spectral gap, C real.
    """
    k: complex
    C: complex
    C_conj: complex | None = None


@dataclass
class ScatteringData:
    bd: BoundaryData
    t: float
    segments: dict[str, SegmentSamples]
    discrete: list[DiscreteEigen]
    meta: dict = field(default_factory=dict)

    # ---- JSON round trip ----
    def to_json(self) -> str:
        def cplx(z):
            z = complex(z)
            return [z.real, z.imag]

        def arr(a):
            a = np.asarray(a)
            return [[float(np.real(v)), float(np.imag(v))] for v in a.ravel()]

        obj = {
            "bd": {"q_minus": self.bd.q_minus, "q_plus": self.bd.q_plus,
                   "regime": self.bd.regime.value},
            "t": self.t,
            "segments": {
                lab: {"label": s.label, "side_m": s.side_m, "side_p": s.side_p,
                      "k": arr(s.k),
                      "data": {key: arr(v) for key, v in s.data.items()}}
                for lab, s in self.segments.items()},
            "discrete": [{"k": cplx(d.k), "C": cplx(d.C),
                          "C_conj": None if d.C_conj is None else cplx(d.C_conj)}
                         for d in self.discrete],
            "meta": self.meta,
        }
        return json.dumps(obj, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ScatteringData":
        obj = json.loads(text)

        def arr(a):
            return np.array([complex(re, im) for re, im in a])

        bd = BoundaryData(obj["bd"]["q_minus"], obj["bd"]["q_plus"],
                          Regime(obj["bd"]["regime"]))
        segs = {
            lab: SegmentSamples(
                label=s["label"], k=arr(s["k"]), side_m=s["side_m"],
                side_p=s["side_p"],
                data={key: arr(v) for key, v in s["data"].items()})
            for lab, s in obj["segments"].items()}
        disc = [DiscreteEigen(
            k=complex(*d["k"]), C=complex(*d["C"]),
            C_conj=None if d["C_conj"] is None else complex(*d["C_conj"]))
            for d in obj["discrete"]]
        return cls(bd=bd, t=obj["t"], segments=segs, discrete=disc,
                   meta=obj.get("meta", {}))


def compute_scattering(profile: PotentialProfile, requests,
                       t: float = 0.0, step: float | None = None,
                       find_spectrum: bool = True,
                       meta: dict | None = None) -> ScatteringData:
    """Build ScatteringData from a list of segment requests
    (label, k_array, side_m, side_p, keys)."""
    segs = {}
    for label, ks, sm, sp, keys in requests:
        data = scattering_entries(profile, ks, sm, sp, keys=keys, step=step)
        segs[label] = SegmentSamples(label=label, k=np.asarray(ks, complex),
                                     side_m=sm, side_p=sp, data=data)
    disc = find_discrete_spectrum(profile, step=step) if find_spectrum else []
    return ScatteringData(bd=profile.bd, t=t, segments=segs, discrete=disc,
                          meta=meta or {})


# --------------------------- discrete spectrum ----------------------------

def _newton_zero(fun, k0, tol=ROOT_TOL, maxit=40, dk=1e-6):
    k = complex(k0)
    for _ in range(maxit):
        f = fun(k)
        fp = (fun(k + dk) - fun(k - dk)) / (2 * dk)
        if abs(fp) == 0:
            break
        knew = k - f / fp
        if abs(knew - k) < tol:
            return knew, abs(fun(knew))
        k = knew
    return k, abs(fun(k))


def find_discrete_spectrum(profile: PotentialProfile,
                           step: float | None = None,
                           n_scan: int = 48) -> list[DiscreteEigen]:
    """Locate zeros of s11 in its analyticity domain and compute norming
    constants.  Coarse |s11| grid scan over the search box, Newton-refined;
    conjugate norming constants come from the independent s22 problem.
    """
    bd = profile.bd
    box = K_SEARCH_FACTOR * max(bd.q_minus, bd.q_plus)

    def f11(k):
        return complex(s11_interior(profile, [k], step=step)[0])

    roots: list[complex] = []
    if bd.regime is Regime.FOCUSING:
        # upper half plane, keep a margin away from the vertical cut and
        # the real axis; imaginary-axis zeros are found through the margin
        # columns by Newton (s11 extends continuously to each cut side).
        xs = np.linspace(-box, box, n_scan)
        ys = np.linspace(0.03 * bd.q_minus, box, n_scan // 2)
        KX, KY = np.meshgrid(xs, ys)
        KK = (KX + 1j * KY).ravel()
        KK = KK[np.abs(KK.real) > 0.02 * bd.q_minus]
        vals = np.abs(s11_interior(profile, KK, step=step))
        order = np.argsort(vals)
        for idx in order[:12]:
            if vals[idx] > 0.3:
                break
            k, res = _newton_zero(f11, KK[idx])
            if res < 1e-8 and k.imag > 1e-6 and \
                    not any(abs(k - r) < 1e-6 for r in roots):
                roots.append(k)
    else:
        # real spectral gap (-q_+, q_+); s11 is analytic there
        qgap = min(bd.q_plus, bd.q_minus)
        xs = np.linspace(-qgap + 1e-4, qgap - 1e-4, 4 * n_scan)
        vals = np.abs(s11_interior(profile, xs + 0j, step=step))
        sign_change = np.where(np.diff(np.sign(
            np.real(s11_interior(profile, xs + 0j, step=step)))) != 0)[0]
        cands = list(xs[sign_change]) + [xs[int(np.argmin(vals))]]
        for k0 in cands:
            k, res = _newton_zero(f11, complex(k0))
            if res < 1e-8 and abs(k.imag) < 1e-8 and abs(k.real) < qgap and \
                    not any(abs(k - r) < 1e-6 for r in roots):
                roots.append(complex(k.real))

    out = []
    for k in sorted(roots, key=lambda z: (z.real, z.imag)):
        out.append(_norming_constant(profile, k, step=step))
    return out


def _norming_constant(profile: PotentialProfile, k: complex,
                      step: float | None = None) -> DiscreteEigen:
    bd = profile.bd
    xm = X_MATCH

    def cols(kk, family):
        return jost_columns(profile, [kk], family, PRINCIPAL,
                            x_record=[xm], step=step)[xm][0]

    # b: phi_-1(k) = b phi_+2(k); at x_m the mu phases are
    # phi_-1 = mu_-1 e^{-i lam_- x}, phi_+2 = mu_+2 e^{+i lam_+ x}
    lmm = lam(k, bd.q_minus, bd.regime)
    lmp = lam(k, bd.q_plus, bd.regime)
    v1 = cols(k, "minus")[:, 0] * np.exp(-1j * lmm * xm)
    v2 = cols(k, "plus")[:, 1] * np.exp(1j * lmp * xm)
    b = (np.vdot(v2, v1)) / (np.vdot(v2, v2))

    dk = 1e-5
    ds11 = (s11_interior(profile, [k + dk], step=step)[0]
            - s11_interior(profile, [k - dk], step=step)[0]) / (2 * dk)
    C = b / ds11

    C_conj = None
    if bd.regime is Regime.FOCUSING:
        kc = np.conj(k)
        lmmc = lam(kc, bd.q_minus, bd.regime)
        lmpc = lam(kc, bd.q_plus, bd.regime)
        w1 = cols(kc, "minus")[:, 1] * np.exp(1j * lmmc * xm)
        w2 = cols(kc, "plus")[:, 0] * np.exp(-1j * lmpc * xm)
        bt = (np.vdot(w2, w1)) / (np.vdot(w2, w2))
        ds22 = (s22_interior(profile, [kc + dk], step=step)[0]
                - s22_interior(profile, [kc - dk], step=step)[0]) / (2 * dk)
        C_conj = bt / ds22
    return DiscreteEigen(k=k, C=complex(C),
                         C_conj=None if C_conj is None else complex(C_conj))
