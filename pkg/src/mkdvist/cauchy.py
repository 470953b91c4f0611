"""Panel-based Cauchy/Plemelj quadrature.

Gauss-Legendre panels with exact (singularity-subtracted) evaluation of

    (C eta)(z) = (1/2 pi i) int_panel eta(zeta)/(zeta - z) dzeta

for targets anywhere: far from the panel (plain Gauss), close to it
(subtraction with the exact polynomial log-moment), or on it (principal
value via the nodal differentiation matrix).  Each evaluation returns a row
of coefficients c_j so that (C eta)(z) ~ sum_j c_j eta(t_j); the rows are
exact for polynomial densities of the panel's degree.

Plemelj boundary values on the contour: C_minus = PV - eta/2 on the side
lying to the right of the direction of travel a -> b, C_plus = PV + eta/2
on the left.
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

_RULE_CACHE: dict[int, tuple] = {}


def gl_rule(n: int):
    """Gauss-Legendre nodes/weights plus barycentric weights and the
    spectral differentiation matrix on those nodes."""
    if n in _RULE_CACHE:
        return _RULE_CACHE[n]
    t, w = leggauss(n)
    bw = np.array([1.0 / np.prod(t[j] - np.delete(t, j)) for j in range(n)])
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bw[j] / bw[i]) / (t[i] - t[j])
        D[i, i] = -np.sum(D[i, np.arange(n) != i])
    _RULE_CACHE[n] = (t, w, bw, D)
    return _RULE_CACHE[n]


class Panel:
    """Straight panel from a to b carrying an n-point Gauss-Legendre rule.

    Orientation is the storage order (a -> b); all Cauchy rows inherit it.
    """

    __slots__ = ("a", "b", "m", "r", "t", "w", "bw", "D", "n", "nodes",
                 "label")

    def __init__(self, a, b, n, label=""):
        self.a, self.b = complex(a), complex(b)
        self.m = 0.5 * (self.a + self.b)
        self.r = 0.5 * (self.b - self.a)
        self.t, self.w, self.bw, self.D = gl_rule(n)
        self.n = n
        self.nodes = self.m + self.r * self.t
        self.label = label

    @property
    def weights(self):
        """Complex quadrature weights d zeta = w * r."""
        return self.w * self.r


def cauchy_row(panel: Panel, z, own_node: int | None = None):
    """Coefficient row for (C eta)(z) against the panel's nodal values.

    own_node=i marks z as panel node i and returns the principal value.
    For z elsewhere the row is the one-sided-limit-free Cauchy value (off
    contour) or the PV (if z happens to lie on the open panel, use
    pv_row instead for clarity).
    """
    t, w, bw, D, n = panel.t, panel.w, panel.bw, panel.D, panel.n
    if own_node is not None:
        i = own_node
        s = t[i]
        row = np.zeros(n, dtype=complex)
        mask = np.arange(n) != i
        row[mask] = w[mask] / (t[mask] - s)
        row += w[i] * D[i, :]
        row[i] += np.log((1.0 - s) / (1.0 + s)) - np.sum(w[mask] / (t[mask] - s))
        return row / (2j * np.pi)
    zz = (z - panel.m) / panel.r
    d = abs(zz.imag) if abs(zz.real) <= 1 else min(abs(zz - 1), abs(zz + 1))
    if d > 1.0:
        return (w / (t - zz)) / (2j * np.pi)
    L = np.log(1.0 - zz) - np.log(-1.0 - zz)
    g = w / (t - zz)
    diff = zz - t
    ell = bw / diff
    ell = ell / np.sum(ell)
    return (g + ell * (L - np.sum(g))) / (2j * np.pi)


def cauchy_rows(panel: Panel, zs):
    """Vectorized cauchy_row for many targets off the panel: (nz, n) rows."""
    t, w, bw, n = panel.t, panel.w, panel.bw, panel.n
    zz = (np.asarray(zs, dtype=complex) - panel.m) / panel.r
    d = np.where(np.abs(zz.real) <= 1, np.abs(zz.imag),
                 np.minimum(np.abs(zz - 1), np.abs(zz + 1)))
    g = w[None, :] / (t[None, :] - zz[:, None])
    far = g / (2j * np.pi)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        L = np.log(1.0 - zz) - np.log(-1.0 - zz)
        ell = bw[None, :] / (zz[:, None] - t[None, :])
        ell = ell / np.sum(ell, axis=1)[:, None]
        near = (g + ell * (L - np.sum(g, axis=1))[:, None]) / (2j * np.pi)
    return np.where((d > 1.0)[:, None], far, near)


def pv_row(panel: Panel, z):
    """Principal-value row at an arbitrary point z on the open panel."""
    s = complex((z - panel.m) / panel.r).real
    g = panel.w / (panel.t - s)
    ell = panel.bw / (s - panel.t)
    ell = ell / np.sum(ell)
    L = np.log((1.0 - s) / (1.0 + s))
    return (g + ell * (L - np.sum(g))) / (2j * np.pi)


class MappedPanel:
    """Quadratically-mapped panel resolving a square-root branch point.

    zeta(v) = p0 + dirc v^2 with v in [va, vb], 0 <= va < vb <= 1; the
    branch point sits at v = 0 (zeta = p0) and the densities of interest
    are analytic in v.  The exact kernel split

        zeta'(v) / (zeta(v) - z) = 1/(v - w) + 1/(v + w),
        w = sqrt((z - p0)/dirc),

    reduces every Cauchy row to two straight-panel rows in the v variable,
    so the machinery above applies unchanged.  sign = +1 when the contour
    runs away from the branch point, -1 when it runs toward it.
    """

    __slots__ = ("p0", "dirc", "sign", "vp", "n", "nodes", "label")

    def __init__(self, p0, dirc, va, vb, n, sign=1, label=""):
        self.p0, self.dirc, self.sign = complex(p0), complex(dirc), sign
        self.vp = Panel(va, vb, n)
        self.n = n
        v = self.vp.nodes.real
        self.nodes = self.p0 + self.dirc * v * v
        self.label = label

    @property
    def weights(self):
        """Complex quadrature weights d zeta = 2 dirc v dv (with sign)."""
        v = self.vp.nodes.real
        return self.sign * 2.0 * self.dirc * v * self.vp.weights

    def w_of(self, zs):
        return np.sqrt((np.asarray(zs, dtype=complex) - self.p0) / self.dirc)

    def rows(self, zs):
        w = self.w_of(zs)
        return self.sign * (cauchy_rows(self.vp, w)
                            + cauchy_rows(self.vp, -w))

    def own_row(self, i):
        vi = self.vp.nodes[i].real
        return self.sign * (cauchy_row(self.vp, None, own_node=i)
                            + cauchy_row(self.vp, -vi))

    def pv_at_v(self, v0):
        """PV row at the on-panel point with parameter v0 in (va, vb)."""
        return self.sign * (pv_row(self.vp, v0) + cauchy_row(self.vp, -v0))


def panel_rows(panel, zs):
    """Cauchy rows at off-panel targets for straight or mapped panels."""
    if isinstance(panel, MappedPanel):
        return panel.rows(zs)
    return cauchy_rows(panel, zs)


def panel_own_row(panel, i):
    """Principal-value row at the panel's own node i."""
    if isinstance(panel, MappedPanel):
        return panel.own_row(i)
    return cauchy_row(panel, None, own_node=i)


def chebyshev_points(a: float, b: float, n: int):
    """Chebyshev (second-kind) points on [a, b], endpoints included."""
    th = np.linspace(np.pi, 0.0, n)
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos(th)


def barycentric_interp(x_nodes, f_nodes, x_eval):
    """Barycentric interpolation on Chebyshev second-kind nodes."""
    n = len(x_nodes)
    wts = np.ones(n)
    wts[1::2] = -1.0
    wts[0] *= 0.5
    wts[-1] *= 0.5
    x_eval = np.atleast_1d(x_eval)
    num = np.zeros(x_eval.shape, dtype=complex)
    den = np.zeros(x_eval.shape, dtype=complex)
    exact = np.full(x_eval.shape, -1, dtype=int)
    for j in range(n):
        diff = x_eval - x_nodes[j]
        hit = np.abs(diff) < 1e-14 * (1 + np.abs(x_nodes[j]))
        exact[hit] = j
        with np.errstate(divide="ignore", invalid="ignore"):
            c = wts[j] / diff
        num += np.where(hit, 0.0, c) * f_nodes[j]
        den += np.where(hit, 0.0, c)
    out = num / den
    hitmask = exact >= 0
    if hitmask.any():
        out[hitmask] = np.asarray(f_nodes)[exact[hitmask]]
    return out
