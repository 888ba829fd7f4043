"""Generalized Brillouin zone: construction, parametrization and geometry.

Two independent constructions are provided.  `gbz_sweep` works in the
thermodynamic limit: for each phase phi it solves P(beta) = P(beta e^{i phi})
and keeps the roots whose pair {beta, beta e^{i phi}} is exactly the
middle-ranked pair of the characteristic roots at that energy.
`gbz_finite_size` diagonalizes an open chain and reports the middle pair at
every eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import least_squares

from .errors import (
    ConstructionError,
    MultivaluedContourError,
    UnsupportedModelError,
    WindowError,
)
from .model import LaurentPolynomial, Model, build_chain, divided_difference, eval_laurent, wrap_angle
from .spectral import EigenSystem, batch_roots, obc_spectrum, sorted_betas

TWO_PI = 2 * math.pi


class GBZPoint(NamedTuple):
    theta: float
    modulus: float
    kappa: float
    energy: complex
    beta: complex
    partner: complex


@dataclass(frozen=True)
class GBZContour:
    theta: np.ndarray
    modulus: np.ndarray
    energy: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    partner: np.ndarray = field(repr=False)
    source: str = "sweep"
    model_name: str = ""
    poly: LaurentPolynomial | None = field(default=None, repr=False)

    @property
    def kappa(self) -> np.ndarray:
        return -np.log(self.modulus)

    def __len__(self):
        return len(self.theta)

    @property
    def points(self) -> list[GBZPoint]:
        return [
            GBZPoint(float(t), float(m), float(-math.log(m)), complex(e), complex(b), complex(p))
            for t, m, e, b, p in zip(self.theta, self.modulus, self.energy, self.beta, self.partner)
        ]

    def max_gap(self) -> float:
        d = np.diff(self.theta)
        wrap = self.theta[0] + TWO_PI - self.theta[-1]
        return float(max(d.max(initial=0.0), wrap))


class FiniteSizeDot(NamedTuple):
    energy: complex
    beta_lo: complex
    beta_hi: complex

    @property
    def midpoint(self) -> complex:
        return (self.beta_lo + self.beta_hi) / 2

    @property
    def kappa(self) -> float:
        return -(math.log(abs(self.beta_lo)) + math.log(abs(self.beta_hi))) / 2


# -- finite-size construction -------------------------------------------------

def edge_mode_mask(
    values: np.ndarray, scale: float, small: float = 1e-6, isolation: float = 10.0, max_modes: int = 4
) -> np.ndarray:
    """True for zero-energy levels isolated inside the bulk gap.

    Up to `max_modes` levels of smallest |E| are flagged when they sit at
    least `isolation` times closer to zero than the next level and that
    level is at least two bulk spacings from zero; levels below
    `small * scale` are always flagged.  Short chains have edge modes split
    far above any fixed absolute threshold, hence the relative test.
    """
    values = np.asarray(values)
    out = np.abs(values) < small * scale
    if len(values) < max_modes + 3:
        return out
    order = np.argsort(np.abs(values), kind="stable")
    mags = np.abs(values[order])
    for k in range(1, max_modes + 1):
        nxt = mags[k]
        if mags[k - 1] * isolation > nxt:
            continue
        bulk = np.sort_complex(values[order[k:]])
        nn = np.abs(np.diff(bulk))
        spacing = float(np.median(nn[nn > 0])) if np.any(nn > 0) else 0.0
        if nxt >= 2 * spacing:
            out[order[:k]] = True
            break
    return out


def gbz_finite_size(model: Model, L: int, spectrum: EigenSystem | None = None) -> list[FiniteSizeDot]:
    """Middle root pair at every open-chain eigenvalue (edge modes removed)."""
    m = build_chain(model, L, "open")
    if spectrum is None:
        spectrum = obc_spectrum(m)
    values = spectrum.values
    if model.bands == 2:
        values = values[~edge_mode_mask(values, np.linalg.norm(m.matrix))]
    p = model.p
    dots = []
    for E in values:
        lo, hi = sorted_betas(model, E).middle(p)
        dots.append(FiniteSizeDot(complex(E), lo, hi))
    return dots


def dot_distance(dots: list[FiniteSizeDot], c: GBZContour) -> float:
    """Largest distance from a finite-size middle root to the nearest contour sample.

    Both roots of every pair are tested; their average is not a GBZ point in
    general (a conjugate pair averages onto the real axis).
    """
    if not dots:
        return 0.0
    mid = np.array([d.beta_lo for d in dots] + [d.beta_hi for d in dots])
    return float(np.max(np.min(np.abs(mid[:, None] - c.beta[None, :]), axis=1)))


# -- thermodynamic-limit sweep -------------------------------------------------

def _middle_pair_ok(roots_sorted_mod, mod, p, rtol):
    below = np.sum(roots_sorted_mod < mod * (1 - rtol))
    upto = np.sum(roots_sorted_mod <= mod * (1 + rtol))
    return below <= p - 1 and upto >= p + 1


def gbz_sweep(model: Model, n_phi: int = 2048, rtol: float = 1e-6) -> GBZContour:
    """Thermodynamic-limit GBZ sampled through the phase-difference sweep."""
    if n_phi < 64:
        raise ValueError("n_phi must be >= 64")
    P = model.energy_poly
    if not P.is_bidirectional():
        raise UnsupportedModelError(f"model {model.name!r} has one-sided hopping")
    lo, hi = P.min_degree, P.max_degree
    coeffs = P.coeffs
    phis = (np.arange(n_phi) + 0.5) * TWO_PI / n_phi
    rows = np.zeros((n_phi, hi - lo + 1), dtype=complex)
    for d, c in coeffs.items():
        rows[:, hi - d] = c * (1 - np.exp(1j * d * phis))
    roots = batch_roots(rows)

    cand_beta = roots.ravel()
    cand_phi = np.repeat(phis, roots.shape[1])
    finite = np.isfinite(cand_beta) & (np.abs(cand_beta) > 1e-12)
    cand_beta, cand_phi = cand_beta[finite], cand_phi[finite]

    values = eval_laurent(P, cand_beta)
    char = np.zeros((len(values), hi - lo + 1), dtype=complex)
    for d, c in coeffs.items():
        char[:, hi - d] += c
    char[:, hi] -= values
    char_roots = batch_roots(char)
    char_mod = np.sort(np.abs(char_roots), axis=1)
    p = -lo
    mods = np.abs(cand_beta)
    ok = np.array([_middle_pair_ok(char_mod[i], mods[i], p, rtol) for i in range(len(mods))])
    if not ok.any():
        raise ConstructionError(f"sweep produced an empty contour for {model.name!r}")
    beta = cand_beta[ok]
    partner = beta * np.exp(1j * cand_phi[ok])
    val = values[ok]
    energy = val if model.bands == 1 else np.sqrt(val + 0j)
    return _assemble(beta, partner, energy, "sweep", model.name, P)


def _assemble(beta, partner, energy, source, name, poly=None) -> GBZContour:
    theta = wrap_angle(np.angle(beta))
    order = np.lexsort((np.abs(beta), theta))
    beta, partner, energy, theta = beta[order], partner[order], energy[order], theta[order]
    keep = np.ones(len(beta), dtype=bool)
    last = 0
    for i in range(1, len(beta)):
        if abs(beta[i] - beta[last]) < 1e-10 * (1 + abs(beta[i])):
            keep[i] = False
        else:
            last = i
    beta, partner, energy, theta = beta[keep], partner[keep], energy[keep], theta[keep]
    mod = np.abs(beta)
    _check_single_valued(theta, mod, name)
    c = GBZContour(theta, mod, energy, beta, partner, source, name, poly)
    if c.max_gap() > 0.25:
        raise ConstructionError(
            f"contour for {name!r} leaves a theta gap of {c.max_gap():.3f} rad (not closed)"
        )
    return c


def _check_single_valued(theta, mod, name):
    dt = np.diff(theta)
    dm = np.abs(np.diff(mod))
    if len(dt) < 8:
        return
    slope = dm / np.maximum(dt, 1e-15)
    typical = np.percentile(slope, 95) + 1e-9
    bad = (dm > 1e-2 * np.mean(mod)) & (slope > 1e3 * max(typical, 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise MultivaluedContourError(
            f"|beta(theta)| is multivalued near theta={theta[i]:.4f} for {name!r}"
        )


# -- parametrization ---------------------------------------------------------

def _periodic_pad(theta, y, n=8):
    t = np.concatenate([theta[-n:] - TWO_PI, theta, theta[:n] + TWO_PI])
    v = np.concatenate([y[-n:], y, y[:n]])
    return t, v


def contour_kappa(c: GBZContour, theta):
    """kappa(theta) by monotone cubic interpolation (exact at grid nodes).

    A scalar angle on a swept contour is refined on the pair equation
    P(r e^{i theta}) = P(r e^{i(theta + phi)}) from the nearest node, which
    keeps kinks (cusps) sharp; the interpolant is the fallback.
    """
    t, v = _periodic_pad(c.theta, c.kappa)
    f = PchipInterpolator(t, v)
    out = f(wrap_angle(theta))
    if np.ndim(out) != 0:
        return out
    r = _refine_modulus(c, float(theta))
    return float(out) if r is None else -math.log(r)


def _refine_modulus(c: GBZContour, theta: float) -> float | None:
    if c.poly is None:
        return None
    i = int(np.argmin(np.abs(wrap_angle(c.theta - theta))))
    r0 = float(c.modulus[i])
    phi0 = float(np.angle(c.partner[i] / c.beta[i]))
    if abs(phi0) < 1e-6:
        return None
    u = np.exp(1j * theta)

    def resid(x):
        g = divided_difference(c.poly, x[0] * u, x[0] * u * np.exp(1j * x[1]))
        return [g.real, g.imag]

    sol = least_squares(resid, [r0, phi0], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    r, phi = float(sol.x[0]), float(sol.x[1])
    scale = sum(abs(v) for _, v in c.poly.terms)
    if not sol.success or np.hypot(*sol.fun) > 1e-10 * scale or abs(r - r0) > 1e-2 * r0:
        return None
    if abs(np.exp(1j * phi) - 1) < 1e-6:
        return None
    return r


def contour_modulus(c: GBZContour, theta):
    t, v = _periodic_pad(c.theta, c.modulus)
    out = PchipInterpolator(t, v)(wrap_angle(theta))
    return float(out) if np.ndim(out) == 0 else out


def contour_derivative(
    c: GBZContour,
    theta: float,
    order: int = 1,
    side: str = "central",
    quantity: str = "modulus",
    window: int | None = None,
) -> float:
    """order-th theta-derivative of |beta(theta)| (or kappa) by a local least-squares fit.

    Polynomial degree order+2 over the `window` nearest nodes on the requested
    side (default 2*order+5).
    """
    if order not in (1, 2, 3, 4):
        raise ValueError("order must be 1..4")
    if side not in ("left", "right", "central"):
        raise ValueError(f"unknown side {side!r}")
    y = c.modulus if quantity == "modulus" else c.kappa
    n = window or 2 * order + 5
    if n < 2 * order + 5:
        raise WindowError(f"window {n} below minimum {2 * order + 5}")
    dt = wrap_angle(c.theta - theta)
    tiny = 1e-12
    if side == "left":
        sel = np.flatnonzero(dt <= tiny)
    elif side == "right":
        sel = np.flatnonzero(dt >= -tiny)
    else:
        sel = np.arange(len(dt))
    if len(sel) < n:
        raise WindowError(f"only {len(sel)} nodes available on the {side} side")
    sel = sel[np.argsort(np.abs(dt[sel]), kind="stable")[:n]]
    x = dt[sel]
    h = np.max(np.abs(x)) or 1.0
    coef = np.polynomial.polynomial.polyfit(x / h, y[sel], order + 2)
    return float(coef[order] * math.factorial(order) / h**order)


def detect_cusps(c: GBZContour, jump_tol: float = 0.05, window: int | None = None) -> list[float]:
    """Angles where left and right first derivatives of |beta(theta)| disagree."""
    n = window or 7
    left = np.empty(len(c))
    right = np.empty(len(c))
    for i, t in enumerate(c.theta):
        left[i] = contour_derivative(c, t, 1, "left", window=n)
        right[i] = contour_derivative(c, t, 1, "right", window=n)
    mean_slope = float(np.mean(np.abs(left + right) / 2))
    jump = np.abs(left - right)
    flagged = np.flatnonzero(jump > jump_tol * (1 + mean_slope))
    if len(flagged) == 0:
        return []
    # group runs of flagged nodes (cyclic) and keep the strongest of each
    groups = [[flagged[0]]]
    for i in flagged[1:]:
        if i - groups[-1][-1] <= n:
            groups[-1].append(i)
        else:
            groups.append([i])
    if len(groups) > 1 and groups[0][0] + len(c) - groups[-1][-1] <= n:
        groups[0] = groups.pop() + groups[0]
    return sorted(float(c.theta[g[int(np.argmax(jump[g]))]]) for g in groups)
