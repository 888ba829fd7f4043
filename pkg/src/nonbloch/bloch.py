"""Bloch points: where the GBZ meets the unit circle.

Candidates come from the sampled contour (sign changes of |beta| - 1 and near
touches).  Each candidate is then refined on the exact equations rather than
on the interpolated contour: two unit-circle factors e^{ik1}, e^{ik2} with the
same energy solve the divided difference

    (P(x) - P(y)) / (x - y) = 0,   x = e^{ik1}, y = e^{ik2},

and a tangency (k1 = k2) reduces to P'(e^{ik}) = 0.  Working on the unit
circle makes |beta_B| = 1 exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    ClassificationError,
    DegenerateContourError,
    NoPeriodError,
    NoRealBlochPointError,
    UnsupportedModelError,
)
from .gbz import GBZContour, contour_derivative
from .model import (
    LaurentPolynomial,
    Model,
    build_chain,
    characteristic_coeffs,
    divided_difference,
    eval_laurent,
    wrap_angle,
)
from .spectral import obc_spectrum, poly_roots, sort_roots

MAX_ORDER = 4


@dataclass(frozen=True)
class BlochPoint:
    theta: float
    beta: complex
    energy: complex
    l: int | None  # noqa: E741 - saddle order
    j: int | None
    slope: float
    crossing: bool
    cusp: bool
    side: str = "central"
    source: str = "numerical"

    @property
    def kind(self) -> str:
        return "crossing" if self.crossing else "touching"


# -- closed form for three-term single-band chains ------------------------------

def closed_form_bloch(t_m2: float, t_m1: float, t_1: float):
    """theta_B = +/- arccos((t1 - t-1) / (2 t-2)), E_B = (t1^2 - t-2^2 - t1 t-1) / t-2.

    The pair e^{+/- i theta_B} always shares the energy E_B; the third root
    then has modulus |t-2 / t1|, so the pair lies on the GBZ only when
    |t-2| <= |t1|.
    """
    if t_m2 == 0:
        raise NoRealBlochPointError("t_-2 must be nonzero")
    x = (t_1 - t_m1) / (2 * t_m2)
    if abs(x) > 1:
        raise NoRealBlochPointError(f"(t1 - t-1)/(2 t-2) = {x:.6g} lies outside [-1, 1]")
    theta = math.acos(x)
    energy = (t_1**2 - t_m2**2 - t_1 * t_m1) / t_m2
    return (theta, -theta), energy


# -- exact refinement ----------------------------------------------------------

def _refine_pair(poly, k1, k2):
    def resid(v):
        g = divided_difference(poly, np.exp(1j * v[0]), np.exp(1j * v[1]))
        return [g.real, g.imag]

    sol = least_squares(resid, [k1, k2], xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    return sol.x


def _refine_tangent(poly, k):
    dp = poly.derivative(1)

    def resid(v):
        b = np.exp(1j * v[0])
        g = eval_laurent(dp, b)
        return [g.real, g.imag]

    sol = least_squares(resid, [k], xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    return float(sol.x[0])


def _on_gbz(model: Model, beta: complex, tol: float = 1e-4) -> bool:
    """Ranks p and p+1 of the characteristic roots lie on |beta| = 1."""
    E = model.energy(beta)
    mods = np.sort(np.abs(poly_roots(characteristic_coeffs(model, E))))
    p = model.p
    return abs(mods[p - 1] - 1) < tol and abs(mods[p] - 1) < tol


def _candidates(c: GBZContour, coarse: float):
    dev = c.modulus - 1
    n = len(dev)
    idx = set()
    s = np.sign(dev)
    for i in range(n):
        if s[i] != 0 and s[(i + 1) % n] != 0 and s[i] != s[(i + 1) % n]:
            idx.add(i if abs(dev[i]) < abs(dev[(i + 1) % n]) else (i + 1) % n)
    a = np.abs(dev)
    for i in range(n):
        if a[i] < coarse and all(a[i] <= a[(i + k) % n] for k in (-2, -1, 1, 2)):
            idx.add(i)
    return sorted(idx)


def _sign_change_near(c: GBZContour, theta: float, width: float = 0.02) -> bool:
    dt = np.abs(wrap_angle(c.theta - theta))
    near = c.modulus[dt < width] - 1
    big = near[np.abs(near) > 1e-9]
    return bool(len(big)) and big.min() < 0 < big.max()


def find_bloch_points(
    model: Model,
    c: GBZContour,
    classify: bool = True,
    coarse: float = 1e-2,
    side_L: int = 100,
) -> list[BlochPoint]:
    """All intersections of the contour with the unit circle, refined and classified."""
    if np.max(np.abs(c.modulus - 1)) < 1e-8:
        raise DegenerateContourError(f"GBZ of {model.name!r} is the unit circle (kappa = 0)")
    poly = model.energy_poly
    found: list[tuple[float, complex]] = []
    for i in _candidates(c, coarse):
        k1 = float(c.theta[i])
        k2 = float(np.angle(c.partner[i]))
        if abs(wrap_angle(k1 - k2)) < 1e-3:
            k = _refine_tangent(poly, k1)
            k1 = k2 = k
        else:
            k1, k2 = _refine_pair(poly, k1, k2)
            if abs(wrap_angle(k1 - k2)) < 1e-3:
                k1 = k2 = _refine_tangent(poly, float(np.angle(np.exp(1j * k1) + np.exp(1j * k2))))
        if abs(wrap_angle(k1 - c.theta[i])) > 0.05:
            continue
        for k in {round(float(wrap_angle(k1)), 12), round(float(wrap_angle(k2)), 12)}:
            beta = complex(np.exp(1j * k))
            if not _on_gbz(model, beta):
                continue
            if any(abs(wrap_angle(k - t)) < 1e-6 for t, _ in found):
                continue
            if min(np.abs(wrap_angle(c.theta - k))) > 0.05:
                continue
            found.append((k, beta))
    points = []
    for k, beta in sorted(found):
        energy = _bloch_energy(model, beta)
        crossing = _sign_change_near(c, k)
        points.append(
            BlochPoint(float(k), beta, energy, None, None, 0.0, crossing, False)
        )
    if classify:
        points = [classify_point(model, c, bp, side_L=side_L) for bp in points]
    return points


def _bloch_energy(model: Model, beta: complex) -> complex:
    E = complex(model.energy(beta))
    if model.bands == 2 and (E.real < 0 or (E.real == 0 and E.imag < 0)):
        E = -E
    return E


def classify_point(model: Model, c: GBZContour, bp: BlochPoint, side_L: int = 100) -> BlochPoint:
    """Fill saddle order, kappa order, slope, cusp flag and approach side."""
    left = contour_derivative(c, bp.theta, 1, "left")
    right = contour_derivative(c, bp.theta, 1, "right")
    scale = 1 + float(np.mean(np.abs(np.diff(c.modulus) / np.maximum(np.diff(c.theta), 1e-12))))
    cusp = abs(left - right) > 0.05 * scale
    if cusp:
        slope = max(abs(left), abs(right))
        side = approach_side(model, bp, side_L)
    else:
        slope = abs(contour_derivative(c, bp.theta, 1, "central"))
        side = "central"
    beta, l = _saddle_order_refined(model, bp.beta, bp.energy)
    j = kappa_order(c, bp.theta, side)
    return replace(bp, beta=beta, l=l, j=j, slope=slope, cusp=cusp, side=side)


def approach_side(model: Model, bp: BlochPoint, L: int = 100) -> str:
    """Side of theta_B from which the nearest finite-size level's beta approaches."""
    from .scaling import select_level  # local: scaling imports this module

    m = build_chain(model, L, "open")
    spec = obc_spectrum(m, kappa_window=(0.0, 0.0))
    choice = select_level(spec, bp.energy, "nearest-complex", model=model, skip_coincident=True)
    roots = sort_roots(poly_roots(characteristic_coeffs(model, choice.energy)))
    pair = roots[model.p - 1:model.p + 1]
    nearest = pair[np.argmin(np.abs(pair - bp.beta))]
    return "left" if wrap_angle(np.angle(nearest) - bp.theta) < 0 else "right"


# -- order classification ----------------------------------------------------------

def _thresholds(poly: LaurentPolynomial, rel: float):
    return [rel * sum(abs(d) ** n * abs(c) for d, c in poly.terms) for n in range(MAX_ORDER + 2)]


def _saddle_order_refined(model: Model, beta: complex, energy: complex | None = None):
    if model.bands == 2:
        E = energy if energy is not None else _bloch_energy(model, beta)
        if abs(E) <= 1e-6:
            raise UnsupportedModelError("zero-energy two-band Bloch point: order transfer undefined")
    poly = model.energy_poly
    strict = _thresholds(poly, 1e-8)
    loose = _thresholds(poly, 1e-5)
    derivs = [poly.derivative(n) for n in range(MAX_ORDER + 2)]
    b = complex(beta)
    for n in range(1, MAX_ORDER + 1):
        val = abs(eval_laurent(derivs[n], b))
        if val > loose[n]:
            break
        # derivative nearly vanishes: polish beta as a zero of it, keep it only if
        # the move is small and the lower derivatives stay small
        cand = b
        for _ in range(30):
            f = eval_laurent(derivs[n], cand)
            df = eval_laurent(derivs[n + 1], cand)
            if df == 0:
                break
            step = f / df
            cand -= step
            if abs(step) < 1e-16:
                break
        cand /= abs(cand)
        if abs(cand - b) < 1e-4 and all(
            abs(eval_laurent(derivs[m], cand)) <= abs(eval_laurent(derivs[m], b)) + strict[m]
            for m in range(1, n + 1)
        ):
            b = cand
    for n in range(1, MAX_ORDER + 1):
        if abs(eval_laurent(derivs[n], b)) > strict[n]:
            return b, n
    raise ClassificationError(f"all derivatives up to order {MAX_ORDER} vanish at beta={b}")


def saddle_order(model: Model, beta_B: complex) -> int:
    """Smallest l with a nonvanishing l-th beta-derivative of the energy polynomial."""
    if abs(abs(beta_B) - 1) > 1e-6:
        raise ValueError("saddle_order expects a unit-modulus beta")
    return _saddle_order_refined(model, beta_B)[1]


def kappa_order(c: GBZContour, theta_B: float, side: str = "central", rel: float = 1e-3) -> int:
    """Smallest j with a nonvanishing j-th theta-derivative of kappa at theta_B."""
    span = float(np.ptp(c.kappa))
    if span == 0:
        raise ClassificationError("kappa is constant on the contour")
    thr = rel * span
    for n in range(1, MAX_ORDER + 1):
        if abs(contour_derivative(c, theta_B, n, side, quantity="kappa")) > thr:
            return n
    raise ClassificationError(f"kappa derivatives up to order {MAX_ORDER} vanish at theta={theta_B:.6f}")


# -- periodicity -----------------------------------------------------------------

@dataclass(frozen=True)
class IntersectionPeriod:
    delta_theta: float
    period: int | None  # None when 2 pi / delta_theta is not an integer
    ratio: float


def bz_intersection_period(points, pair: tuple[float, float] | None = None) -> IntersectionPeriod:
    """Period 2 pi / delta_theta from the arguments of two unit-circle intersections.

    With more than two intersections at one energy, pairs mirrored through the
    real axis (theta, -theta) are preferred, then the closest pair.  `pair`
    overrides the choice with two explicit angles.
    """
    if pair is None:
        thetas = [p.theta for p in points]
        if not thetas:
            raise NoPeriodError("no GBZ/BZ intersections")
        if len(thetas) == 1:
            return IntersectionPeriod(0.0, 1, 1.0)
        groups: dict[complex, list[float]] = {}
        for p in points:
            key = next((g for g in groups if abs(g - p.energy) < 1e-6 * (1 + abs(g))), p.energy)
            groups.setdefault(key, []).append(p.theta)
        best = max(groups.values(), key=len)
        if len(best) == 1:
            return IntersectionPeriod(0.0, 1, 1.0)
        delta = _pick_delta(best)
    else:
        delta = abs(wrap_angle(pair[0] - pair[1]))
    if delta < 1e-9:
        return IntersectionPeriod(0.0, 1, 1.0)
    ratio = 2 * math.pi / delta
    period = int(round(ratio)) if abs(ratio - round(ratio)) < 1e-6 else None
    return IntersectionPeriod(delta, period, ratio)


def _pick_delta(thetas: list[float]) -> float:
    mirrored = [
        abs(wrap_angle(a - b))
        for i, a in enumerate(thetas)
        for b in thetas[i + 1:]
        if abs(wrap_angle(a + b)) < 1e-6
    ]
    if mirrored:
        return min(mirrored)
    return min(abs(wrap_angle(a - b)) for i, a in enumerate(thetas) for b in thetas[i + 1:])


def period_fraction(delta_theta: float, max_den: int = 12) -> Fraction:
    return Fraction(2 * math.pi / delta_theta).limit_denominator(max_den)
