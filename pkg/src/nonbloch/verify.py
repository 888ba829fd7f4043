"""Independent cross-checks of the finite-chain spectrum.

Boundary-matrix oracle for cubic single-band chains
---------------------------------------------------
For H(beta) = sum_d t_d beta^d with degrees in [-p, q], p + q = 3, an
eigenvector of the open chain is psi_n = sum_j c_j beta_j^n over the three
roots of H(beta) = E, subject to psi_n = 0 at the p sites left of the chain
and the q sites right of it.  For p = 2, q = 1 those are n = -1, 0 and L + 1,
so E is an eigenvalue iff

    det [[beta_j^-1], [beta_j^0], [beta_j^(L+1)]] = 0.

The rows are derived from the vanishing-wavefunction conditions directly.
Dividing this determinant by the Vandermonde determinant of the roots leaves
the complete homogeneous symmetric polynomial h_L(beta_1, beta_2, beta_3),
which obeys h_k = e1 h_(k-1) - e2 h_(k-2) + e3 h_(k-3) in the elementary
symmetric functions of the roots.  The e's are read off the characteristic
polynomial and are affine in E, so h_L is a degree-L polynomial in E whose
roots are the whole open-chain spectrum.  Chains with p = 1, q = 2 are
mirrored (beta -> 1/beta) first; mirroring leaves the spectrum unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateRootError, DomainError, UnsupportedModelError
from .gbz import gbz_finite_size
from .model import (
    DisorderSpec,
    LaurentPolynomial,
    Model,
    SingleBandModel,
    bloch_energies,
    build_chain,
    characteristic_coeffs,
)
from .spectral import dense_eig, poly_roots


def _cubic_left_heavy(model: Model) -> SingleBandModel:
    if not isinstance(model, SingleBandModel):
        raise UnsupportedModelError("boundary-matrix oracle covers single-band models only")
    h = model.h
    if h.max_degree - h.min_degree != 3 or h.min_degree >= 0 or h.max_degree <= 0:
        raise UnsupportedModelError("boundary-matrix oracle needs a cubic bidirectional model")
    if h.min_degree == -2:
        return model
    mirrored = LaurentPolynomial({-d: c for d, c in h.terms})
    return SingleBandModel(mirrored, model.name)


def boundary_determinant(model: Model, E: complex, L: int) -> complex:
    """Normalized boundary determinant at trial energy E.

    The last row is scaled by the largest |beta|^(L+1) and the determinant by
    the product of row norms, so the value lies in [0, 1] in modulus and is
    insensitive to overflow.
    """
    if L < 4:
        raise DomainError("boundary determinant needs L >= 4")
    m = _cubic_left_heavy(model)
    beta = poly_roots(characteristic_coeffs(m, E))
    gaps = [abs(a - b) for i, a in enumerate(beta) for b in beta[i + 1:]]
    if min(gaps) < 1e-10 * (1 + max(abs(beta))):
        raise DegenerateRootError(f"repeated beta roots at E = {E}")
    bmax = float(np.max(np.abs(beta)))
    last = np.exp((L + 1) * (np.log(beta + 0j) - math.log(bmax)))
    rows = np.array([1 / beta, np.ones(3), last])
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return complex(np.linalg.det(rows))


def boundary_polynomial(model: Model, L: int) -> np.ndarray:
    """Coefficients in E (lowest degree first) of h_L(beta_1, beta_2, beta_3)."""
    m = _cubic_left_heavy(model)
    t = m.h.coeffs
    t1, t0, tm1, tm2 = t[1], t.get(0, 0), t.get(-1, 0), t[-2]
    # monic characteristic polynomial beta^3 - e1 beta^2 + e2 beta - e3
    e1 = np.array([-t0 / t1, 1 / t1])
    e2 = np.array([tm1 / t1])
    e3 = np.array([-tm2 / t1])
    h = [np.array([1.0 + 0j])]
    for k in range(1, L + 1):
        term = P.polymul(e1, h[k - 1])
        if k >= 2:
            term = P.polysub(term, P.polymul(e2, h[k - 2]))
        if k >= 3:
            term = P.polyadd(term, P.polymul(e3, h[k - 3]))
        h.append(term)
    return h[L]


def boundary_zeros(model: Model, L: int) -> np.ndarray:
    """All L open-chain eigenvalues as zeros of the boundary polynomial."""
    c = boundary_polynomial(model, L)
    return np.sort_complex(poly_roots(c[::-1]))


# -- periodic chain ----------------------------------------------------------

def pbc_consistency(model: Model, L: int, disorder: DisorderSpec | None = None) -> float:
    """Largest mismatch between the periodic-chain spectrum and the Bloch energies on the k-grid."""
    if disorder is not None:
        raise DomainError("periodic consistency needs a translation-invariant chain")
    if L < 8:
        raise DomainError("pbc_consistency needs L >= 8")
    eig = dense_eig(build_chain(model, L, "periodic")).values
    k = 2 * math.pi * np.arange(L) / L
    ref = np.concatenate([bloch_energies(model, kk) for kk in k])
    cost = np.abs(eig[:, None] - ref[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def matched_distance(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) != len(b):
        return math.inf
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def middle_gap(model: Model, L: int) -> float:
    """Mean of ||beta_p| - |beta_p+1|| over the open-chain levels (edge modes excluded)."""
    dots = gbz_finite_size(model, L)
    return float(np.mean([abs(abs(d.beta_lo) - abs(d.beta_hi)) for d in dots]))


GAP_FLOOR = 1e-10


def gap_converges(gaps) -> bool:
    """Strictly decreasing, or already at roundoff for every size."""
    if max(gaps) < GAP_FLOOR:
        return True
    return all(b < a for a, b in zip(gaps, gaps[1:]))


# -- check table ------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""


def run_checks(model: Model, L_boundary: int = 12, L_periodic: int = 24) -> list[CheckResult]:
    out = []
    dev = pbc_consistency(model, L_periodic)
    out.append(CheckResult("pbc_vs_bloch", dev, 1e-8, dev < 1e-8))

    if model.bands == 1 and model.max_degree - model.min_degree == 3:
        ref = dense_eig(build_chain(model, L_boundary, "open")).values
        zeros = boundary_zeros(model, L_boundary)
        d = matched_distance(zeros, ref)
        out.append(CheckResult("boundary_zeros_vs_eig", d, 1e-6, d < 1e-6))
        worst = max(abs(boundary_determinant(model, E, L_boundary)) for E in ref)
        out.append(CheckResult("boundary_det_at_eigs", worst, 1e-6, worst < 1e-6))
    else:
        out.append(CheckResult("boundary_zeros_vs_eig", math.nan, 1e-6, True, "skipped: not cubic"))

    sizes = [30, 60, 90, 120]
    gaps = [middle_gap(model, L) for L in sizes]
    mono = gap_converges(gaps)
    out.append(CheckResult("middle_gap_decreasing", gaps[-1], GAP_FLOOR, mono, " ".join(f"{g:.2e}" for g in gaps)))
    return out
