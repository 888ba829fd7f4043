"""Dense eigendecomposition and polynomial roots.

`dense_eig` is a thin, residual-checked wrapper over LAPACK.  Open chains with
a skin effect are violently non-normal, so eigenvalues of states with
|kappa| * L >> 1 come out of a plain double-precision solve wrong even though
their residuals are tiny.  `obc_spectrum` handles that with a ladder of
similarity rescalings psi_n -> exp(-kappa0 n) psi_n; in each rescaled frame
the states with kappa near kappa0 are well conditioned, and an eigenvalue is
kept only from a frame where its first-order error bound (condition number
times eps times the matrix norm) is below tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, DegeneratePolynomialError
from .model import Model, RealSpaceMatrix, characteristic_coeffs

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray
    vectors: np.ndarray = field(repr=False)  # columns, unit 2-norm
    residuals: np.ndarray = field(repr=False)
    errors: np.ndarray | None = field(default=None, repr=False)
    complete: bool = True

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SortedRoots:
    roots: np.ndarray

    def __len__(self):
        return len(self.roots)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.roots)

    def middle(self, p: int) -> tuple[complex, complex]:
        """Roots of rank p and p+1 (1-based), i.e. beta_p and beta_{p+1}."""
        return complex(self.roots[p - 1]), complex(self.roots[p])


def _polyval(c, x):
    out = np.zeros_like(x, dtype=complex) + c[0]
    for a in c[1:]:
        out = out * x + a
    return out


def _polish(c: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    dc = np.polyder(c)
    out = roots.copy()
    for _ in range(steps):
        f = _polyval(c, out)
        df = _polyval(dc, out)
        ok = df != 0
        cand = out.copy()
        cand[ok] = out[ok] - f[ok] / df[ok]
        better = np.abs(_polyval(c, cand)) < np.abs(f)
        out = np.where(better, cand, out)
    return out


def poly_roots(coeffs) -> np.ndarray:
    """All roots (with multiplicity) of a dense polynomial, highest degree first.

    Eigenvalues of the balanced companion matrix, each polished by Newton
    steps that are only accepted when they reduce |P|.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or len(c) < 2:
        raise DegeneratePolynomialError("polynomial needs degree >= 1")
    if c[0] == 0:
        raise DegeneratePolynomialError("leading coefficient is zero")
    n = len(c) - 1
    if n == 1:
        return np.array([-c[1] / c[0]])
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -c[1:] / c[0]
    comp[np.arange(1, n), np.arange(n - 1)] = 1
    # extreme coefficient ratios can overflow the balancing scale factors
    with np.errstate(invalid="ignore", over="ignore"):
        bal, _ = sla.matrix_balance(comp, permute=False)
    if not np.all(np.isfinite(bal)):
        bal = comp
    roots = sla.eigvals(bal, overwrite_a=True, check_finite=False)
    return _polish(c, roots)


def batch_roots(coeff_rows: np.ndarray) -> np.ndarray:
    """Vectorized `poly_roots` for many polynomials of one degree (rows)."""
    c = np.asarray(coeff_rows, dtype=complex)
    m, n1 = c.shape
    n = n1 - 1
    if np.any(c[:, 0] == 0):
        raise DegeneratePolynomialError("leading coefficient is zero")
    comp = np.zeros((m, n, n), dtype=complex)
    comp[:, 0, :] = -c[:, 1:] / c[:, :1]
    comp[:, np.arange(1, n), np.arange(n - 1)] = 1
    roots = np.linalg.eigvals(comp)
    out = np.empty_like(roots)
    for i in range(m):
        out[i] = _polish(c[i], roots[i])
    return out


def sort_roots(roots) -> np.ndarray:
    """Ascending modulus; near-equal moduli ordered by argument in (-pi, pi]."""
    r = np.asarray(roots, dtype=complex)
    mod = np.abs(r)
    arg = np.angle(r)
    arg = np.where(arg <= -math.pi, math.pi, arg)
    order = np.argsort(mod, kind="stable")
    r, mod, arg = r[order], mod[order], arg[order]
    # regroup runs of tied moduli by argument
    i = 0
    out = []
    while i < len(r):
        j = i + 1
        while j < len(r) and mod[j] - mod[i] <= 1e-12 * (1 + mod[i]):
            j += 1
        grp = np.arange(i, j)
        out.extend(grp[np.argsort(arg[grp], kind="stable")])
        i = j
    return r[np.array(out, dtype=int)]


def sorted_betas(model: Model, E: complex) -> SortedRoots:
    return SortedRoots(sort_roots(poly_roots(characteristic_coeffs(model, E))))


def _as_array(m) -> np.ndarray:
    return m.matrix if isinstance(m, RealSpaceMatrix) else np.asarray(m, dtype=complex)


def _sort_pairs(values, vectors, *extra):
    order = np.lexsort((values.imag, values.real))
    return (values[order], vectors[:, order]) + tuple(e[order] for e in extra)


def dense_eig(m, rtol: float = 1e-10) -> EigenSystem:
    """Eigenvalues and unit right eigenvectors, sorted by (Re, Im)."""
    H = _as_array(m)
    if H.shape[0] < 1:
        raise ConvergenceError("empty matrix")
    values, vectors = sla.eig(H)
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    residuals = np.linalg.norm(H @ vectors - vectors * values, axis=0)
    bound = rtol * (1 + np.linalg.norm(H))
    worst = float(residuals.max())
    if worst >= bound:
        raise ConvergenceError(f"eigen-residual {worst:.3e} exceeds {bound:.3e}", worst)
    values, vectors, residuals = _sort_pairs(values, vectors, residuals)
    return EigenSystem(values, vectors, residuals)


def _rescaled(H: np.ndarray, cells: np.ndarray, kappa0: float) -> np.ndarray:
    # D^-1 H D with D = diag(exp(-kappa0 * cell)); only banded entries are nonzero
    diff = cells[None, :] - cells[:, None]
    out = np.zeros_like(H)
    nz = H != 0
    out[nz] = H[nz] * np.exp(-kappa0 * diff[nz])
    return out


def _frame(H, cells, kappa0, tol):
    Hs = _rescaled(H, cells, kappa0) if kappa0 else H
    w, vl, vr = sla.eig(Hs, left=True, right=True)
    vl = vl / np.linalg.norm(vl, axis=0)
    vr = vr / np.linalg.norm(vr, axis=0)
    overlap = np.abs(np.sum(vl.conj() * vr, axis=0))
    with np.errstate(divide="ignore"):
        cond = np.where(overlap > 0, 1.0 / overlap, np.inf)
    err = cond * EPS * np.linalg.norm(Hs)
    keep = err < tol
    # back to the original frame in log space to avoid overflow
    logs = -kappa0 * cells[:, None] + np.log(np.abs(vr[:, keep]) + 1e-300)
    logs -= logs.max(axis=0, keepdims=True)
    vecs = np.exp(logs) * np.exp(1j * np.angle(vr[:, keep]))
    vecs /= np.linalg.norm(vecs, axis=0)
    return w[keep], vecs, err[keep]


def obc_spectrum(
    m: RealSpaceMatrix,
    kappa_window: tuple[float, float] | None = None,
    rtol: float = 1e-9,
    kappa_max: float = 6.0,
) -> EigenSystem:
    """Certified eigenpairs of an open chain via a ladder of rescaled frames.

    With `kappa_window=None` frames are added symmetrically around kappa0 = 0
    until all N eigenvalues are certified (a direction stops once a frame
    certifies nothing).  With a window only frames inside it are used and the
    result may be partial (`complete=False`).
    """
    if m.boundary != "open":
        raise ValueError("obc_spectrum needs an open chain")
    H = m.matrix
    N = m.N
    cells = m.cell_index().astype(float)
    scale = np.linalg.norm(H)
    tol = rtol * (1 + scale)
    step = min(0.5, 2 * math.log(tol / (EPS * (1 + scale))) / max(m.L, 1))

    acc_vals, acc_vecs, acc_err = [], [], []

    def run(k0):
        w, v, e = _frame(H, cells, k0, tol)
        acc_vals.append(w)
        acc_vecs.append(v)
        acc_err.append(e)
        return len(w)

    if kappa_window is None:
        run(0.0)
        live = {1: True, -1: True}
        i = 1
        while _count_distinct(acc_vals, acc_err) < N and any(live.values()) and i * step <= kappa_max:
            for sgn in (1, -1):
                if live[sgn] and run(sgn * i * step) == 0:
                    live[sgn] = False
            i += 1
    else:
        lo, hi = kappa_window
        n = max(1, int(math.ceil((hi - lo) / step)))
        for k0 in np.linspace(lo, hi, n + 1) if hi > lo else [lo]:
            run(float(k0))

    vals, vecs, errs = _merge(acc_vals, acc_vecs, acc_err)
    if kappa_window is None and len(vals) < N:
        vals, vecs, errs = _defective(H, cells, vals, vecs, errs, N, step, kappa_max, tol)
    residuals = np.linalg.norm(H @ vecs - vecs * vals, axis=0) if len(vals) else np.zeros(0)
    vals, vecs, residuals, errs = _sort_pairs(vals, vecs, residuals, errs)
    complete = len(vals) == N
    if kappa_window is None and not complete:
        raise ConvergenceError(
            f"certified only {len(vals)} of {N} eigenvalues within |kappa0| <= {kappa_max}"
        )
    return EigenSystem(vals, vecs, residuals, errs, complete)


def _defective(H, cells, vals, vecs, errs, N, step, kappa_max, tol):
    """Add eigenvalues of Jordan-type clusters that no frame can certify.

    A size-k block splits under roundoff into k values spread by about
    (eps |H|)^(1/k) around the true eigenvalue, while their mean stays
    accurate.  Such clusters enter as k copies of the mean, with the spread
    as error bound.
    """
    scale = np.linalg.norm(H)
    radius = math.sqrt(EPS) * (1 + scale) * 100
    k0s = [0.0] + [sgn * i * step for i in range(1, int(kappa_max / step) + 1) for sgn in (1, -1)]
    for k0 in k0s:
        Hs = _rescaled(H, cells, k0) if k0 else H
        w, vr = sla.eig(Hs)
        known = np.array(vals)
        free = [
            i for i in range(len(w))
            if not len(known) or np.min(np.abs(known - w[i])) > max(radius, 1e3 * tol)
        ]
        added_v, added_x, added_e = [], [], []
        used: set[int] = set()
        for i in free:
            if i in used:
                continue
            grp = [j for j in free if j not in used and abs(w[j] - w[i]) < radius]
            if len(grp) < 2:
                continue
            used.update(grp)
            mean = complex(np.mean(w[grp]))
            spread = float(np.max(np.abs(w[grp] - mean)))
            x = _unscale(vr[:, grp[0]], cells, k0)
            added_v += [mean] * len(grp)
            added_x += [x] * len(grp)
            added_e += [max(spread, EPS * (1 + scale))] * len(grp)
        if added_v and len(vals) + len(added_v) <= N:
            vals = np.concatenate([vals, added_v])
            vecs = np.concatenate([vecs, np.array(added_x).T], axis=1) if len(vecs) else np.array(added_x).T
            errs = np.concatenate([errs, added_e])
        if len(vals) == N:
            break
    return vals, vecs, errs


def _unscale(v, cells, k0):
    logs = -k0 * cells + np.log(np.abs(v) + 1e-300)
    logs -= logs.max()
    x = np.exp(logs) * np.exp(1j * np.angle(v))
    return x / np.linalg.norm(x)


def _merge(vals, vecs, errs):
    """Union of per-frame eigenpairs; a value seen in several frames is kept once.

    Values from one frame are distinct eigenpairs by construction, so only
    matches against other frames count as duplicates (near-degenerate pairs,
    e.g. split edge modes, survive).
    """
    if not vals:
        return np.zeros(0, complex), np.zeros((0, 0), complex), np.zeros(0)
    v = np.concatenate(vals)
    X = np.concatenate(vecs, axis=1)
    e = np.concatenate(errs)
    frame = np.concatenate([np.full(len(x), i) for i, x in enumerate(vals)])
    order = np.argsort(e, kind="stable")
    keep: list[int] = []
    for i in order:
        if keep:
            k = np.array(keep)
            other = frame[k] != frame[i]
            sep = 100 * np.maximum(e[k], e[i]) + 1e-12 * (1 + abs(v[i]))
            if np.any(other & (np.abs(v[k] - v[i]) < sep)):
                continue
        keep.append(i)
    keep = np.array(keep, dtype=int)
    return v[keep], X[:, keep], e[keep]


def _count_distinct(vals, errs) -> int:
    return len(_merge(vals, [np.zeros((1, len(x))) for x in vals], errs)[0])
