"""System-size campaigns for the scalefree skin effect near a Bloch point.

For each chain length L the open-chain level E_m closest to the Bloch energy
is selected and its inverse localization length kappa_m measured, either from
the middle pair of characteristic roots at E_m or from the decay of the
eigenvector itself.  Power laws in L are fitted on log-log axes.

Levels near a Bloch point have |kappa| L = O(1) and are well conditioned, so a
single unrescaled frame of `obc_spectrum` certifies them; levels elsewhere in
the spectrum may be dropped, which is harmless here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .bloch import BlochPoint, bz_intersection_period, find_bloch_points
from .errors import (
    DomainError,
    FitError,
    NoPeriodError,
    OutOfScopeError,
    RuleMismatchError,
    SelectionError,
    UnreliableEnvelopeError,
)
from .gbz import edge_mode_mask, gbz_sweep
from .model import DisorderSpec, Model, RealSpaceMatrix, build_chain, single_band
from .spectral import EigenSystem, obc_spectrum, sorted_betas

COINCIDENT_TOL = 1e-9


@dataclass(frozen=True)
class LevelChoice:
    energy: complex
    vector: np.ndarray = field(repr=False)
    index: int
    coincident: bool = False


@dataclass(frozen=True)
class ScalingPoint:
    L: int
    E_m: complex
    kappa_m: float
    delta_E: float
    kappa_method: str = "middle-root"
    beta_m: complex = 0j
    coincident: bool = False


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    stderr: float
    r2: float
    n_points: int
    low_n: bool = False

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


@dataclass(frozen=True)
class ScalingSeries:
    points: list[ScalingPoint]
    fit_kappa: PowerLawFit
    fit_energy: PowerLawFit
    fit_cross: PowerLawFit
    stride: int
    bloch: BlochPoint
    skipped: tuple[int, ...] = ()

    @property
    def L(self) -> np.ndarray:
        return np.array([p.L for p in self.points])

    @property
    def kappa(self) -> np.ndarray:
        return np.array([abs(p.kappa_m) for p in self.points])

    @property
    def delta_E(self) -> np.ndarray:
        return np.array([p.delta_E for p in self.points])


# -- fitting ---------------------------------------------------------------------

def fit_power_law(xs, ys) -> PowerLawFit:
    """Ordinary least squares of ln y on ln x."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d of equal length")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("power-law fit needs strictly positive data")
    if len(x) < 2:
        raise FitError("need at least two points")
    lx, ly = np.log(x), np.log(y)
    if len(x) == 2:
        slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return PowerLawFit(float(slope), float(ly[0] - slope * lx[0]), 0.0, 1.0, 2, True)
    res = stats.linregress(lx, ly)
    return PowerLawFit(
        float(res.slope), float(res.intercept), float(res.stderr), float(res.rvalue**2), len(x), len(x) < 6
    )


def fit_through_origin(xs, ys) -> tuple[float, float]:
    """Slope and r^2 (uncentered) of y = a x."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    a = float(x @ y / (x @ x))
    r2 = 1 - float(np.sum((y - a * x) ** 2) / np.sum(y**2))
    return a, r2


# -- level selection -----------------------------------------------------------------

def select_level(
    eigs: EigenSystem,
    E_B: complex,
    rule: str = "nearest-complex",
    model: Model | None = None,
    edge_scale: float | None = None,
    skip_coincident: bool = False,
    coincident_tol: float = COINCIDENT_TOL,
) -> LevelChoice:
    """Open-chain level associated with a Bloch energy.

    nearest-complex: argmin |E - E_B|, zero-energy edge modes of two-band
    chains excluded.  lowest-above-real: smallest Re E above Re E_B among
    real levels.  Ties go to the larger imaginary part.  A level within
    `coincident_tol` of E_B is flagged, or passed over if `skip_coincident`.
    """
    values = np.asarray(eigs.values)
    if len(values) == 0:
        raise SelectionError("empty spectrum")
    allowed = np.ones(len(values), dtype=bool)
    if model is not None and model.bands == 2:
        scale = edge_scale if edge_scale is not None else float(np.max(np.abs(values))) * math.sqrt(len(values))
        allowed &= ~edge_mode_mask(values, scale)
    dist = np.abs(values - E_B)
    if skip_coincident:
        allowed &= dist >= coincident_tol
    if rule == "nearest-complex":
        cand = np.flatnonzero(allowed)
        if len(cand) == 0:
            raise SelectionError("no admissible level")
        d = dist[cand]
        near = cand[d <= d.min() * (1 + 1e-12) + 1e-15]
    elif rule == "lowest-above-real":
        cand = np.flatnonzero(allowed & (values.real > np.real(E_B)))
        if len(cand) == 0:
            raise SelectionError("no level above Re E_B")
        re = values.real[cand]
        near = cand[re <= re.min() + 1e-12 * (1 + abs(re.min()))]
        if np.any(np.abs(values[near].imag) > 1e-6):
            raise RuleMismatchError("lowest-above-real needs a real level; the selected one is complex")
    else:
        raise ValueError(f"unknown rule {rule!r}")
    i = int(near[np.argmax(values[near].imag)])
    return LevelChoice(complex(values[i]), eigs.vectors[:, i], i, bool(dist[i] < coincident_tol))


# -- kappa extraction -------------------------------------------------------------

def middle_root_kappa(model: Model, E_m: complex) -> tuple[float, complex]:
    """-(ln|beta_p| + ln|beta_p+1|)/2 and the representative beta (geometric-mean modulus)."""
    lo, hi = sorted_betas(model, E_m).middle(model.p)
    kappa = -(math.log(abs(lo)) + math.log(abs(hi))) / 2
    return kappa, lo


def cell_amplitudes(vector: np.ndarray, bands: int) -> np.ndarray:
    return np.abs(np.asarray(vector)).reshape(-1, bands).max(axis=1)


def casoratian_amplitude(vector: np.ndarray, bands: int) -> np.ndarray:
    """|psi_n^2 - psi_{n-1} psi_{n+1}| per cell (max over orbitals), for n = 1..L-2.

    For a two-mode wave psi_n = a x^n + b y^n this equals
    |a b (x - y)^2| |x y|^(n-1): the interference between the modes cancels
    exactly and the log-slope is ln|x y|.
    """
    psi = np.asarray(vector).reshape(-1, bands)
    return np.abs(psi[1:-1] ** 2 - psi[:-2] * psi[2:]).max(axis=1)


def envelope_kappa(
    model: Model, E_m: complex, vector: np.ndarray, central: float = 0.6, min_r2: float = 0.9
) -> tuple[float, float]:
    """Decay rate of the eigenvector and the fit r^2, from the wavefunction alone.

    Near a Bloch point |kappa| L is of order one and the two middle modes beat
    on the scale of the whole chain, so raw amplitude maxima do not follow a
    single exponential.  The fit uses the Casoratian amplitude instead, whose
    log-slope is -2 kappa for any two-mode wave.  A third mode of comparable
    modulus (three-way cusp junctions) breaks this, which shows up as low r^2.
    """
    amp = casoratian_amplitude(vector, model.bands)
    L = len(amp) + 2
    n = np.arange(1, L - 1)
    lo = int(round(L * (1 - central) / 2))
    sel = (n >= lo) & (n < L - lo)
    if sel.sum() < 3:
        raise UnreliableEnvelopeError("chain too short for an envelope fit", 0.0)
    x, y = n[sel], np.log(amp[sel] + 1e-300)
    res = stats.linregress(x, y)
    kappa = -float(res.slope) / 2
    r2 = float(res.rvalue**2)
    flat = np.max(np.abs(y - y.mean())) < 1e-8
    if not flat and r2 < min_r2:
        raise UnreliableEnvelopeError(f"envelope fit r^2 = {r2:.3f} < {min_r2}", r2)
    return (0.0 if flat else kappa), r2


def extract_kappa(model: Model, E_m: complex, vector=None, method: str = "middle-root") -> float:
    if method == "middle-root":
        return middle_root_kappa(model, E_m)[0]
    if method == "envelope":
        if vector is None:
            raise ValueError("envelope method needs the eigenvector")
        return envelope_kappa(model, E_m, vector)[0]
    raise ValueError(f"unknown kappa method {method!r}")


# -- size campaigns ---------------------------------------------------------------

def default_stride(model: Model, bp: BlochPoint, points: Sequence[BlochPoint] | None = None) -> int:
    if points is None:
        points = find_bloch_points(model, gbz_sweep(model), classify=False)
    same = [p for p in points if abs(p.energy - bp.energy) < 1e-6 * (1 + abs(bp.energy))]
    try:
        period = bz_intersection_period(same or [bp]).period
    except NoPeriodError:
        return 1
    return period or 1


def near_spectrum(m: RealSpaceMatrix) -> EigenSystem:
    return obc_spectrum(m, kappa_window=(0.0, 0.0))


def measure_point(
    model: Model,
    E_B: complex,
    L: int,
    rule: str = "nearest-complex",
    method: str = "middle-root",
    disorder: DisorderSpec | None = None,
) -> ScalingPoint:
    m = build_chain(model, L, "open", disorder)
    spec = near_spectrum(m)
    choice = select_level(spec, E_B, rule, model=model, edge_scale=float(np.linalg.norm(m.matrix)))
    kappa, beta = middle_root_kappa(model, choice.energy)
    if method == "envelope":
        kappa = envelope_kappa(model, choice.energy, choice.vector)[0]
    elif method != "middle-root":
        raise ValueError(f"unknown kappa method {method!r}")
    return ScalingPoint(
        L, choice.energy, kappa, float(abs(choice.energy - E_B)), method, beta, choice.coincident
    )


def _fits(points: list[ScalingPoint]):
    if len(points) < 6:
        raise FitError(f"only {len(points)} valid sizes; need at least 6")
    L = np.array([p.L for p in points], dtype=float)
    k = np.array([abs(p.kappa_m) for p in points])
    e = np.array([p.delta_E for p in points])
    if np.any(k <= 0) or np.any(e <= 0):
        raise FitError("zero kappa or energy offset among fitted points")
    return fit_power_law(L, k), fit_power_law(L, e), fit_power_law(k, e)


def scaling_series(
    model: Model,
    bp: BlochPoint,
    L_list: Iterable[int] | None = None,
    rule: str = "nearest-complex",
    method: str = "middle-root",
    stride: int | None = None,
) -> ScalingSeries:
    """kappa_m and |E_m - E_B| over chain lengths, with log-log fits.

    Default lengths run from 40 to 400 in steps of the smallest multiple of
    the intersection period that is at least 10.
    Sizes whose spectrum contains E_B itself are recorded as skipped.
    """
    if stride is None:
        period = default_stride(model, bp)
        stride = period * math.ceil(10 / period)
    Ls = list(range(40, 401, stride)) if L_list is None else [int(x) for x in L_list]
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ValueError("L_list must be strictly increasing")
    points, skipped = [], []
    for L in Ls:
        pt = measure_point(model, bp.energy, L, rule, method)
        if pt.coincident or pt.kappa_m == 0:
            skipped.append(L)
            continue
        points.append(pt)
    fk, fe, fc = _fits(points)
    return ScalingSeries(points, fk, fe, fc, stride, bp, tuple(skipped))


# -- density of states -----------------------------------------------------------

@dataclass(frozen=True)
class DOSResult:
    alpha: float
    fit: PowerLawFit
    epsilon: np.ndarray
    counts: np.ndarray


def dos_exponent(
    model: Model,
    E_B: complex,
    L: int,
    window: float,
    n_eps: int = 24,
    min_count: int = 8,
    kappa_window: tuple[float, float] | None = None,
) -> DOSResult:
    """alpha from the cumulative level count N(eps) ~ eps^(1 - alpha) around E_B.

    Only levels within `window` of E_B enter, and those must be real; a
    complex level there means the PT-broken phase, where the exponent law
    does not apply.
    """
    if L < 400:
        raise ValueError("DOS fits need L >= 400")
    if kappa_window is None:
        kappa_window = _window_kappa_range(model, E_B, window, L)
    m = build_chain(model, L, "open")
    spec = obc_spectrum(m, kappa_window=kappa_window)
    d = np.abs(spec.values - E_B)
    inside = d < window
    if np.any(np.abs(spec.values[inside].imag) > 1e-6):
        raise OutOfScopeError("complex levels near E_B: PT-broken phase")
    d = np.sort(d[inside])
    if len(d) < min_count + 4:
        raise FitError(f"only {len(d)} levels inside the window")
    eps = np.geomspace(d[min_count - 1] * 1.0001, window, n_eps)
    counts = np.searchsorted(d, eps, side="right")
    fit = fit_power_law(eps, counts)
    return DOSResult(1 - fit.slope, fit, eps, counts)


def _window_kappa_range(model: Model, E_B: complex, window: float, L: int) -> tuple[float, float]:
    c = gbz_sweep(model)
    sel = np.abs(c.energy - E_B) < 1.5 * window
    if model.bands == 2:
        sel |= np.abs(-c.energy - E_B) < 1.5 * window
    k = c.kappa[sel] if sel.any() else np.array([0.0])
    pad = 5.0 / L
    return float(min(k.min(), 0.0) - pad), float(max(k.max(), 0.0) + pad)


# -- periodicity ------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicityResult:
    period: int | None
    L: np.ndarray
    kappa: np.ndarray
    residual: np.ndarray
    acf: np.ndarray
    expected: int | None


def _autocorr(r: np.ndarray, max_lag: int) -> np.ndarray:
    r = r - r.mean()
    den = float(r @ r)
    if den == 0:
        return np.zeros(max_lag + 1)
    return np.array([1.0] + [float(r[:-k] @ r[k:]) / den for k in range(1, max_lag + 1)])


def periodicity_scan(
    model: Model,
    bp: BlochPoint,
    L_min: int,
    L_max: int,
    expected: int | None = None,
    threshold: float = 0.5,
) -> PeriodicityResult:
    """Dominant integer period of kappa_m(L) after removing its power-law trend."""
    Ls = np.arange(L_min, L_max + 1)
    k = np.array([abs(measure_point(model, bp.energy, int(L)).kappa_m) for L in Ls])
    good = k > 0
    if good.sum() < 3:
        raise FitError("too few nonzero kappa values to detrend")
    trend = fit_power_law(Ls[good], k[good]).predict(Ls)
    resid = k / trend - 1
    max_lag = max(2, len(Ls) // 4)
    acf = _autocorr(resid, max_lag)
    if np.ptp(resid) < 1e-3:
        period = 1
    else:
        peak = acf[1:].max()
        lags = [p for p in range(1, max_lag + 1) if acf[p] > threshold and acf[p] >= 0.9 * peak]
        period = lags[0] if lags else None
    return PeriodicityResult(period, Ls, k, resid, acf, expected)


# -- disorder -------------------------------------------------------------------

def disorder_seed(master: int, L: int, sample: int) -> int:
    return int(np.random.SeedSequence([master, L, sample]).generate_state(1)[0])


@dataclass(frozen=True)
class DisorderSeries:
    series: ScalingSeries
    samples: list[list[ScalingPoint]]
    aggregate: str


def disorder_series(
    model: Model,
    d: DisorderSpec,
    bp_clean: BlochPoint,
    L_list: Iterable[int],
    n_samples: int = 20,
    master_seed: int = 0,
    method: str = "envelope",
    aggregate: str = "mean",
) -> DisorderSeries:
    """Scaling campaign over independent disorder draws per length."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    agg = {"mean": np.mean, "median": np.median}[aggregate]
    Ls = [int(x) for x in L_list]
    points, raw = [], []
    for L in Ls:
        row = []
        for s in range(n_samples):
            spec = DisorderSpec(d.target, d.amplitude, disorder_seed(master_seed, L, s))
            row.append(measure_point(model, bp_clean.energy, L, method=method, disorder=spec))
        raw.append(row)
        kap = float(agg([abs(p.kappa_m) for p in row]))
        dE = float(agg([p.delta_E for p in row]))
        points.append(ScalingPoint(L, row[0].E_m, kap, dE, method, row[0].beta_m))
    fk, fe, fc = _fits(points)
    stride = Ls[1] - Ls[0] if len(Ls) > 1 else 1
    return DisorderSeries(ScalingSeries(points, fk, fe, fc, stride, bp_clean), raw, aggregate)


# -- profiles -------------------------------------------------------------------

def profile_envelope(model: Model, vector: np.ndarray, grid: np.ndarray):
    """Peak-normalized upper envelope of |psi| against x/L, sampled on `grid`.

    The envelope joins the local maxima of the per-cell amplitude.
    """
    amp = cell_amplitudes(vector, model.bands)
    L = len(amp)
    up = np.r_[True, amp[1:] >= amp[:-1]]
    down = np.r_[amp[:-1] >= amp[1:], True]
    peaks = np.flatnonzero(up & down)
    env = np.interp(np.arange(L), peaks, amp[peaks])
    x = (np.arange(L) + 0.5) / L
    return np.interp(grid, x, env / env.max())


def profile_collapse(model: Model, E_B: complex, Ls: Sequence[int], n_grid: int = 201):
    """Pairwise max deviation of rescaled envelopes; returns (deviation, grid, curves)."""
    grid = np.linspace(0.05, 0.95, n_grid)
    curves = []
    for L in Ls:
        spec = near_spectrum(build_chain(model, L, "open"))
        ch = select_level(spec, E_B, model=model)
        curves.append(profile_envelope(model, ch.vector, grid))
    curves = np.array(curves)
    dev = max(
        (float(np.max(np.abs(a - b))) for i, a in enumerate(curves) for b in curves[i + 1:]),
        default=0.0,
    )
    return dev, grid, curves


# -- slope families ---------------------------------------------------------------

@dataclass(frozen=True)
class FamilyFit:
    theta_B: float
    t_m2: np.ndarray
    slope: np.ndarray
    kappa: np.ndarray
    ratio: float  # through-origin slope of |kappa_m| against |d|beta|/dtheta|
    r2: float


def family_model(theta_B: float, t_m2: float, t_m1: float = 1.0) -> Model:
    """Three-term chain t_m2/beta^2 + t_m1/beta + t_1 beta with a Bloch point at +/- theta_B."""
    t1 = t_m1 + 2 * t_m2 * math.cos(theta_B)
    return single_band({-2: t_m2, -1: t_m1, 1: t1}, f"family-{theta_B:.4f}-{t_m2:.4f}")


def slope_family(theta_B: float, t_m2_values, L: int = 40, rule: str = "lowest-above-real") -> FamilyFit:
    """|kappa_m| at fixed L against the GBZ slope at theta_B, varying t_-2."""
    slopes, kappas = [], []
    for t in t_m2_values:
        m = family_model(theta_B, float(t))
        pts = find_bloch_points(m, gbz_sweep(m))
        bp = min(pts, key=lambda p: abs(p.theta - theta_B))
        spec = near_spectrum(build_chain(m, L, "open"))
        ch = select_level(spec, bp.energy, rule, model=m, skip_coincident=True)
        slopes.append(bp.slope)
        kappas.append(abs(middle_root_kappa(m, ch.energy)[0]))
    a, r2 = fit_through_origin(slopes, kappas)
    return FamilyFit(theta_B, np.asarray(t_m2_values, float), np.array(slopes), np.array(kappas), a, r2)


def family_spread(fits: Sequence[FamilyFit]) -> tuple[float, float, float]:
    """Pooled through-origin slope, its r^2, and the largest relative family deviation from it."""
    xs = np.concatenate([f.slope for f in fits])
    ys = np.concatenate([f.kappa for f in fits])
    a, r2 = fit_through_origin(xs, ys)
    return a, r2, max(abs(f.ratio / a - 1) for f in fits)
