"""Acceptance criteria, one test each.

Every test reports a single PASS/FAIL line (collected in the terminal
summary, and printed directly under `pytest -s`).  Models come from the
shipped presets.
"""

import math
import time

import numpy as np
import pytest

from nonbloch.bloch import bz_intersection_period, closed_form_bloch, find_bloch_points
from nonbloch.gbz import dot_distance, gbz_finite_size, gbz_sweep
from nonbloch.model import DisorderSpec, build_chain, load_preset
from nonbloch.scaling import (
    disorder_series,
    dos_exponent,
    family_spread,
    periodicity_scan,
    profile_collapse,
    scaling_series,
    select_level,
    slope_family,
)
from nonbloch.spectral import dense_eig, obc_spectrum
from nonbloch.verify import boundary_zeros, matched_distance, pbc_consistency

PI = math.pi


def preset(name):
    return load_preset(name)[0]


def bloch_points(model):
    return find_bloch_points(model, gbz_sweep(model))


def upper(points):
    return max(points, key=lambda p: p.theta)


@pytest.mark.criterion(1)
def test_criterion_1_closed_form(report):
    m = preset("fig1")
    t0 = time.perf_counter()
    pts = bloch_points(m)
    dt = time.perf_counter() - t0
    (a, b), E = closed_form_bloch(0.25, 1, 1)
    thetas = sorted(p.theta for p in pts)
    err_t = max(abs(x - y) for x, y in zip(thetas, sorted((a, b))))
    err_E = max(abs(p.energy - E) for p in pts)
    report(f"theta err {err_t:.1e}, E_B err {err_E:.1e}, {dt:.2f} s")
    assert len(pts) == 2 and err_t < 1e-8 and err_E < 1e-8
    assert abs(a - PI / 2) < 1e-12 and abs(E + 0.25) < 1e-12
    assert dt < 1.0


@pytest.mark.criterion(2)
def test_criterion_2_fig2_scaling(report):
    m = preset("fig2")
    t0 = time.perf_counter()
    s = scaling_series(m, upper(bloch_points(m)), range(40, 401, 2), stride=2)
    dt = time.perf_counter() - t0
    fk, fe = s.fit_kappa, s.fit_energy
    report(f"slopes kappa {fk.slope:.4f} (r2 {fk.r2:.5f}), energy {fe.slope:.4f} (r2 {fe.r2:.5f}), "
           f"{len(s.points)} sizes, {dt:.1f} s")
    assert abs(fk.slope + 1) <= 0.05 and abs(fe.slope + 1) <= 0.05
    assert fk.r2 > 0.999 and fe.r2 > 0.999
    assert dt < 30


@pytest.mark.criterion(3)
def test_criterion_3_slope_families(report):
    t0 = time.perf_counter()
    tm2 = np.linspace(0.05, 0.4, 8)
    fits = [slope_family(th, tm2, L=40) for th in (PI / 2, PI / 3, PI / 6)]
    pooled, _, spread = family_spread(fits)
    dt = time.perf_counter() - t0
    r2 = [f.r2 for f in fits]
    ratios = ", ".join(f"{f.ratio:.4f}" for f in fits)
    report(f"family r2 min {min(r2):.4f}, ratios {ratios}, pooled {pooled:.4f}, "
           f"max deviation {spread:.3f} (limit 0.10), {dt:.1f} s")
    assert min(r2) > 0.99
    assert spread <= 0.10
    assert dt < 60


@pytest.mark.criterion(4)
def test_criterion_4_fig3a_cusps(report):
    m = preset("fig3a")
    t0 = time.perf_counter()
    pts = bloch_points(m)
    s = scaling_series(m, upper(pts), range(40, 401, 4), stride=4)
    dt = time.perf_counter() - t0
    thetas = sorted(p.theta for p in pts)
    ref = [-3 * PI / 4, -PI / 4, PI / 4, 3 * PI / 4]
    report(f"{len(pts)} cusps, |E_B| max {max(abs(p.energy) for p in pts):.1e}, slopes kappa "
           f"{s.fit_kappa.slope:.3f}, energy {s.fit_energy.slope:.3f}, {dt:.1f} s")
    assert len(pts) == 4 and np.allclose(thetas, ref, atol=1e-8)
    assert all(abs(p.energy) < 1e-8 and p.cusp for p in pts)
    assert abs(s.fit_kappa.slope + 1) <= 0.1 and abs(s.fit_energy.slope + 1) <= 0.1
    assert dt < 60


@pytest.mark.criterion(5)
def test_criterion_5_fig3b_tangency(report):
    m = preset("fig3b")
    t0 = time.perf_counter()
    (bp,) = bloch_points(m)
    s = scaling_series(m, bp)
    dt = time.perf_counter() - t0
    report(f"l = {bp.l}, beta_B = {bp.beta:.6f}, E_B = {bp.energy.real:.6f}, slopes kappa "
           f"{s.fit_kappa.slope:.3f}, energy {s.fit_energy.slope:.3f}, {dt:.1f} s")
    assert bp.l == 2 and abs(bp.beta - 1) < 1e-8 and abs(bp.energy - 3.75) < 1e-8
    assert abs(s.fit_kappa.slope + 2) <= 0.1 and abs(s.fit_energy.slope + 2) <= 0.1
    assert dt < 60


@pytest.mark.criterion(6)
def test_criterion_6_fig3c_third_order(report):
    m = preset("fig3c")
    (bp,) = bloch_points(m)
    s = scaling_series(m, bp)
    l, j = bp.l, bp.j
    report(f"l = {l}, j = {j}, slopes energy {s.fit_energy.slope:.3f}, kappa {s.fit_kappa.slope:.3f}, "
           f"cross {s.fit_cross.slope:.3f} (l/j = {l / j:.3f})")
    assert l == 3 and abs(bp.beta + 1) < 1e-8 and abs(bp.energy + 3) < 1e-8
    assert abs(s.fit_energy.slope + 3) <= 0.15
    assert abs(s.fit_kappa.slope + j) <= 0.15
    assert abs(s.fit_cross.slope - l / j) <= 0.1


@pytest.mark.criterion(7)
def test_criterion_7_ssh(report):
    t0 = time.perf_counter()
    out = {}
    for name, target, tol in (("fig4b", -1, 0.1), ("fig4c", -2, 0.15)):
        m = preset(name)
        s = scaling_series(m, upper(bloch_points(m)))
        out[name] = (s.fit_kappa.slope, s.fit_energy.slope, target, tol)
    # short chain: the in-gap zero modes must not be picked
    m = preset("fig4b")
    chain = build_chain(m, 20)
    ch = select_level(obc_spectrum(chain), 0.0, model=m, edge_scale=float(np.linalg.norm(chain.matrix)))
    dt = time.perf_counter() - t0
    report("; ".join(f"{k} kappa {a:.3f} energy {b:.3f}" for k, (a, b, _, _) in out.items())
           + f"; |E_m| near zero at L=20: {abs(ch.energy):.3f}; {dt:.1f} s")
    for a, b, target, tol in out.values():
        assert abs(a - target) <= tol and abs(b - target) <= tol
    assert abs(ch.energy) > 0.1
    assert dt < 120


@pytest.mark.criterion(8)
def test_criterion_8_dos(report):
    t0 = time.perf_counter()
    res = {}
    for name, l in (("fig1", 1), ("fig3b", 2), ("fig3c", 3)):
        m = preset(name)
        bp = upper(bloch_points(m))
        assert bp.l == l
        res[name] = (l, dos_exponent(m, bp.energy, 1000, 0.3).alpha)
    dt = time.perf_counter() - t0
    report(", ".join(f"l={l}: alpha {a:.3f} (want {1 - 1 / l:.3f})" for l, a in res.values()) + f", {dt:.0f} s")
    for l, a in res.values():
        assert abs(a - (1 - 1 / l)) <= 0.1
    assert dt < 300


@pytest.mark.criterion(9)
def test_criterion_9_periodicity(report):
    t0 = time.perf_counter()
    got = {}
    for name, want in (("figS2a", 2), ("figS2b", 4)):
        m = preset(name)
        pts = bloch_points(m)
        expected = bz_intersection_period(pts).period
        got[name] = (periodicity_scan(m, upper(pts), 40, 100, expected).period, expected, want)
    dt = time.perf_counter() - t0
    report(", ".join(f"{k}: scan {a}, intersections {b}" for k, (a, b, _) in got.items()) + f", {dt:.1f} s")
    for a, b, want in got.values():
        assert a == b == want
    assert dt < 60


@pytest.mark.criterion(10)
def test_criterion_10_disorder(report):
    m, d = load_preset("figS3")
    assert d.amplitude == 0.01
    t0 = time.perf_counter()
    bp = upper(bloch_points(m))
    Ls = range(30, 211, 12)
    noisy = disorder_series(m, d, bp, Ls, n_samples=20, master_seed=0).series
    clean = disorder_series(m, DisorderSpec(d.target, 0.0, 0), bp, Ls, n_samples=1).series
    dt = time.perf_counter() - t0
    report(f"dt=0.01: kappa {noisy.fit_kappa.slope:.3f}, energy {noisy.fit_energy.slope:.3f}; "
           f"dt=0: kappa {clean.fit_kappa.slope:.3f}, energy {clean.fit_energy.slope:.3f}; {dt:.0f} s")
    assert abs(noisy.fit_kappa.slope + 1) <= 0.15 and abs(noisy.fit_energy.slope + 1) <= 0.15
    assert abs(clean.fit_kappa.slope + 1) <= 0.1 and abs(clean.fit_energy.slope + 1) <= 0.1
    assert dt < 300


@pytest.mark.criterion(11)
def test_criterion_11_oracles(report):
    t0 = time.perf_counter()
    singles = ["fig1", "fig2", "fig3a", "fig3b", "fig3c"]
    dots = {n: dot_distance(gbz_finite_size(preset(n), 200), gbz_sweep(preset(n))) for n in singles}
    cubic = ["fig1", "fig2", "fig3b", "fig3c"]
    bnd = {n: matched_distance(boundary_zeros(preset(n), 12), dense_eig(build_chain(preset(n), 12)).values)
           for n in cubic}
    pbc = {n: pbc_consistency(preset(n), 24) for n in singles + ["fig4b", "fig4c"]}
    dt = time.perf_counter() - t0
    report(f"dots max {max(dots.values()):.1e}, boundary max {max(bnd.values()):.1e}, "
           f"periodic max {max(pbc.values()):.1e}, {dt:.1f} s")
    assert max(dots.values()) < 1e-2
    assert max(bnd.values()) < 1e-6
    assert max(pbc.values()) < 1e-8
    assert dt < 60


@pytest.mark.criterion(12)
def test_criterion_12_profile_collapse(report):
    m = preset("fig2")
    t0 = time.perf_counter()
    dev, _, _ = profile_collapse(m, upper(bloch_points(m)).energy, [40, 60, 80, 100])
    dt = time.perf_counter() - t0
    report(f"max pairwise deviation {dev:.4f} (limit 0.05), {dt:.1f} s")
    assert dev < 0.05
    assert dt < 30
