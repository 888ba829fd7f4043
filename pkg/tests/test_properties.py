"""Invariants checked over generated inputs."""

import cmath
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from nonbloch.bloch import closed_form_bloch, find_bloch_points, saddle_order
from nonbloch.gbz import gbz_sweep
from nonbloch.model import (
    DisorderSpec,
    LaurentPolynomial,
    bloch_energies,
    build_chain,
    eval_laurent,
    model_from_dict,
    model_to_dict,
    single_band,
)
from nonbloch.scaling import fit_power_law
from nonbloch.spectral import dense_eig, poly_roots, sort_roots
from nonbloch.verify import boundary_zeros, matched_distance, pbc_consistency

SLOW = settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])
FAST = settings(max_examples=60, deadline=None)

coef = st.floats(0.2, 2.0)
signed = st.one_of(st.floats(-2.0, -0.2), st.floats(0.2, 2.0))
cplx = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))


@st.composite
def laurent(draw):
    lo = draw(st.integers(-3, -1))
    hi = draw(st.integers(1, 3))
    terms = {d: draw(cplx) for d in range(lo + 1, hi)}
    terms[lo] = draw(signed)
    terms[hi] = draw(signed)
    return terms


@SLOW
@given(t_m2=coef, t_m1=coef, x=st.floats(-0.9, 0.9))
def test_closed_form_matches_numerical(t_m2, t_m1, x):
    t1 = t_m1 + 2 * t_m2 * x
    assume(t1 > 0.1)
    (theta, _), E = closed_form_bloch(t_m2, t_m1, t1)
    m = single_band({-2: t_m2, -1: t_m1, 1: t1})
    assume(abs(t_m2 - t1) > 1e-3)
    pts = find_bloch_points(m, gbz_sweep(m), classify=False)
    hits = [p for p in pts if abs(p.theta - theta) < 1e-7]
    # the third root has modulus t_m2 / t1: the unit pair is the middle pair
    # (a genuine Bloch point) only when that root lies inside the circle
    if t_m2 < t1:
        assert hits and abs(hits[0].energy - E) < 1e-7
    else:
        assert not hits


@FAST
@given(terms=laurent(), k=st.floats(-math.pi, math.pi))
def test_eval_on_circle_is_bloch_energy(terms, k):
    m = single_band(terms)
    assert abs(eval_laurent(m.h, cmath.exp(1j * k)) - bloch_energies(m, k)[0]) < 1e-12


@FAST
@given(roots=st.lists(cplx, min_size=1, max_size=6))
def test_roots_round_trip(roots):
    r = np.array(roots)
    gaps = [abs(a - b) for i, a in enumerate(r) for b in r[i + 1:]]
    assume(not gaps or min(gaps) > 1e-2)
    found = poly_roots(np.poly(r))
    assert matched_distance(found, r) < 1e-6


@FAST
@given(roots=st.lists(cplx, min_size=1, max_size=8), seed=st.integers(0, 1000))
def test_sort_roots_permutation_invariant(roots, seed):
    r = np.array(roots)
    perm = np.random.default_rng(seed).permutation(len(r))
    a = sort_roots(r)
    assert np.array_equal(a, sort_roots(r[perm]))
    assert np.all(np.diff(np.abs(a)) >= -1e-12)


@FAST
@given(scale=st.floats(0.05, 20.0), which=st.sampled_from([0, 1]))
def test_saddle_order_scale_invariant(scale, which):
    terms, beta, l = [({-2: 0.25, -1: 1.5, 1: 2}, 1.0, 2), ({-2: 1, -1: 3, 1: 1}, -1.0, 3)][which]
    m = single_band({d: scale * v for d, v in terms.items()})
    assert saddle_order(m, beta) == l


@FAST
@given(terms=laurent(), L=st.integers(8, 16))
def test_mirror_is_transpose(terms, L):
    # beta -> 1/beta reverses hopping directions, i.e. transposes the chain
    m = single_band(terms)
    mirror = single_band({-d: v for d, v in terms.items()})
    assert np.allclose(build_chain(m, L).matrix.T, build_chain(mirror, L).matrix)


@SLOW
@given(terms=laurent(), L=st.integers(8, 20))
def test_periodic_chain_bloch_theorem(terms, L):
    assume(L >= single_band(terms).max_degree - single_band(terms).min_degree + 2)
    assert pbc_consistency(single_band(terms), L) < 1e-8


@SLOW
@given(t=st.tuples(coef, signed, coef, coef), L=st.integers(6, 10))
def test_boundary_oracle_matches_dense(t, L):
    m = single_band({-2: t[0], -1: t[1], 0: t[2] - 1, 1: t[3]})
    ref = dense_eig(build_chain(m, L)).values
    assert matched_distance(boundary_zeros(m, L), ref) < 1e-6 * (1 + np.max(np.abs(ref)))


@FAST
@given(slope=st.floats(-4, 4), c=st.floats(0.1, 10), n=st.integers(3, 30))
def test_power_law_recovers_exponent(slope, c, n):
    x = np.geomspace(10, 1000, n)
    f = fit_power_law(x, c * x**slope)
    assert abs(f.slope - slope) < 1e-9


@FAST
@given(amp=st.floats(0, 0.5), seed=st.integers(0, 2**31), n=st.integers(1, 50))
def test_disorder_draws(amp, seed, n):
    d = DisorderSpec(0, amp, seed)
    a = d.draws(n)
    assert np.array_equal(a, d.draws(n))
    assert np.all(np.abs(a) <= amp)


@FAST
@given(terms=laurent())
def test_model_dict_round_trip(terms):
    m = single_band(terms)
    m2, _ = model_from_dict(model_to_dict(m))
    assert m2.h == m.h


@FAST
@given(terms=laurent())
def test_derivative_matches_finite_difference(terms):
    p = LaurentPolynomial(terms)
    b = 0.9 * cmath.exp(0.4j)
    h = 1e-6
    fd = (eval_laurent(p, b + h) - eval_laurent(p, b - h)) / (2 * h)
    assert abs(fd - eval_laurent(p.derivative(), b)) < 1e-5 * (1 + abs(fd))
