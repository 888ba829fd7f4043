import math

import numpy as np
import pytest

from nonbloch.bloch import (
    BlochPoint,
    bz_intersection_period,
    closed_form_bloch,
    find_bloch_points,
    kappa_order,
    saddle_order,
)
from nonbloch.errors import DegenerateContourError, NoPeriodError, NoRealBlochPointError, UnsupportedModelError
from nonbloch.gbz import gbz_sweep
from nonbloch.model import single_band, ssh_model

from .conftest import S2A, S2B

PI = math.pi


@pytest.fixture(scope="module")
def found(fig1, fig2, fig3a, fig3b, fig3c, sshb, sshc):
    out = {}
    for m in (fig1, fig2, fig3a, fig3b, fig3c, sshb, sshc):
        c = gbz_sweep(m)
        out[m.name] = (c, find_bloch_points(m, c))
    return out


def _point(points, theta):
    return min(points, key=lambda p: abs(p.theta - theta))


def test_closed_form_fig1():
    (a, b), E = closed_form_bloch(0.25, 1, 1)
    assert a == pytest.approx(PI / 2) and b == pytest.approx(-PI / 2)
    assert E == pytest.approx(-0.25)


def test_closed_form_fig2():
    (a, _), E = closed_form_bloch(1, 1, 1)
    assert a == pytest.approx(PI / 2) and E == pytest.approx(-1)


def test_closed_form_s2b():
    (a, b), E = closed_form_bloch(0.5, 1, (2 + math.sqrt(2)) / 2)
    assert a == pytest.approx(PI / 4) and b == pytest.approx(-PI / 4)
    assert E == pytest.approx(0.5 + math.sqrt(2))


def test_closed_form_out_of_range():
    with pytest.raises(NoRealBlochPointError):
        closed_form_bloch(0.25, 1, 2)
    with pytest.raises(NoRealBlochPointError):
        closed_form_bloch(0, 1, 1)


# frozen reference values: (theta_B list, E_B, l, j) per model
REFERENCE = {
    "fig1": ([-PI / 2, PI / 2], -0.25, 1, 1),
    "fig2": ([-PI / 2, PI / 2, PI], -1.0, 1, 1),
    "fig3a": ([-3 * PI / 4, -PI / 4, PI / 4, 3 * PI / 4], 0.0, 1, 1),
    "fig3b": ([0.0], 3.75, 2, 2),
    "fig3c": ([PI], -3.0, 3, 1),
    "sshb": ([-2 * PI / 3, 2 * PI / 3], 0.7599342077, 1, 1),
    "sshc": ([PI], 0.5454356057, 2, 2),
}


@pytest.mark.parametrize("name", sorted(REFERENCE))
def test_reference_points(found, name):
    thetas, E, l, j = REFERENCE[name]
    _, points = found[name]
    assert np.allclose(sorted(p.theta for p in points), thetas, atol=1e-8)
    for p in points:
        assert abs(p.energy - E) < 1e-8
        assert abs(abs(p.beta) - 1) < 1e-12
        assert p.l == l and p.j == j


def test_fig1_crossing_not_cusp(found):
    p = _point(found["fig1"][1], PI / 2)
    assert p.crossing and not p.cusp and p.kind == "crossing"
    assert p.slope == pytest.approx(0.25, abs=1e-6)


def test_fig3b_tangency(found):
    (p,) = found["fig3b"][1]
    assert not p.crossing and p.kind == "touching"
    assert p.slope < 1e-6


def test_fig3c_one_sided(found):
    (p,) = found["fig3c"][1]
    assert p.cusp and p.side in ("left", "right")


def test_hermitian_degenerate(herm):
    with pytest.raises(DegenerateContourError):
        find_bloch_points(herm, gbz_sweep(herm))


def test_one_sided_skin_effect_has_no_points():
    m = single_band({-1: 0.5, 1: 2})
    assert find_bloch_points(m, gbz_sweep(m)) == []


def test_saddle_orders(fig3a, fig3b, fig3c):
    assert saddle_order(fig3b, 1.0) == 2
    assert saddle_order(fig3c, -1.0) == 3
    assert saddle_order(fig3a, np.exp(1j * PI / 4)) == 1


def test_saddle_order_two_band_zero_energy():
    m = ssh_model(1, 1, 0, 0)
    with pytest.raises(UnsupportedModelError):
        saddle_order(m, -1.0)


def test_saddle_order_needs_unit_beta(fig1):
    with pytest.raises(ValueError):
        saddle_order(fig1, 0.5)


def test_kappa_order_direct(found):
    c, points = found["fig3b"]
    assert kappa_order(c, points[0].theta) == 2


def test_period_s2a_s2b():
    for terms, delta, period in ((S2A, PI, 2), (S2B, PI / 2, 4)):
        m = single_band(terms)
        r = bz_intersection_period(find_bloch_points(m, gbz_sweep(m), classify=False))
        assert r.delta_theta == pytest.approx(delta, abs=1e-9)
        assert r.period == period


def test_period_fig2_prefers_mirrored_pair(found):
    r = bz_intersection_period(found["fig2"][1])
    assert r.delta_theta == pytest.approx(PI) and r.period == 2


def test_period_edge_cases():
    with pytest.raises(NoPeriodError):
        bz_intersection_period([])
    one = BlochPoint(0.0, 1 + 0j, 1 + 0j, 2, 2, 0.0, False, False)
    assert bz_intersection_period([one]).period == 1
    r = bz_intersection_period([], pair=(0.0, 1.0))
    assert r.period is None and r.ratio == pytest.approx(2 * PI)
