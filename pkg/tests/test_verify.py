import numpy as np
import pytest

from nonbloch.errors import DomainError, UnsupportedModelError
from nonbloch.model import DisorderSpec, build_chain, single_band
from nonbloch.spectral import dense_eig
from nonbloch.verify import (
    boundary_determinant,
    boundary_zeros,
    gap_converges,
    matched_distance,
    middle_gap,
    pbc_consistency,
    run_checks,
)


def test_det_vanishes_at_eigenvalues(fig1):
    ev = dense_eig(build_chain(fig1, 12)).values
    assert max(abs(boundary_determinant(fig1, E, 12)) for E in ev) < 1e-6


def test_det_far_from_spectrum(fig1):
    assert abs(boundary_determinant(fig1, 10.0, 12)) > 1e-3


@pytest.mark.parametrize("name", ["fig1", "fig2", "fig3b", "fig3c"])
def test_boundary_zeros_match(request, name):
    m = request.getfixturevalue(name)
    zeros = boundary_zeros(m, 12)
    assert len(zeros) == 12
    assert matched_distance(zeros, dense_eig(build_chain(m, 12)).values) < 1e-6


def test_mirrored_orientation():
    m = single_band({-1: 1, 1: 0.25, 2: 1})
    zeros = boundary_zeros(m, 12)
    assert matched_distance(zeros, dense_eig(build_chain(m, 12)).values) < 1e-6


def test_boundary_oracle_scope(fig3a, sshb):
    with pytest.raises(UnsupportedModelError):
        boundary_zeros(fig3a, 12)
    with pytest.raises(UnsupportedModelError):
        boundary_zeros(sshb, 12)


def test_pbc(fig1, sshb):
    assert pbc_consistency(fig1, 24) < 1e-8
    assert pbc_consistency(sshb, 24) < 1e-8


def test_pbc_refuses_disorder(fig1):
    with pytest.raises(DomainError):
        pbc_consistency(fig1, 24, DisorderSpec(-1, 0.1, 0))


def test_disordered_periodic_chain_deviates(fig1):
    H = build_chain(fig1, 24, "periodic", DisorderSpec(-1, 0.3, 1))
    from nonbloch.model import bloch_energies

    ref = bloch_energies(fig1, 2 * np.pi * np.arange(24) / 24).ravel()
    assert matched_distance(dense_eig(H).values, ref) > 1e-3


def test_middle_gap_shrinks(fig1):
    gaps = [middle_gap(fig1, L) for L in (30, 60, 90)]
    assert gap_converges(gaps)


def test_gap_converges_rules():
    assert gap_converges([1e-3, 1e-4, 1e-5])
    assert not gap_converges([1e-3, 1e-2])
    assert gap_converges([1e-12, 3e-12])


@pytest.mark.parametrize("name", ["fig1", "fig3a", "sshb"])
def test_run_checks_pass(request, name):
    res = run_checks(request.getfixturevalue(name))
    assert all(r.passed for r in res), res
