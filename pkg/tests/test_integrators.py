"""Stepper behavior: retractions, exact mode closures, splitting order."""

import numpy as np
import pytest

from psilab.discretize import build_xgrid
from psilab.harness import (
    VERIFY_SCHEMES,
    build_vdisc,
    complex_mode_state,
    expected_mode_multiplier,
    measured_mode_multiplier,
    parabolic_mode_equivalence,
    parse_scheme_name,
)
from psilab.integrators import (
    SchemeSpec,
    init_lowrank,
    orthonormality_residual,
    reconstruct,
    step,
)
from psilab.linalg import frobenius_norm

_NX, _NV = 16, 4
_GRID = build_xgrid(_NX, 2.0 * np.pi / _NX)


def _vdisc_for(name):
    return build_vdisc("linear" if name.startswith("hyp") else "square", "nodal", _NV)


@pytest.mark.parametrize("name", VERIFY_SCHEMES)
def test_zero_dt_is_identity(name):
    spec = parse_scheme_name(name).spec
    vdisc = _vdisc_for(name)
    rng = np.random.default_rng(11)
    u0 = rng.standard_normal((_NX, _NV))
    if spec.approach == "full_tensor":
        after = step(spec, u0.copy(), vdisc, _GRID, 0.0).state_after
        np.testing.assert_allclose(after, u0, atol=1e-14)
    else:
        state = init_lowrank(u0, 3)
        before = reconstruct(state)
        after = reconstruct(step(spec, state, vdisc, _GRID, 0.0).state_after)
        np.testing.assert_allclose(after, before, atol=1e-13)


def test_init_lowrank_exact_on_low_rank_input():
    rng = np.random.default_rng(5)
    u0 = rng.standard_normal((_NX, 2)) @ rng.standard_normal((2, _NV))
    state = init_lowrank(u0, 2)
    np.testing.assert_allclose(reconstruct(state), u0, atol=1e-12)
    assert orthonormality_residual(state) < 1e-13


def test_init_lowrank_completes_deficient_input():
    # requested rank exceeds the actual rank: factors must stay orthonormal
    col = np.linspace(0.0, 1.0, _NX)
    u0 = np.outer(col, np.ones(_NV))
    state = init_lowrank(u0, 3)
    assert state.X.shape == (_NX, 3) and state.V.shape == (_NV, 3)
    np.testing.assert_allclose(reconstruct(state), u0, atol=1e-13)
    assert orthonormality_residual(state) < 1e-13


def test_init_lowrank_zero_matrix():
    state = init_lowrank(np.zeros((_NX, _NV)), 2)
    np.testing.assert_allclose(reconstruct(state), 0.0, atol=1e-15)
    assert orthonormality_residual(state) < 1e-13


def test_step_report_norms_match_states():
    spec = parse_scheme_name("hyp-dtp-lie-fe").spec
    vdisc = _vdisc_for("hyp")
    state = init_lowrank(np.random.default_rng(2).standard_normal((_NX, _NV)), 3)
    report = step(spec, state, vdisc, _GRID, 1e-2)
    assert report.frobenius_before == pytest.approx(frobenius_norm(reconstruct(state)))
    assert report.frobenius_after == pytest.approx(
        frobenius_norm(reconstruct(report.state_after))
    )


_SPOT_MODES = [(0, 0), (1, 2), (5, 0), (8, 3), (15, 1)]


@pytest.mark.parametrize(
    "name", ["hyp-dtp-lie-fe", "hyp-ptd-strang-rk2", "par-hybrid", "par-strang-cn"]
)
@pytest.mark.parametrize("m,k", _SPOT_MODES)
def test_complex_mode_closure(name, m, k):
    """One step on x_m v_k^T multiplies it by the closed-form G and nothing
    else; the mode stays rank 1 in exact arithmetic."""
    spec = parse_scheme_name(name).spec
    vdisc = _vdisc_for(name)
    dt = 0.2 * _GRID.dx / float(np.abs(vdisc.spectrum.eigenvalues).max())
    if spec.equation == "parabolic":
        dt *= _GRID.dx
    measured = measured_mode_multiplier(spec, m, k, vdisc, _GRID, dt)
    expected = expected_mode_multiplier(spec, m, k, vdisc, _GRID, dt)
    assert abs(measured - expected) < 1e-12


def test_complex_mode_state_is_unit_rank_one():
    vdisc = _vdisc_for("hyp")
    state = complex_mode_state(3, 1, vdisc, _GRID)
    assert state.S.shape == (1, 1)
    dense = reconstruct(state)
    assert np.linalg.matrix_rank(dense) == 1


@pytest.mark.parametrize("theta", [0.0, 0.5, 1.0])
def test_parabolic_formulations_agree_per_mode(theta):
    assert parabolic_mode_equivalence(theta, n_x=_NX, n_v=_NV) <= 1e-12


def _one_step_gap(low_name, full_name, coeff, dt, u0):
    grid = _GRID
    vdisc = build_vdisc(coeff, "nodal", _NV)
    low = parse_scheme_name(low_name).spec
    full = parse_scheme_name(full_name).spec
    state = init_lowrank(u0, _NV)  # full rank: the gap is pure splitting error
    a = reconstruct(step(low, state, vdisc, grid, dt).state_after)
    b = step(full, u0.copy(), vdisc, grid, dt).state_after
    return frobenius_norm(a - b)


@pytest.mark.parametrize("low", ["hyp-dtp-lie-fe", "hyp-ptd-lie-fe"])
def test_lie_splitting_gap_is_second_order(low):
    u0 = np.random.default_rng(3).standard_normal((_NX, _NV))
    coarse = _one_step_gap(low, "hyp-full-fe", "linear", 2e-3, u0)
    fine = _one_step_gap(low, "hyp-full-fe", "linear", 1e-3, u0)
    assert coarse / fine == pytest.approx(4.0, abs=0.4)


@pytest.mark.parametrize("theta", [0.0, 1.0])
def test_parabolic_lie_splitting_gap_is_second_order(theta):
    u0 = np.random.default_rng(3).standard_normal((_NX, _NV))
    name = f"par-dtp-lie-theta{theta:g}"
    coarse = _one_step_gap(name, f"par-full-theta{theta:g}", "square", 2e-3, u0)
    fine = _one_step_gap(name, f"par-full-theta{theta:g}", "square", 1e-3, u0)
    assert coarse / fine == pytest.approx(4.0, abs=0.4)


def test_crank_nicolson_splitting_telescopes_at_full_rank():
    # theta = 1/2 is special: the K and S factors cancel and the split
    # update equals the unsplit one exactly, not just to second order
    u0 = np.random.default_rng(3).standard_normal((_NX, _NV))
    for dt in (2e-3, 1e-3):
        gap = _one_step_gap("par-dtp-lie-theta0.5", "par-full-theta0.5", "square", dt, u0)
        assert gap < 1e-12


def test_strang_splitting_gap_is_third_order():
    rng = np.random.default_rng(3)
    u0 = rng.standard_normal((_NX, _NV))
    vdisc = build_vdisc("linear", "nodal", _NV)
    low = parse_scheme_name("hyp-dtp-strang-rk2").spec
    lam, lam_abs = vdisc.coeff, vdisc.coeff_abs

    def rhs(u):
        adv = _GRID.m_alpha @ u @ lam.T / (2.0 * _GRID.dx)
        dif = _GRID.m_beta @ u @ lam_abs.T / (2.0 * _GRID.dx)
        return dif - adv

    gaps = []
    for dt in (2e-3, 1e-3):
        state = init_lowrank(u0, _NV)
        a = reconstruct(step(low, state, vdisc, _GRID, dt).state_after)
        u1 = u0 + dt * rhs(u0)
        b = 0.5 * (u0 + u1 + dt * rhs(u1))  # unsplit ssp-rk2 comparator
        gaps.append(frobenius_norm(a - b))
    assert gaps[0] / gaps[1] == pytest.approx(8.0, abs=0.8)


def test_orthonormality_survives_many_steps():
    spec = parse_scheme_name("hyp-dtp-lie-fe").spec
    vdisc = _vdisc_for("hyp")
    dt = 0.3 * _GRID.dx / float(np.abs(vdisc.spectrum.eigenvalues).max())
    state = init_lowrank(np.random.default_rng(9).standard_normal((_NX, _NV)), 3)
    worst = 0.0
    for _ in range(300):
        state = step(spec, state, vdisc, _GRID, dt).state_after
        worst = max(worst, orthonormality_residual(state))
    assert worst < 1e-12


def test_scheme_spec_validation():
    with pytest.raises(ValueError, match="equation"):
        SchemeSpec(equation="elliptic", approach="dtp")
    with pytest.raises(ValueError, match="theta"):
        SchemeSpec(equation="hyperbolic", approach="dtp", theta=0.5)
    with pytest.raises(ValueError, match="ssp_rk2"):
        SchemeSpec(equation="parabolic", approach="dtp", substep="ssp_rk2")
    with pytest.raises(ValueError):
        SchemeSpec(equation="hyperbolic", approach="dtp", splitting="strang",
                   substep="forward_euler")
