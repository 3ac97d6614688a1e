import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gaussian_entropy
from shakhov.linear import from_perturbation, global_maxwellian
from shakhov.moments import MacroState, compute_macro
from shakhov.operator import (
    H_FLOOR,
    ModelParams,
    cancellation_residual,
    centered_third_moment,
    h_functional,
    maxwellian,
    positivity_report,
    relaxation_time,
    shakhov_apply,
    shakhov_target,
)
from shakhov.sampling import random_distributions, random_perturbations

PRS = [0.0, 1 / 3, 2 / 3, 1.0, 1.5]


def closed_form_maxwellian(v, rho, U, T):
    return rho / (2 * np.pi * T) ** 1.5 * np.exp(-np.sum((v - U) ** 2, axis=-1) / (2 * T))


@pytest.mark.parametrize(
    "kwargs, msg",
    [(dict(pr=-0.5), "pr must be >= 0"), (dict(tau0=0.0), "tau0 must be > 0"), (dict(eta=-1.0), "eta must be >= 0")],
)
def test_model_params_invariants(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        ModelParams(**kwargs)


def test_maxwellian_at_equilibrium_is_m(grid):
    assert np.allclose(maxwellian(MacroState.equilibrium(), grid), global_maxwellian(grid), rtol=1e-14, atol=0)


def test_maxwellian_matches_closed_form(grid):
    U = np.array([0.3, 0.0, 0.0])
    s = MacroState.from_fields(2.0, U, 1.5 * np.eye(3), np.zeros(3))
    M = maxwellian(s, grid)
    assert np.allclose(M, closed_form_maxwellian(grid.nodes, 2.0, U, 1.5), rtol=1e-13, atol=1e-300)
    # peak value: place the bulk velocity on a node
    k = 1234
    s = MacroState.from_fields(2.0, grid.nodes[k], 1.5 * np.eye(3), np.zeros(3))
    assert maxwellian(s, grid)[k] == pytest.approx(2.0 / (3 * np.pi) ** 1.5, rel=1e-14)
    assert closed_form_maxwellian(np.array([0.3, 0, 0]), 2.0, U, 1.5) == pytest.approx(2.0 / (3 * np.pi) ** 1.5)


@settings(max_examples=25, deadline=None)
@given(rho=st.floats(0.5, 2.0), u=st.tuples(*[st.floats(-0.5, 0.5)] * 3), T=st.floats(0.8, 1.25))
def test_maxwellian_mass(grid, rho, u, T):
    s = MacroState.from_fields(rho, np.array(u), T * np.eye(3), np.zeros(3))
    assert np.sum(maxwellian(s, grid)) * grid.cell_volume == pytest.approx(rho, abs=1e-8)


def test_maxwellian_rejects_bad_state(grid):
    with pytest.raises(ValueError, match="T > 0"):
        maxwellian(MacroState.from_fields(1.0, np.zeros(3), -np.eye(3), np.zeros(3)), grid)


@pytest.mark.parametrize("pr", PRS)
def test_shakhov_of_m_is_m(grid, pr):
    m = global_maxwellian(grid)
    assert np.abs(shakhov_apply(m, ModelParams(pr=pr), grid) - m).max() <= 1e-12


def test_bgk_reduction_is_bitwise(grid, rng):
    F = random_distributions(rng, grid, 5)
    S = shakhov_apply(F, ModelParams(pr=1.0), grid)
    assert np.array_equal(S, maxwellian(compute_macro(F, grid), grid))


def test_pr0_target_carries_full_heat_flux(grid):
    v = grid.nodes
    F = global_maxwellian(grid) * (1 + 0.05 * v[:, 0] * (grid.speed2 - 5))
    s = compute_macro(F, grid)
    S = shakhov_apply(F, ModelParams(pr=0.0), grid)
    c = v - s.U
    w = grid.cell_volume
    assert np.sum(S) * w == pytest.approx(s.rho, abs=1e-6)
    assert np.allclose(w * (S[:, None] * c).sum(axis=0), 0, atol=1e-6)
    assert w * np.sum(S * np.sum(c * c, axis=1)) == pytest.approx(3 * s.rho * s.T, abs=1e-6)
    assert np.allclose(centered_third_moment(S, s, grid), s.q, atol=1e-6)


@pytest.mark.parametrize("pr", PRS)
def test_cancellation_on_random_states(grid, pr):
    F = random_distributions(np.random.default_rng(7), grid, 100)
    s = compute_macro(F, grid)
    r = np.abs(cancellation_residual(F, ModelParams(pr=pr), grid)).max(axis=1)
    assert np.all(r <= 1e-6 * (1 + np.linalg.norm(s.q, axis=1)))


@pytest.mark.parametrize("pr", PRS)
def test_conservation_identities(grid, pr):
    F = random_distributions(np.random.default_rng(8), grid, 50)
    s = compute_macro(F, grid)
    S = shakhov_target(s, pr, grid)
    w = grid.cell_volume
    c = grid.nodes[None] - s.U[:, None]
    assert np.abs(S.sum(axis=1) * w - s.rho).max() <= 1e-6
    assert np.abs(w * np.einsum("bk,bki->bi", S, c)).max() <= 1e-6
    assert np.abs(w * np.einsum("bk,bk->b", S, np.sum(c * c, axis=2)) - 3 * s.rho * s.T).max() <= 1e-6


def test_cancellation_of_m_vanishes(grid):
    assert np.abs(cancellation_residual(global_maxwellian(grid), ModelParams(), grid)).max() <= 1e-13


def test_relaxation_time_examples():
    unit = MacroState.equilibrium()
    for eta, w in [(0, 0), (1, 0.5), (2, 3)]:
        assert relaxation_time(unit, ModelParams(eta=eta, w=w)) == 1.0
    s = MacroState.from_fields(2.0, np.zeros(3), 1.5 * np.eye(3), np.zeros(3))
    assert relaxation_time(s, ModelParams(eta=1, w=0.5)) == pytest.approx(2 * np.sqrt(1.5), rel=1e-15)
    assert relaxation_time(s, ModelParams(tau0=0.5)) == pytest.approx(2 * relaxation_time(s, ModelParams()))


def test_h_of_maxwellians(grid):
    assert h_functional(global_maxwellian(grid), grid) == pytest.approx(-1.5 * np.log(2 * np.pi) - 1.5, abs=1e-6)
    assert h_functional(global_maxwellian(grid), grid) == pytest.approx(-4.256815, abs=1e-6)
    M2 = maxwellian(MacroState.from_fields(2.0, np.zeros(3), np.eye(3), np.zeros(3)), grid)
    assert h_functional(M2, grid) == pytest.approx(gaussian_entropy(2.0, 1.0), abs=1e-6)
    assert gaussian_entropy(2.0, 1.0) == pytest.approx(2 * (np.log(2) - 1.5 * np.log(2 * np.pi) - 1.5))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eps=st.floats(1e-3, 0.05))
def test_gibbs_inequality(grid, basis, seed, eps):
    f = eps * random_perturbations(np.random.default_rng(seed), grid, 1)[0]
    F = from_perturbation(f, basis)
    M = maxwellian(compute_macro(F, grid), grid)
    assert h_functional(F, grid) >= h_functional(M, grid) - 1e-12


def test_h_clamps_nonpositive_values(grid):
    F = global_maxwellian(grid).copy()
    F[:10] = -1e-3
    F[10:20] = 0.0
    h = h_functional(F, grid)
    assert np.isfinite(h)
    G = F.copy()
    G[:20] = H_FLOOR
    assert h == h_functional(G, grid)


def test_positivity_at_equilibrium(grid):
    m = global_maxwellian(grid)
    rep = positivity_report(m, m)
    assert rep.min_F == rep.min_S == m.min() > 0
    assert not rep.flagged


def test_large_heat_flux_makes_target_negative(grid):
    v = grid.nodes
    F = global_maxwellian(grid) * (1 + 0.5 * v[:, 0] * (grid.speed2 - 5))
    S = shakhov_apply(F, ModelParams(pr=0.0), grid)
    rep = positivity_report(F, S)
    assert rep.min_S < 0 and rep.flagged
    assert S[rep.argmin_S[1]] == rep.min_S


def test_shakhov_target_batch_matches_single(grid, rng):
    F = random_distributions(rng, grid, 3)
    s = compute_macro(F, grid)
    batch = shakhov_target(s, 2 / 3, grid)
    for b in range(3):
        assert np.allclose(batch[b], shakhov_target(s.cell(b), 2 / 3, grid), rtol=1e-13, atol=1e-300)
