import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIGURE_CONFIGS, random_configs, random_density, random_hermitian, reduced_random
from wgheat.generator import (DensityMatrix, DensityMatrixError, ReducedState, build_generator,
                              build_hamiltonian, embed, project, reduced_rhs, sigma, unvec, vec)
from wgheat.model import ALL_TRANSITIONS, SystemConfig, bose_occupation, fig2_config
from wgheat.solver import EvolveOptions, evolve


def lindblad_direct(config: SystemConfig, rho: np.ndarray) -> np.ndarray:
    """Master-equation right-hand side from matrix products only."""
    H = build_hamiltonian(config)
    out = -1j * (H @ rho - rho @ H)
    for t in ALL_TRANSITIONS:
        g = config.decay_rate(t)
        if g == 0:
            continue
        n = config.occupation(t)
        l, p = t.upper, t.lower
        down, up = sigma(p, l), sigma(l, p)
        Pl, Pp = sigma(l, l), sigma(p, p)
        out += g * (n + 1) * (down @ rho @ up - 0.5 * (Pl @ rho + rho @ Pl))
        out += g * n * (up @ rho @ down - 0.5 * (Pp @ rho + rho @ Pp))
    return out


def test_undriven_hamiltonian_is_diagonal():
    cfg = fig2_config().replace(rabi42=0.0)
    H = build_hamiltonian(cfg)
    w1, w2, w3, w4 = cfg.omega
    l42, l43 = cfg.laser_freq
    np.testing.assert_array_equal(H, np.diag([w1, w2 + l42, w3 + l43, w4]))


def test_fig2_hamiltonian_entries():
    H = build_hamiltonian(fig2_config())
    assert H[3, 1] == 1.0 and H[1, 3] == 1.0
    # resonant lasers lift levels 2 and 3 onto level 4: 50 + (70 - 50)
    np.testing.assert_array_equal(np.diag(H).real, [0.0, 70.0, 70.0, 70.0])


@pytest.mark.parametrize("cfg", random_configs(10, seed=1))
def test_hamiltonian_hermitian(cfg):
    H = build_hamiltonian(cfg)
    np.testing.assert_array_equal(H, H.conj().T)


def test_superop_matches_direct_lindblad(figure_config):
    rng = np.random.default_rng(7)
    gen = build_generator(figure_config)
    for _ in range(20):
        X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        np.testing.assert_allclose(gen.apply(X), lindblad_direct(figure_config, X), atol=1e-12)


@pytest.mark.parametrize("cfg", random_configs(20, seed=3))
def test_superop_matches_direct_lindblad_random(cfg):
    rng = np.random.default_rng(8)
    gen = build_generator(cfg)
    X = random_hermitian(rng)
    np.testing.assert_allclose(gen.apply(X), lindblad_direct(cfg, X), atol=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_and_hermiticity_preserved(seed):
    rng = np.random.default_rng(seed)
    cfg = random_configs(1, seed=seed)[0]
    gen = build_generator(cfg)
    X = random_hermitian(rng)
    Y = gen.apply(X)
    scale = max(1.0, np.abs(Y).max())
    assert abs(np.trace(Y)) < 1e-12 * scale
    assert np.abs(Y - Y.conj().T).max() < 1e-12 * scale


def test_no_dissipation_no_drive_annihilates_diagonal_states():
    cfg = fig2_config().replace(gamma21=0, gamma31=0, gamma42=0, gamma43=0, rabi42=0)
    gen = build_generator(cfg)
    rng = np.random.default_rng(0)
    for _ in range(5):
        rho = np.diag(rng.uniform(size=4)).astype(complex)
        assert np.abs(gen.apply(rho)).max() == 0.0


@pytest.mark.parametrize("T", [0.5, 3.0, 10.0, 40.0])
def test_gibbs_state_is_fixed_point_at_equal_temperatures(T):
    cfg = fig2_config().replace(rabi42=0.0, temp1=T, temp2=T)
    w = np.array(cfg.omega)
    gibbs = np.diag(np.exp(-w / T) / np.exp(-w / T).sum()).astype(complex)
    gen = build_generator(cfg)
    assert np.linalg.norm(gen.superop @ vec(gibbs)) < 1e-12
    red = reduced_rhs(cfg, project(gibbs))
    assert np.abs(red.to_array()).max() < 1e-12


def test_fig2_superop_has_one_dimensional_null_space():
    s = np.linalg.svd(build_generator(fig2_config()).superop, compute_uv=False)
    tol = 1e-10 * s[0]
    assert np.sum(s > tol) == 15
    assert s[-2] > 0.1


def test_reduced_rhs_diagonal_state_population_equation():
    cfg = fig2_config(temp1=4.0, temp2=7.0).replace(rabi42=0.0)
    p = np.array([0.4, 0.3, 0.2, 0.1])
    d = reduced_rhs(cfg, ReducedState(*p, 0j, 0j, 0j))
    n21 = bose_occupation(50.0, 4.0)
    n31 = bose_occupation(50.0, 7.0)
    gamma21 = 1.0 * ((n21 + 1) * p[1] - n21 * p[0])
    gamma31 = 1.0 * ((n31 + 1) * p[2] - n31 * p[0])
    assert d.rho11 == pytest.approx(gamma21 + gamma31, rel=1e-14)


@pytest.mark.parametrize("T2", [0.5, 1.0, 5.0, 10.0, 100.0])
def test_ideal_diode_state_is_fixed_point(T2):
    cfg = fig2_config(temp1=0.0, temp2=T2)
    n = bose_occupation(50.0, T2)
    state = ReducedState((n + 1) / (2 * n + 1), 0.0, n / (2 * n + 1), 0.0, 0j, 0j, 0j)
    d = reduced_rhs(cfg, state)
    assert np.abs(d.to_array()).max() < 1e-15
    assert np.abs(build_generator(cfg).apply(embed(state))).max() < 1e-15


def test_reduced_agrees_with_full_generator(figure_config):
    rng = np.random.default_rng(11)
    gen = build_generator(figure_config)
    for _ in range(100):
        s = reduced_random(rng)
        full = project(gen.apply(embed(s)))
        red = reduced_rhs(figure_config, s)
        np.testing.assert_allclose(red.to_array(), full.to_array(), rtol=0, atol=1e-12)


@pytest.mark.parametrize("cfg", random_configs(10, seed=5))
def test_reduced_agrees_with_full_generator_detuned(cfg):
    rng = np.random.default_rng(12)
    gen = build_generator(cfg)
    for _ in range(10):
        s = reduced_random(rng)
        np.testing.assert_allclose(reduced_rhs(cfg, s).to_array(),
                                   project(gen.apply(embed(s))).to_array(), atol=1e-12)


def test_reduced_population_derivatives_sum_to_zero(figure_config):
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = reduced_rhs(figure_config, reduced_random(rng))
        assert abs(d.rho11 + d.rho22 + d.rho33 + d.rho44) < 1e-15


def test_untracked_coherences_stay_zero_under_full_evolution(figure_config):
    rng = np.random.default_rng(21)
    gen = build_generator(figure_config)
    for _ in range(3):
        rho0 = embed(reduced_random(rng))
        traj = evolve(gen, rho0, EvolveOptions(t_final=30.0, samples=50))
        for i, j in [(1, 0), (2, 0), (3, 0)]:
            assert np.abs(traj.states[:, i, j]).max() < 1e-10
            assert np.abs(traj.states[:, j, i]).max() < 1e-10


def test_ground_state_round_trips():
    g = DensityMatrix.ground()
    s = project(g)
    assert s == ReducedState(1.0, 0.0, 0.0, 0.0, 0j, 0j, 0j)
    np.testing.assert_array_equal(embed(s).rho, g.rho)


def test_embed_ideal_state_is_valid_density_matrix():
    n = bose_occupation(50.0, 10.0)
    rho = embed(ReducedState((n + 1) / (2 * n + 1), 0.0, n / (2 * n + 1), 0.0, 0j, 0j, 0j))
    assert isinstance(rho, DensityMatrix)
    assert np.linalg.eigvalsh(rho.rho).min() >= 0
    assert np.trace(rho.rho) == pytest.approx(1.0, abs=1e-15)


def test_project_embed_identity():
    rng = np.random.default_rng(99)
    for _ in range(100):
        s = ReducedState.from_array(rng.normal(size=7) + 1j * np.r_[np.zeros(4), rng.normal(size=3)])
        assert project(embed(s, as_state=False)) == s


def test_embed_rejects_unnormalized_state():
    with pytest.raises(DensityMatrixError):
        embed(ReducedState(0.5, 0.1, 0.1, 0.1, 0j, 0j, 0j))
    # as a derivative it is fine
    embed(ReducedState(0.5, 0.1, 0.1, 0.1, 0j, 0j, 0j), as_state=False)


def test_density_matrix_invariants():
    rng = np.random.default_rng(4)
    DensityMatrix(random_density(rng))
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.diag([1.2, -0.2, 0, 0]))
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.diag([0.5, 0.4, 0, 0]))
    bad = np.diag([0.5, 0.5, 0, 0]).astype(complex)
    bad[0, 1] = 0.1
    with pytest.raises(DensityMatrixError):
        DensityMatrix(bad)


def test_vec_is_column_stacking():
    X = np.arange(16).reshape(4, 4)
    v = vec(X)
    assert v[1] == X[1, 0] and v[4] == X[0, 1]
    np.testing.assert_array_equal(unvec(v), X)


def test_figure_configs_importable():
    assert set(FIGURE_CONFIGS) == {"fig2", "fig3a", "fig3c", "fig4", "fig5"}
