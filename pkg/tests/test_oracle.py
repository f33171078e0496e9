import math

import numpy as np
import pytest

import config
from errors import DimensionCap
from fock.states import PlusMinusState, SectorSpec
from fock.transforms import fock_in_plusminus, plusminus_to_number
from oracle.dense import (DenseFockSpace, dense_conditioned_state, dense_two_mode_operators, dense_unitary_evolve,
                          phase_aligned_distance)
from oracle.lindblad import (AveragedDensityMatrix, detection_block_mask, embed_state, fock_density_matrix,
                             lindblad_evolve, mean_trapped_number, trajectory_density_matrix)
from trajectories.ensemble import TrajectoryEnsemble
from trajectories.qmc import ContinuousParams


@pytest.fixture(scope="module")
def small_space():
    return DenseFockSpace((6, 6))


def test_space_indexing_round_trip():
    space = DenseFockSpace((2, 3, 1))
    assert space.dims == (3, 4, 2)
    assert space.size == 24
    occupations = space.occupations()
    for i, occ in enumerate(occupations):
        assert space.index(occ) == i
    np.testing.assert_allclose(space.number(1).diagonal(), occupations[:, 1])


def test_dimension_cap():
    with pytest.raises(DimensionCap):
        DenseFockSpace((200, 200, 200))
    with pytest.raises(ValueError):
        DenseFockSpace((2, -1))


def test_two_mode_ladder_operators():
    ops = dense_two_mode_operators(4)
    b1 = ops["b1"]
    commutator = b1 @ b1.T - b1.T @ b1
    # exact below the cutoff
    space = ops["space"]
    inner = space.occupations()[:, 0] < 4
    np.testing.assert_allclose(np.diag(commutator)[inner], 1.0)
    np.testing.assert_array_equal(ops["hopping"], ops["hopping"].T)


def test_unitary_evolution_conserves_norm_and_number():
    space, state = dense_unitary_evolve(2, 1, 0.6, 0.8, 0.7)
    assert np.linalg.norm(state) == pytest.approx(1.0, abs=1e-12)
    totals = space.occupations().sum(axis=1)
    assert np.all(np.abs(state[totals != 3]) < 1e-12)


def test_zero_time_evolution_is_trivial():
    space, state = dense_unitary_evolve(2, 2, 0.7, 0.7, 0.0)
    np.testing.assert_allclose(state, space.fock_vector((2, 2, 0)), atol=1e-15)


def test_conditioned_state_is_normalized():
    amps = dense_conditioned_state(3, 3, 2, 1.0, 0.2)
    assert amps.shape == (5,)
    assert np.linalg.norm(amps) == pytest.approx(1.0)


def test_phase_aligned_distance_ignores_global_phase():
    rng = np.random.default_rng(3)
    a = rng.normal(size=6) + 1j * rng.normal(size=6)
    assert phase_aligned_distance(a, np.exp(0.7j) * a) < 1e-14
    assert phase_aligned_distance(a, -a) < 1e-14
    assert phase_aligned_distance(a, a[::-1]) > 1e-3
    with pytest.raises(ValueError):
        phase_aligned_distance(a, a[:3])


def test_embedding_keeps_number_amplitudes(small_space):
    sector = SectorSpec(2, 1)
    state = PlusMinusState.eigenstate(sector, 2)
    vector = embed_state(small_space, state)
    assert np.linalg.norm(vector) == pytest.approx(1.0)
    number = plusminus_to_number(state)
    for k in range(4):
        assert vector[small_space.index((k, 3 - k))] == pytest.approx(number.amps[k])


def test_master_equation_preserves_trace_and_positivity(small_space):
    rho0 = fock_density_matrix(small_space, 3, 3)
    rho = lindblad_evolve(rho0, 1.0, 0.4, small_space)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(rho).min() > -config.LINDBLAD_POSITIVITY_TOL


@pytest.mark.parametrize("t", [0.05, 0.3, 1.0])
def test_symmetric_mode_decays_exponentially(small_space, t):
    # <n+> decays as exp(-2Wt) and <n-> is conserved; |N, N> has <n+> = N
    rho = lindblad_evolve(fock_density_matrix(small_space, 3, 3), 1.0, t, small_space)
    expected = 6.0 - 3.0 * (1.0 - math.exp(-2.0 * t))
    assert mean_trapped_number(small_space, rho) == pytest.approx(expected, abs=1e-7)


def test_no_evolution_returns_copy(small_space):
    rho0 = fock_density_matrix(small_space, 1, 2)
    rho = lindblad_evolve(rho0, 1.0, 0.0, small_space)
    np.testing.assert_array_equal(rho, rho0)
    assert rho is not rho0


def test_master_equation_rejects_wrong_shape(small_space):
    with pytest.raises(ValueError):
        lindblad_evolve(np.eye(3), 1.0, 0.1, small_space)


def test_average_of_identical_states_is_exact(small_space):
    state = fock_in_plusminus(SectorSpec(3, 3))
    averaged = trajectory_density_matrix([state] * 5, small_space)
    np.testing.assert_allclose(averaged.mean, fock_density_matrix(small_space, 3, 3), atol=1e-14)
    assert np.all(averaged.stderr_real < 1e-12)
    assert averaged.samples == 5
    with pytest.raises(ValueError):
        trajectory_density_matrix([state], small_space)


def test_agreement_uses_standard_errors():
    mean = np.array([[0.5, 0.0], [0.0, 0.5]], dtype=complex)
    stderr = np.full((2, 2), 0.01)
    averaged = AveragedDensityMatrix(mean, stderr, stderr, samples=1000)
    assert averaged.agrees_with(mean + 0.025, sigmas=3.0)
    assert not averaged.agrees_with(mean + 0.035, sigmas=3.0)
    assert averaged.worst_deviation(mean + 0.035) == pytest.approx(0.035 / math.hypot(0.01, 0.01))


def test_zero_variance_elements_get_only_numerical_slack():
    mean = np.eye(2, dtype=complex) / 2
    exact = AveragedDensityMatrix(mean, np.zeros((2, 2)), np.zeros((2, 2)), samples=100)
    assert exact.agrees_with(mean + 1e-10)
    assert not exact.agrees_with(mean + 1e-6)
    assert exact.worst_deviation(mean + 1e-6) == math.inf
    assert exact.worst_deviation(mean) == 0.0


def test_mask_restricts_the_comparison():
    mean = np.eye(2, dtype=complex) / 2
    averaged = AveragedDensityMatrix(mean, np.full((2, 2), 0.01), np.full((2, 2), 0.01), samples=100)
    shifted = mean.copy()
    shifted[1, 1] += 0.5
    mask = np.array([[True, True], [True, False]])
    assert not averaged.agrees_with(shifted)
    assert averaged.agrees_with(shifted, mask=mask)


def test_detection_block_mask_selects_sectors(small_space):
    mask = detection_block_mask(small_space, 6, 2)
    totals = small_space.occupations().sum(axis=1)
    inside = (totals >= 4) & (totals <= 6)
    assert inside.sum() == 5 + 6 + 7
    np.testing.assert_array_equal(mask, np.outer(inside, inside))
    assert mask[small_space.index((3, 3)), small_space.index((2, 2))]
    assert not mask[small_space.index((3, 3)), small_space.index((1, 2))]


@pytest.mark.slow
def test_trajectory_average_matches_master_equation():
    atoms = config.ORACLE_LINDBLAD_N
    sector = SectorSpec(atoms, atoms)
    space = DenseFockSpace((sector.n_tot, sector.n_tot))
    W, t_final = 1.0, config.ORACLE_LINDBLAD_WT
    rho = lindblad_evolve(fock_density_matrix(space, atoms, atoms), W, t_final, space)
    result = TrajectoryEnsemble(sector, ContinuousParams(W=W, nu=1, seed=42)).run(
        config.ORACLE_TRAJECTORIES, t_final=t_final)
    assert not result.stalled
    averaged = trajectory_density_matrix((r.final_state for r in result.records), space)
    mask = detection_block_mask(space, sector.n_tot, config.ORACLE_LINDBLAD_MAX_DETECTIONS)
    assert averaged.agrees_with(rho, sigmas=config.ORACLE_LINDBLAD_SIGMAS, mask=mask)


@pytest.mark.slow
def test_long_window_empties_the_condensate_at_the_master_equation_rate():
    sector = SectorSpec(3, 3)
    space = DenseFockSpace((6, 6))
    W, t_final, size = 1.0, 2.0, 20_000
    rho = lindblad_evolve(fock_density_matrix(space, 3, 3), W, t_final, space)
    result = TrajectoryEnsemble(sector, ContinuousParams(W=W, nu=1, seed=8)).run(size, t_final=t_final)
    assert not result.stalled

    left = np.array([r.final_state.sector.n_tot for r in result.records], dtype=float)
    vacuum = float(np.mean(left == 0))
    expected_vacuum = rho[space.index((0, 0)), space.index((0, 0))].real
    assert expected_vacuum > 0.1
    assert abs(vacuum - expected_vacuum) <= 3.0 * math.sqrt(expected_vacuum * (1 - expected_vacuum) / size)

    expected_number = mean_trapped_number(space, rho)
    assert abs(left.mean() - expected_number) <= 3.0 * left.std(ddof=1) / math.sqrt(size)
