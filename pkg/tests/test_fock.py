import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy.special import comb, gammaln

from conftest import normalized_states
from fock.combinatorics import LogCombinatorics, log_combinatorics, signed_log_add, signed_log_to_linear
from fock.histogram import CountHistogram
from fock.states import NumberBasisState, PlusMinusState, SectorSpec, number_difference_values
from fock.transforms import (cosphi_eigenvalues, cosphi_expectation, cosphi_spectrum, fock_in_plusminus,
                             number_to_plusminus, plusminus_matrix, plusminus_to_number)
from oracle.dense import dense_plusminus_transform, sector_hopping


@pytest.mark.parametrize("n, expected", [(1, [-1.0, 0.0, 1.0]), (2, [-1.0, -0.5, 0.0, 0.5, 1.0])])
def test_balanced_spectrum(n, expected):
    np.testing.assert_allclose(cosphi_spectrum(SectorSpec(n, n)), expected, atol=1e-15)


@pytest.mark.parametrize("n1, n2", [(1, 1), (2, 2), (10, 10), (2, 1), (5, 3)])
def test_spectrum_matches_dense_diagonalization(n1, n2):
    sector = SectorSpec(n1, n2)
    hopping = sector_hopping(sector.n_tot)
    dense = np.linalg.eigvalsh((hopping + hopping.T) / sector.cos_phi_scale)
    np.testing.assert_allclose(cosphi_spectrum(sector), dense, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 10, 100])
def test_balanced_spectrum_is_symmetric_with_unit_extremes(n):
    values = cosphi_eigenvalues(SectorSpec(n, n))
    np.testing.assert_allclose(values, -values[::-1], atol=1e-15)
    assert values[0] == -1.0
    assert values[-1] == 1.0
    np.testing.assert_allclose(values, -1.0 + np.arange(2 * n + 1) / n, atol=1e-12)


def test_single_atom_in_mode_one_splits_evenly():
    state = number_to_plusminus(NumberBasisState.fock(SectorSpec(1, 0)))
    np.testing.assert_allclose(state.amps, [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)
    np.testing.assert_allclose(plusminus_matrix(1), [[-1 / math.sqrt(2), 1 / math.sqrt(2)],
                                                     [1 / math.sqrt(2), 1 / math.sqrt(2)]], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 10, 100])
def test_balanced_fock_state_has_no_odd_symmetric_occupation(n):
    state = fock_in_plusminus(SectorSpec(n, n))
    assert np.max(np.abs(state.amps[1::2])) < 1e-14


@pytest.mark.parametrize("n_tot", range(1, 9))
def test_transform_matches_dense_beam_splitter(n_tot):
    np.testing.assert_allclose(plusminus_matrix(n_tot), dense_plusminus_transform(n_tot), atol=1e-10)


def test_transform_is_orthogonal_for_small_sector():
    matrix = plusminus_matrix(6)
    np.testing.assert_allclose(matrix @ matrix.T, np.eye(7), atol=1e-10)


@pytest.mark.slow
def test_transform_rows_stay_orthonormal_at_large_n():
    matrix = plusminus_matrix(2000)
    rows = matrix[np.linspace(0, 2000, 41).astype(int)]
    np.testing.assert_allclose(rows @ rows.T, np.eye(rows.shape[0]), atol=1e-10)


def test_round_trip_at_fifty_atoms():
    rng = np.random.default_rng(7)
    sector = SectorSpec(25, 25)
    amps = rng.normal(size=51) + 1j * rng.normal(size=51)
    state = PlusMinusState.from_unnormalized(sector, amps)
    back = number_to_plusminus(plusminus_to_number(state))
    assert np.linalg.norm(back.amps - state.amps) < 1e-10


@given(normalized_states(max_atoms=8))
@settings(deadline=None, max_examples=30)
def test_transform_preserves_norm(state):
    number = plusminus_to_number(state)
    assert abs(np.sum(number.probabilities) - 1.0) < 1e-10
    assert number.sector == state.sector


def test_all_symmetric_state_has_binomial_number_profile():
    sector = SectorSpec(10, 10)
    number = plusminus_to_number(PlusMinusState.eigenstate(sector, 20))
    expected = comb(20, np.arange(21)) / 2.0 ** 20
    np.testing.assert_allclose(number.probabilities, expected, atol=1e-14)
    real = number.amps.real
    assert np.all(real > 0) or np.all(real < 0)


def test_extreme_superposition_is_exchange_symmetric():
    sector = SectorSpec(10, 10)
    amps = np.zeros(21)
    amps[0] = amps[20] = 1.0
    probs = plusminus_to_number(PlusMinusState.from_unnormalized(sector, amps)).probabilities
    np.testing.assert_allclose(probs, probs[::-1], atol=1e-12)


def test_fock_state_has_zero_mean_cosphi():
    assert abs(cosphi_expectation(fock_in_plusminus(SectorSpec(50, 50)))) < 1e-10
    assert cosphi_expectation(PlusMinusState.eigenstate(SectorSpec(3, 3), 6)) == pytest.approx(1.0)


def test_cosphi_expectation_matches_dense_operator():
    rng = np.random.default_rng(11)
    sector = SectorSpec(3, 3)
    state = PlusMinusState.from_unnormalized(sector, rng.normal(size=7) + 1j * rng.normal(size=7))
    psi = plusminus_to_number(state).amps
    hopping = sector_hopping(6)
    dense = np.real(np.vdot(psi, (hopping + hopping.T) @ psi)) / 6.0
    assert cosphi_expectation(state) == pytest.approx(dense, abs=1e-12)


@given(normalized_states(max_atoms=10))
@settings(deadline=None, max_examples=30)
def test_cosphi_expectation_in_unit_interval_for_balanced(state):
    if not state.sector.is_symmetric:
        return
    assert -1.0 <= cosphi_expectation(state) <= 1.0


def test_log_factorial_table_matches_lgamma():
    table = LogCombinatorics(300)
    k = np.arange(301)
    np.testing.assert_allclose(table.log_factorial(k), gammaln(k + 1.0), rtol=1e-12)


@pytest.mark.parametrize("a, b", [(20, 0), (20, 7), (15, 15), (12, 3)])
def test_factorial_ratio(a, b):
    table = log_combinatorics(20)
    ratio = math.factorial(a) / math.factorial(b)
    assert math.exp(table.log_factorial(a) - table.log_factorial(b)) == pytest.approx(ratio, rel=1e-12)


def test_log_binomial_outside_range_is_minus_infinity():
    table = log_combinatorics(10)
    assert np.isneginf(table.log_binomial(5, 6))
    assert np.isneginf(table.log_binomial(5, -1))
    assert math.exp(table.log_binomial(10, 3)) == pytest.approx(120.0)


def test_signed_log_arithmetic():
    sign, log = signed_log_add(np.array([1.0, -1.0, 1.0]), np.log([3.0, 2.0, 1.0]),
                               np.array([-1.0, -1.0, 0.0]), np.array([math.log(1.0), math.log(5.0), -np.inf]))
    np.testing.assert_allclose(signed_log_to_linear(sign, log), [2.0, -7.0, 1.0])
    assert signed_log_to_linear(np.array([1.0]), np.array([-800.0]))[0] == 0.0


def test_depleted_sector_rounds_half_up():
    first = SectorSpec(1000, 1000).depleted(30)
    assert (first.n1, first.n2) == (985, 985)
    second = SectorSpec(1000, 1000).depleted(3)
    assert (second.n1, second.n2) == (998, 999)
    assert second.occupations == pytest.approx((998.5, 998.5))
    with pytest.raises(ValueError):
        SectorSpec(1, 1).depleted(3)


def test_depleted_sector_keeps_mean_occupations():
    sector = SectorSpec(3, 3).depleted(5)
    assert (sector.n1, sector.n2) == (0, 1)
    assert sector.occupations == pytest.approx((0.5, 0.5))
    assert sector.cos_phi_scale == pytest.approx(1.0)
    np.testing.assert_allclose(cosphi_eigenvalues(sector), [-1.0, 1.0])
    assert SectorSpec(3, 3).depleted(5) == SectorSpec(3, 3).depleted(4).depleted(1)


def test_explicit_removal_share_sets_occupations():
    sector = SectorSpec(100, 100).depleted(10, fraction1=0.3)
    assert (sector.n1, sector.n2) == (97, 93)
    assert sector.occupations == pytest.approx((97.0, 93.0))


def test_vacuum_sector():
    vacuum = SectorSpec(1, 1).depleted(2)
    assert vacuum.is_vacuum and vacuum.n_tot == 0
    np.testing.assert_array_equal(cosphi_eigenvalues(vacuum), [0.0])
    assert cosphi_expectation(PlusMinusState(vacuum, [1.0])) == 0.0
    with pytest.raises(ValueError):
        vacuum.cos_phi_scale


def test_sector_validation():
    with pytest.raises(ValueError):
        SectorSpec(0, 0)
    with pytest.raises(ValueError):
        SectorSpec(-1, 3)
    with pytest.raises(ValueError):
        SectorSpec(2, 2, (3.0, 2.0))
    with pytest.raises(ValueError):
        SectorSpec(2, 2, (-1.0, 5.0))


def test_unbalanced_depleted_labels_stay_in_the_spectrum():
    sector = SectorSpec(9, 1)
    top = PlusMinusState.eigenstate(sector, 10)
    eigen = cosphi_eigenvalues(sector)
    assert eigen[-1] > 1.0
    assert cosphi_expectation(top) == eigen[-1]


def test_unbalanced_sector_warns(caplog):
    SectorSpec(100, 50)
    assert "far from balanced" in caplog.text


def test_number_difference_grid():
    np.testing.assert_array_equal(number_difference_values(4), [-4, -2, 0, 2, 4])


def test_state_normalization_is_checked():
    with pytest.raises(ValueError):
        PlusMinusState(SectorSpec(1, 1), np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        NumberBasisState(SectorSpec(1, 1), np.array([1.0, 0.0]))


def test_histogram_moments_and_dense_fill():
    hist = CountHistogram.from_weights([-2, 0, 4], [1.0, 2.0, 1.0], label="delta_n")
    assert hist.mean() == pytest.approx(0.5)
    assert hist.variance() == pytest.approx((6.25 + 2 * 0.25 + 12.25) / 4)
    dense = hist.dense()
    np.testing.assert_array_equal(dense.values, np.arange(-2, 5))
    assert dense.probability_at(2) == 0.0
    assert hist.shifted(3).probability_at(3) == pytest.approx(0.5)
    assert hist.rows().shape == (3, 2)


@pytest.mark.parametrize("values, probs", [([0, 0], [0.5, 0.5]), ([0, 1], [0.7, 0.7]), ([0, 1], [1.5, -0.5])])
def test_histogram_validation(values, probs):
    with pytest.raises(ValueError):
        CountHistogram(values, probs)
