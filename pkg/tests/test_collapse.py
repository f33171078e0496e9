import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collapse.kernel import (DetectorKernel, MeasuredFunction, Wavefunction1D, collapse, find_roots,
                             peaks_resolved, two_peak_approximation)
from errors import DegenerateRoot, KernelUnderresolved, ZeroOverlap

PHASE_GRID = np.linspace(-math.pi, math.pi, 4001)
LINE_GRID = np.linspace(-10.0, 10.0, 2001)


def cosine(grid=PHASE_GRID):
    return MeasuredFunction.from_callable(grid, np.cos, lambda x: -np.sin(x))


def identity(grid=LINE_GRID):
    return MeasuredFunction.from_callable(grid, lambda x: np.asarray(x, dtype=float),
                                          lambda x: np.ones_like(np.asarray(x, dtype=float)))


def test_monotonic_function_gives_single_narrower_peak():
    psi = Wavefunction1D.gaussian(LINE_GRID, 0.0, 1.0)
    out = collapse(psi, identity(), DetectorKernel(center=0.0, width=0.3))
    assert out.is_normalized()
    assert out.width() < psi.width()
    assert abs(LINE_GRID[np.argmax(out.density)]) < 1e-9
    peaks = np.flatnonzero((out.density[1:-1] > out.density[:-2]) & (out.density[1:-1] > out.density[2:]))
    assert peaks.size == 1


def test_cosine_outcome_zero_splits_into_equal_peaks():
    psi = Wavefunction1D.flat(PHASE_GRID)
    out = collapse(psi, cosine(), DetectorKernel(center=0.0, width=0.05))
    left = out.density[PHASE_GRID < 0].sum() * out.spacing
    right = out.density[PHASE_GRID > 0].sum() * out.spacing
    assert left == pytest.approx(0.5, abs=1e-8)
    assert right == pytest.approx(0.5, abs=1e-8)
    step = out.spacing
    assert abs(PHASE_GRID[PHASE_GRID > 0][np.argmax(out.density[PHASE_GRID > 0])] - math.pi / 2) <= step
    assert abs(PHASE_GRID[PHASE_GRID < 0][np.argmax(out.density[PHASE_GRID < 0])] + math.pi / 2) <= step


def test_collapse_matches_pointwise_product():
    psi = Wavefunction1D.flat(PHASE_GRID)
    out = collapse(psi, cosine(), DetectorKernel(center=0.5, width=0.05))

    dx = PHASE_GRID[1] - PHASE_GRID[0]
    reference = np.exp(-0.5 * ((np.cos(PHASE_GRID) - 0.5) / 0.05) ** 2)
    reference = reference / math.sqrt(np.sum(reference ** 2) * dx)
    np.testing.assert_allclose(out.amplitudes, reference, atol=1e-10)


def test_two_peak_approximation_close_to_collapse():
    psi = Wavefunction1D.flat(PHASE_GRID)
    f = cosine()
    g = DetectorKernel(center=0.5, width=0.05)
    roots = find_roots(f, 0.5, PHASE_GRID)
    np.testing.assert_allclose(sorted(roots), [-math.pi / 3, math.pi / 3], atol=1e-12)
    approx = two_peak_approximation(psi, f, g, roots)
    assert approx.is_normalized()
    assert collapse(psi, f, g).l2_distance(approx) < 0.05


def test_single_root_linearization_is_exact():
    psi = Wavefunction1D.flat(PHASE_GRID)
    f = identity(PHASE_GRID)
    g = DetectorKernel(center=0.3, width=0.05)
    roots = find_roots(f, 0.3, PHASE_GRID)
    assert len(roots) == 1
    assert collapse(psi, f, g).l2_distance(two_peak_approximation(psi, f, g, roots)) < 1e-6


def test_merging_roots_are_reported_unresolved(caplog):
    psi = Wavefunction1D.flat(PHASE_GRID)
    f = cosine()
    g = DetectorKernel(center=0.999, width=0.01)
    roots = find_roots(f, 0.999, PHASE_GRID)
    assert len(roots) == 2
    with caplog.at_level(logging.WARNING, logger="collapse.kernel"):
        approx = two_peak_approximation(psi, f, g, roots)
    assert not peaks_resolved(approx, g, roots, f)
    assert "not resolved" in caplog.text


def test_zero_slope_root_is_degenerate():
    psi = Wavefunction1D.flat(PHASE_GRID)
    with pytest.raises(DegenerateRoot):
        two_peak_approximation(psi, cosine(), DetectorKernel(center=1.0, width=0.05), [0.0])


@pytest.mark.parametrize("width, expected", [(0.05, True), (3.0, False)])
def test_peaks_resolved_at_quarter_period(width, expected):
    psi = Wavefunction1D.flat(PHASE_GRID)
    roots = [-math.pi / 2, math.pi / 2]
    assert peaks_resolved(psi, DetectorKernel(center=0.0, width=width), roots, cosine()) is expected


def test_peaks_resolved_matches_ratio_criterion():
    psi = Wavefunction1D.flat(PHASE_GRID)
    f = cosine()
    g = DetectorKernel(center=0.9, width=0.05)
    roots = sorted(find_roots(f, 0.9, PHASE_GRID))
    half = 0.5 * (roots[1] - roots[0])
    ratio = float(g(half * f.derivative_at(roots[1], PHASE_GRID)) / g(0.0))
    assert peaks_resolved(psi, g, roots, f) is (ratio < 0.01)


def test_peaks_resolved_needs_two_roots():
    with pytest.raises(ValueError):
        peaks_resolved(Wavefunction1D.flat(PHASE_GRID), DetectorKernel(0.0, 0.05), [0.1], cosine())


@given(f0=st.floats(min_value=-0.3, max_value=0.9), width=st.floats(min_value=0.02, max_value=0.1))
@settings(deadline=None, max_examples=25)
def test_collapse_output_is_normalized_and_even(f0, width):
    out = collapse(Wavefunction1D.flat(PHASE_GRID), cosine(), DetectorKernel(center=f0, width=width))
    assert abs(out.norm() - 1.0) <= 1e-10
    np.testing.assert_allclose(out.density, out.density[::-1], atol=1e-10 * out.density.max())


def outcome_spread(psi, f, f0):
    """Mean of (f - f0)^2 under |Psi|^2."""
    weights = psi.density / psi.density.sum()
    return float(np.sum(weights * (f.values - f0) ** 2))


def test_recollapse_only_narrows():
    f = cosine()
    g = DetectorKernel(center=0.5, width=0.05)
    psi = Wavefunction1D.flat(PHASE_GRID)
    once = collapse(psi, f, g)
    twice = collapse(once, f, g)
    # the kernel weight falls off in (f - f0)^2, so each collapse lowers its mean
    assert outcome_spread(twice, f, 0.5) < outcome_spread(once, f, 0.5) < outcome_spread(psi, f, 0.5)
    assert abs(once.overlap(twice)) >= abs(psi.overlap(once))


def test_two_peak_error_shrinks_with_kernel_width():
    psi = Wavefunction1D.flat(PHASE_GRID)
    f = cosine()
    roots = find_roots(f, 0.5, PHASE_GRID)
    distances = []
    for width in (0.1, 0.05, 0.025):
        g = DetectorKernel(center=0.5, width=width)
        distances.append(collapse(psi, f, g).l2_distance(two_peak_approximation(psi, f, g, roots)))
    assert distances[0] > distances[1] > distances[2]


@given(y=st.floats(min_value=-5.0, max_value=5.0), shape=st.sampled_from(["gaussian", "boxcar"]))
def test_kernel_is_even_with_maximum_at_zero(y, shape):
    g = DetectorKernel(center=0.0, width=0.7, shape=shape)
    assert float(g(y)) == float(g(-y))
    assert float(g(y)) <= float(g(0.0))


def test_narrow_kernel_is_underresolved():
    with pytest.raises(KernelUnderresolved):
        collapse(Wavefunction1D.flat(PHASE_GRID), cosine(), DetectorKernel(center=0.0, width=0.002))


def test_incompatible_outcome_has_zero_overlap():
    psi = Wavefunction1D.gaussian(LINE_GRID, -5.0, 0.1)
    with pytest.raises(ZeroOverlap):
        collapse(psi, identity(), DetectorKernel(center=5.0, width=0.05))


def test_unnormalized_input_is_rejected():
    psi = Wavefunction1D(PHASE_GRID, 2.0 * np.ones_like(PHASE_GRID))
    with pytest.raises(ValueError):
        collapse(psi, cosine(), DetectorKernel(center=0.0, width=0.05))


def test_non_uniform_grid_is_rejected():
    grid = np.array([0.0, 0.1, 0.3, 0.4])
    with pytest.raises(ValueError):
        Wavefunction1D(grid, np.ones(4))


def test_uniformity_tolerance_does_not_grow_with_grid_size():
    grid = np.linspace(0.0, 1.0, 100_001)
    grid[50_000] += 1e-8 * (grid[1] - grid[0])
    with pytest.raises(ValueError):
        Wavefunction1D(grid, np.ones(grid.size))


@pytest.mark.parametrize("grid", [PHASE_GRID, LINE_GRID, np.linspace(100.0, 101.0, 2001)])
def test_linspace_grids_are_accepted(grid):
    assert Wavefunction1D(grid, np.ones(grid.size)).grid.size == grid.size


def test_analytic_derivative_matches_central_differences():
    assert cosine().derivative_consistent(PHASE_GRID)
