import itertools
import math

import numpy as np
import pytest

from qevar.errors import DimensionMismatchError, EmptyShellError, NotHermitianError
from qevar.torus import (
    LatticeShell,
    SphereMultiplier,
    TorusObservable,
    admits_representation,
    compress_observable,
    diagonal_symbol,
    direction_equidistribution,
    harmonic_test_functions,
    lattice_shell,
    local_weyl_check,
    multiplicity_sequence,
    qe_experiment,
    sphere_monomial_average,
    theta_counts,
)


def test_shell_counts():
    assert lattice_shell(2, 25).multiplicity == 12
    assert lattice_shell(2, 5).multiplicity == 8
    assert lattice_shell(3, 1).multiplicity == 6
    assert lattice_shell(5, 4).multiplicity == 90
    with pytest.raises(EmptyShellError):
        lattice_shell(2, 3)
    with pytest.raises(EmptyShellError):
        lattice_shell(3, 28)


def test_shell_validation():
    with pytest.raises(ValueError):
        lattice_shell(7, 4)
    with pytest.raises(ValueError):
        lattice_shell(1, 4)
    with pytest.raises(ValueError):
        lattice_shell(3, 0)


def test_shell_points_are_sorted_and_symmetric():
    shell = lattice_shell(3, 9)
    points = [tuple(int(v) for v in row) for row in shell.points]
    assert points == sorted(points)
    assert all(sum(v * v for v in p) == 9 for p in points)
    point_set = shell.point_set()
    for p in points:
        assert tuple(-v for v in p) in point_set
        for perm in itertools.permutations(p):
            assert perm in point_set
    np.testing.assert_allclose(np.linalg.norm(shell.directions(), axis=1), 1.0)
    assert shell.radius == 3.0


def test_dimension_two_against_brute_force():
    for n in range(1, 101):
        bound = math.isqrt(n)
        expected = sum(1 for a in range(-bound, bound + 1) for b in range(-bound, bound + 1) if a * a + b * b == n)
        if expected == 0:
            assert not admits_representation(2, n)
            with pytest.raises(EmptyShellError):
                lattice_shell(2, n)
        else:
            assert lattice_shell(2, n).multiplicity == expected


@pytest.mark.parametrize("dim", [3, 4])
def test_theta_counts_match_enumeration(dim):
    counts = theta_counts(dim, 30)
    assert counts[0] == 1
    for n in range(1, 31):
        if admits_representation(dim, n):
            assert lattice_shell(dim, n).multiplicity == counts[n]
        else:
            assert counts[n] == 0


def test_admits_representation():
    assert admits_representation(2, 5)
    assert admits_representation(2, 9)
    assert not admits_representation(2, 21)
    assert not admits_representation(3, 7)
    assert not admits_representation(3, 28)
    assert admits_representation(3, 14)
    assert all(admits_representation(4, n) for n in range(50))
    assert not admits_representation(3, -1)


@pytest.mark.parametrize("n_max", [200, 4000])
def test_dimension_five_growth_slope(n_max):
    sequence = multiplicity_sequence(5, n_max)
    assert sequence.slope == pytest.approx(3.0, abs=0.3)
    assert len(sequence.entries) == n_max
    assert isinstance(sequence.intercept, float)
    assert sequence.to_records()[0] == {"dim": 5, "n": 1, "multiplicity": 10}


def test_multiplicity_sequence_filters():
    sequence = multiplicity_sequence(2, 50, min_multiplicity=12)
    assert all(m >= 12 for _, m in sequence.entries)
    assert (25, 12) in sequence.entries
    assert all(n != 3 for n, _ in multiplicity_sequence(2, 50).entries)


def test_sphere_monomial_averages():
    assert sphere_monomial_average((0, 0, 0)) == 1.0
    assert sphere_monomial_average((2, 0, 0)) == pytest.approx(1.0 / 3.0)
    assert sphere_monomial_average((2, 2, 0)) == pytest.approx(1.0 / 15.0)
    assert sphere_monomial_average((4, 0)) == pytest.approx(3.0 / 8.0)
    assert sphere_monomial_average((1, 1, 0)) == 0.0
    # order of the exponents does not matter
    assert sphere_monomial_average((0, 2, 4, 0, 2)) == sphere_monomial_average((4, 2, 2, 0, 0))


@pytest.mark.parametrize("dim", [2, 3, 5])
def test_harmonic_test_functions_average_to_zero(dim):
    for g in harmonic_test_functions(dim):
        assert g.sphere_average() == pytest.approx(0.0, abs=1e-15)
    assert SphereMultiplier.constant(dim, 2.0).sphere_average() == 2.0


def test_multiplier_evaluation():
    g = SphereMultiplier.quartic(2)
    angles = np.linspace(0.0, 2 * np.pi, 7)
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    np.testing.assert_allclose(g.evaluate(directions), np.cos(4 * angles), atol=1e-12)
    with pytest.raises(DimensionMismatchError):
        SphereMultiplier(3, {(2, 0): 1.0})


def test_observable_validation():
    with pytest.raises(NotHermitianError):
        TorusObservable.pure_potential(2, {(1, 0): 1.0})
    with pytest.raises(DimensionMismatchError):
        TorusObservable(3, {(0, 0): 1.0}, SphereMultiplier.constant(3))
    with pytest.raises(DimensionMismatchError):
        TorusObservable(2, {(0, 0): 1.0}, SphereMultiplier.constant(3))


def test_observable_properties():
    obs = TorusObservable(2, {(0, 0): 2.0, (1, 0): 0.5j, (-1, 0): -0.5j}, SphereMultiplier.constant(2, 3.0))
    assert obs.mean_potential == 2.0
    assert obs.liouville_state == 6.0
    assert obs.bandwidth == 1
    described = obs.describe()
    assert described["multiplier"] == "3.0"
    assert described["potential"]["1,0"] == [0.0, 0.5]
    assert TorusObservable.pure_multiplier(SphereMultiplier.product(3)).liouville_state == 0.0


def test_compression_is_hermitian_with_the_local_trace():
    shell = lattice_shell(3, 6)
    obs = TorusObservable(3, {(0, 0, 0): 1.5, (1, 1, 0): 0.25 - 0.5j, (-1, -1, 0): 0.25 + 0.5j},
                          SphereMultiplier.square_difference(3))
    T = compress_observable(shell, obs)
    assert T.d == shell.multiplicity
    np.testing.assert_allclose(T.matrix, T.matrix.conj().T)
    assert T.trace_mean == pytest.approx(np.mean(diagonal_symbol(shell, obs)), abs=1e-14)
    assert T.liouville_state == obs.liouville_state
    assert T.metadata["n"] == 6


def test_pure_multiplier_compresses_to_a_diagonal():
    shell = lattice_shell(3, 5)
    obs = TorusObservable.pure_multiplier(SphereMultiplier.quartic(3))
    T = compress_observable(shell, obs)
    assert np.count_nonzero(T.matrix - np.diag(np.diagonal(T.matrix))) == 0
    np.testing.assert_allclose(np.real(np.diagonal(T.matrix)), diagonal_symbol(shell, obs), atol=1e-14)


def test_pure_potential_compresses_to_fourier_coefficients():
    shell = lattice_shell(2, 25)
    coeffs = {(2, 0): 0.5, (-2, 0): 0.5, (1, 1): 0.25j, (-1, -1): -0.25j, (0, 0): 0.1}
    T = compress_observable(shell, TorusObservable.pure_potential(2, coeffs))
    points = [tuple(int(v) for v in row) for row in shell.points]
    expected = np.array([[coeffs.get(tuple(b - a for a, b in zip(k, l)), 0.0) for l in points] for k in points])
    np.testing.assert_allclose(T.matrix, expected, atol=1e-15)


def test_compression_does_not_depend_on_the_basis_order(rng):
    shell = lattice_shell(3, 9)
    obs = TorusObservable(3, {(0, 0, 0): 1.0, (1, 0, 2): 0.3, (-1, 0, -2): 0.3}, SphereMultiplier.quartic(3))
    order = rng.permutation(shell.multiplicity)
    shuffled = LatticeShell(dim=3, n=9, points=shell.points[order])
    T = compress_observable(shell, obs).matrix
    np.testing.assert_allclose(compress_observable(shuffled, obs).matrix, T[np.ix_(order, order)], atol=1e-15)


def test_compression_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        compress_observable(lattice_shell(2, 5), TorusObservable.scalar(3, 1.0))


def test_scalar_observable_is_exact(make_sampler):
    obs = TorusObservable.scalar(5, 0.5)
    shells = [lattice_shell(5, n) for n in (1, 2, 3)]
    report = local_weyl_check(shells, obs)
    assert report.deviations == [0.0, 0.0, 0.0]
    assert report.trend_slope is None
    run = qe_experiment(shells, obs, onb_draws=3, sampler=make_sampler(1))
    for record in run.levels:
        assert record.v_trace == 0.0
        assert record.v_trace_mean == 0.0
        assert record.y_expected == pytest.approx(0.0, abs=1e-28)


def test_local_weyl_check_reports():
    obs = TorusObservable.pure_multiplier(SphereMultiplier.quartic(5))
    shells = [lattice_shell(5, n) for n in range(1, 7)]
    report = local_weyl_check(shells, obs)
    assert report.asserted
    assert report.shells[0] == (1, 10)
    assert report.deviations[0] == pytest.approx(0.4)
    assert report.trend_slope is not None

    low = local_weyl_check([lattice_shell(3, n) for n in (1, 2, 3)],
                           TorusObservable.pure_multiplier(SphereMultiplier.quartic(3)))
    assert not low.asserted
    with pytest.raises(DimensionMismatchError):
        local_weyl_check([lattice_shell(3, 1)], obs)
    with pytest.raises(ValueError):
        local_weyl_check([], obs)


@pytest.mark.parametrize("dim, n", [(2, 25), (3, 6), (5, 7)])
def test_direction_equidistribution_cancels_exactly(dim, n):
    shell = lattice_shell(dim, n)
    tests = [SphereMultiplier.square_difference(dim), SphereMultiplier.product(dim)]
    values = direction_equidistribution(shell, tests)
    assert values.tolist() == [0.0, 0.0]


def test_direction_equidistribution_of_the_quartic():
    # the four axis directions all have cos(4 theta) = 1
    shell = lattice_shell(2, 1)
    assert direction_equidistribution(shell, [SphereMultiplier.quartic(2)])[0] == pytest.approx(1.0)


@pytest.mark.slow
def test_torus_experiment_matches_haar_expectation(make_sampler):
    obs = TorusObservable(5, {(0,) * 5: 1.0, (1, 0, 0, 0, 0): 0.5, (-1, 0, 0, 0, 0): 0.5},
                          SphereMultiplier.quartic(5))
    shells = [lattice_shell(5, n) for n in (3, 4, 5)]
    run = qe_experiment(shells, obs, onb_draws=20, sampler=make_sampler(1))
    assert [record.level for record in run.levels] == [3, 4, 5]
    assert [record.d for record in run.levels] == [80, 90, 112]
    for record in run.levels:
        assert record.draws == 20
        assert abs(record.v_trace_mean - record.v_trace_expected) <= 4 * record.v_trace_stderr


def test_qe_experiment_needs_shells(make_sampler):
    with pytest.raises(ValueError):
        qe_experiment([], TorusObservable.scalar(5, 1.0), 2, make_sampler(1))
