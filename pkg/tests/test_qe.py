import numpy as np
import pytest

from qevar.errors import DimensionMismatchError, NotHermitianError, NotUnitaryError
from qevar.haar import summarize
from qevar.orbit import EmpiricalMeasure, center_spectrum, moment2_exact, moment_map_diagonal_batch, variance_Y
from qevar.qe import (
    HermitianCompression,
    Y_value,
    borel_cantelli_regime,
    matrix_elements,
    quantum_variance,
    slln_run,
    spectral_measures,
    szego_convergence,
    variance_bridge_bound,
)


def random_hermitian(rng, d, liouville_state=0.0):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return HermitianCompression((A + A.conj().T) / 2, liouville_state=liouville_state)


def test_compression_validation():
    with pytest.raises(NotHermitianError):
        HermitianCompression(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(DimensionMismatchError):
        HermitianCompression(np.zeros((2, 3)))
    T = HermitianCompression.diagonal([1.0, 2.0, 6.0], liouville_state=2.5)
    assert T.d == 3
    assert T.trace_mean == 3.0
    np.testing.assert_allclose(T.spectrum.Lambda, [-2.0, -1.0, 3.0])


def test_matrix_elements_in_the_reference_basis():
    T = HermitianCompression.diagonal([1.0, 2.0, 6.0])
    np.testing.assert_allclose(matrix_elements(T, np.eye(3)), [1.0, 2.0, 6.0])
    np.testing.assert_allclose(matrix_elements(T, np.eye(3), shift=3.0), [-2.0, -1.0, 3.0])
    with pytest.raises(NotUnitaryError):
        matrix_elements(T, 2 * np.eye(3))
    with pytest.raises(DimensionMismatchError):
        matrix_elements(T, np.eye(4))


def test_y_is_dimension_times_quantum_variance(rng, make_sampler):
    T = random_hermitian(rng, 6)
    sampler = make_sampler(6)
    for U in sampler.sample_batch(10):
        assert Y_value(T, U) == pytest.approx(6 * quantum_variance(T, U), rel=1e-10)


def test_quantum_variance_is_basis_covariant(rng, make_sampler):
    T = random_hermitian(rng, 5)
    U, V = make_sampler(5).sample_batch(2)
    rotated = HermitianCompression(V @ T.matrix @ V.conj().T)
    assert quantum_variance(rotated, V @ U) == pytest.approx(quantum_variance(T, U), rel=1e-10)


def test_scalar_observable_has_zero_variance(make_sampler):
    T = HermitianCompression(0.5 * np.eye(4), liouville_state=0.5)
    U = make_sampler(4).sample_unitary()
    assert quantum_variance(T, U) == 0.0
    assert quantum_variance(T, U, reference="liouville") == 0.0
    assert Y_value(T, U) == pytest.approx(0.0, abs=1e-28)


def test_eigenbasis_is_a_vertex(rng):
    T = random_hermitian(rng, 7)
    assert quantum_variance(T, T.eigenvectors) == pytest.approx(T.spectrum.p2 / T.d, rel=1e-10)


def test_unknown_reference_is_rejected():
    T = HermitianCompression.diagonal([1.0, -1.0])
    with pytest.raises(ValueError):
        quantum_variance(T, np.eye(2), reference="median")


def test_bridge_bound(rng, make_sampler):
    sampler = make_sampler(8)
    for gap in (0.0, 0.3, -2.0):
        T = random_hermitian(rng, 8)
        T.liouville_state = T.trace_mean + gap
        for U in sampler.sample_batch(5):
            bound = variance_bridge_bound(T, U)
            assert bound.holds
            if gap == 0.0:
                assert bound.difference == pytest.approx(0.0, abs=1e-12)


def test_haar_mean_of_quantum_variance(make_sampler):
    T = HermitianCompression.diagonal([2.0, 1.0, 0.0, -1.0, -2.0])
    values = np.array([quantum_variance(T, U) for U in make_sampler(5).sample_batch(4000)])
    estimate = summarize(values)
    assert estimate.within(moment2_exact(T.spectrum) / T.d)


def test_haar_spread_of_y_matches_closed_form(make_sampler):
    s = center_spectrum([1.0, 0.0, -1.0])
    y = np.sum(moment_map_diagonal_batch(make_sampler(3).sample_batch(20000), s) ** 2, axis=1)
    assert variance_Y(s) == pytest.approx(0.15)
    assert summarize((y - y.mean()) ** 2).within(variance_Y(s))


def test_slln_with_scalar_levels_is_identically_zero(make_sampler):
    levels = [center_spectrum([0.0] * d) for d in range(2, 8)]
    run = slln_run(levels, make_sampler(1))
    assert run.partial_sums == [0.0] * 6
    assert all(record.y_value == 0.0 for record in run.levels)
    assert run.final_ratio() == 0.0


def test_slln_records(make_sampler):
    levels = [center_spectrum(np.linspace(-1.0, 1.0, d)) for d in range(2, 12)]
    run = slln_run(levels, make_sampler(1), draws=3, labels=range(2, 12))
    assert [record.level for record in run.levels] == list(range(2, 12))
    assert [record.d for record in run.levels] == list(range(2, 12))
    assert run.recomputed_partial_sums() == run.partial_sums
    for record in run.levels:
        assert record.draws == 3
        assert record.y_expected == pytest.approx(moment2_exact(center_spectrum(np.linspace(-1.0, 1.0, record.d))))
        assert record.v_trace == pytest.approx(record.y_value / record.d, rel=1e-10)
    data = run.to_dict()
    assert data["generator"] == "numpy.random.PCG64"
    assert len(data["levels"]) == 10
    assert data["borel_cantelli"]["summable"] is False


def test_slln_is_reproducible(make_sampler):
    levels = [center_spectrum(np.linspace(-1.0, 1.0, d)) for d in range(2, 10)]
    first = slln_run(levels, make_sampler(1))
    second = slln_run(levels, make_sampler(1))
    assert first.partial_sums == second.partial_sums


def test_slln_accepts_compressions(rng, make_sampler):
    levels = [random_hermitian(rng, d, liouville_state=0.1) for d in (3, 4, 5)]
    run = slln_run(levels, make_sampler(1))
    assert [record.liouville_state for record in run.levels] == [0.1, 0.1, 0.1]
    for record, T in zip(run.levels, levels):
        assert record.trace_mean == pytest.approx(T.trace_mean)


def test_slln_validation(make_sampler):
    with pytest.raises(ValueError):
        slln_run([], make_sampler(1))
    with pytest.raises(ValueError):
        slln_run([center_spectrum([1.0, -1.0])], make_sampler(1), draws=0)
    with pytest.raises(DimensionMismatchError):
        slln_run([center_spectrum([1.0, -1.0])], make_sampler(1), labels=[1, 2])
    with pytest.raises(ValueError, match="d >= 2"):
        slln_run([center_spectrum([1.0]), center_spectrum([1.0, -1.0])], make_sampler(1))


@pytest.mark.slow
def test_slln_partial_sums_stay_in_the_variance_band(make_sampler):
    levels = [center_spectrum(np.linspace(-1.0, 1.0, n)) for n in range(2, 201)]
    inside = 0
    for seed in range(5):
        run = slln_run(levels, make_sampler(1, seed=seed))
        if abs(run.final_ratio()) <= run.variance_band(3.0):
            inside += 1
    assert inside >= 4


def test_borel_cantelli_regimes():
    harmonic = borel_cantelli_regime(list(range(1, 201)))
    squares = borel_cantelli_regime([n * n for n in range(1, 201)])
    assert not harmonic.summable
    assert squares.summable
    assert squares.tail_ratio < harmonic.tail_ratio
    with pytest.raises(ValueError):
        borel_cantelli_regime([])


def test_szego_identical_measures():
    measure = EmpiricalMeasure.uniform([1.0, 0.0, -1.0])
    report = szego_convergence([measure] * 4)
    assert all(report.stabilized)
    assert report.limits == pytest.approx([0.0, 2.0 / 3.0, 0.0, 2.0 / 3.0])
    assert report.tail_sup_differences == [0.0] * 4


def test_szego_grid_measures_converge():
    levels = [center_spectrum(np.linspace(-1.0, 1.0, n)) for n in range(10, 401, 10)]
    report = szego_convergence(spectral_measures(levels), max_moment=2)
    assert report.stabilized == [True, True]
    assert report.limits[1] == pytest.approx(1.0 / 3.0, abs=1e-2)
    assert len(report.successive_differences[0]) == len(levels) - 1


def test_szego_unstable_moments_get_no_limit():
    measures = [EmpiricalMeasure.uniform([float(n), -float(n)]) for n in range(1, 9)]
    report = szego_convergence(measures, max_moment=2)
    assert report.stabilized == [True, False]
    assert report.limits[1] is None


def test_szego_validation():
    with pytest.raises(ValueError):
        szego_convergence([EmpiricalMeasure.uniform([0.0])])
