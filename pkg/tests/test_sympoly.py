import itertools

import numpy as np
import pytest

from qevar.errors import DegreeNotTabulatedError
from qevar.sympoly import (
    Partition,
    complete,
    elementary,
    laplacian_at_zero,
    monomial_laplacian_oracle,
    newton_e_from_p,
    partitions_of,
    power_sum,
    printed_laplacian_at_zero,
    schur,
)


def _scale(x, k):
    return 1e-12 * (1.0 + float(np.sum(np.abs(x)))) ** k


def test_partition_normalizes_and_validates():
    mu = Partition((3, 1, 0, 0))
    assert mu.parts == (3, 1)
    assert mu.weight == 4
    assert mu.length == 2
    assert mu.conjugate() == (2, 1, 1)
    assert mu == (3, 1)
    with pytest.raises(ValueError):
        Partition((1, 2))
    with pytest.raises(ValueError):
        Partition((2, -1))


def test_partitions_of_weight_four():
    parts = partitions_of(4, 4)
    assert [p.parts for p in parts] == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]


def test_partitions_of_small_cases():
    assert [p.parts for p in partitions_of(2, 2)] == [(2,), (1, 1)]
    assert [p.parts for p in partitions_of(0, 7)] == [()]
    assert [p.parts for p in partitions_of(4, 2)] == [(4,), (3, 1), (2, 2)]


def test_elementary_known_values():
    assert elementary(0, [0.3, -2.0]) == 1.0
    assert elementary(2, [1, 2, 3]) == pytest.approx(11.0)
    assert elementary(2, [1, 0, -1]) == pytest.approx(-1.0)
    assert elementary(4, [1, 2, 3]) == 0.0


def test_power_sum_and_complete_known_values():
    assert power_sum(2, [1, 0, -1]) == 2.0
    assert power_sum(3, [2, 2]) == 16.0
    assert complete(0, [5.0]) == 1.0
    assert complete(2, [1, 1]) == 3.0
    x = [0.25, -1.5, 2.0]
    assert complete(1, x) == pytest.approx(power_sum(1, x))


def test_power_sum_rejects_degree_zero():
    with pytest.raises(ValueError):
        power_sum(0, [1.0])


def test_real_vector_validation():
    with pytest.raises(ValueError):
        elementary(1, [])
    with pytest.raises(ValueError):
        complete(1, [1.0, float("nan")])


def test_schur_low_degree_identities():
    x = np.array([0.7, -0.2, 1.3, 0.4])
    e = [elementary(k, x) for k in range(4)]
    assert schur((1, 1), x) == pytest.approx(e[2])
    assert schur((2,), x) == pytest.approx(e[1] ** 2 - e[2])
    assert schur((2, 2), x) == pytest.approx(e[2] ** 2 - e[1] * e[3])
    assert schur((), x) == 1.0


def test_schur_vanishes_with_too_many_rows():
    assert schur((1, 1, 1), [1.0, 2.0]) == 0.0
    assert schur((2, 1, 1, 1), [0.5, 0.5, 0.5]) == 0.0


def test_newton_known_values():
    assert newton_e_from_p([6, 14, 36]) == pytest.approx([6, 11, 6])
    assert newton_e_from_p([0, 2.0]) == pytest.approx([0, -1.0])
    assert newton_e_from_p([0, 0, 0, 0]) == [0, 0, 0, 0]


def test_randomized_symmetric_function_identities(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 9))
        x = rng.uniform(-1.0, 1.0, d)
        for k in range(1, 5):
            tol = _scale(x, k)
            assert abs(schur((1,) * k, x) - elementary(k, x)) <= tol
            assert abs(schur((k,), x) - complete(k, x)) <= tol
        p = [power_sum(k, x) for k in range(1, 5)]
        e = newton_e_from_p(p)
        for k in range(1, 5):
            assert abs(e[k - 1] - elementary(k, x)) <= _scale(x, k)
        e1, e2, e3 = (elementary(k, x) for k in (1, 2, 3))
        assert abs(schur((2, 2), x) - (e2 ** 2 - e1 * e3)) <= _scale(x, 4)


def test_elementary_matches_brute_force(rng):
    x = rng.uniform(-2.0, 2.0, 6)
    for k in range(7):
        brute = sum(np.prod(c) for c in itertools.combinations(x, k)) if k else 1.0
        assert elementary(k, x) == pytest.approx(brute, abs=1e-12)


@pytest.mark.parametrize("d", [4, 7])
def test_laplacian_table_values(d):
    assert laplacian_at_zero((2, 2), d) == 4 * d * (d - 1)
    assert laplacian_at_zero((2,), d) == 2 * d
    assert laplacian_at_zero((1, 1), d) == 0
    assert laplacian_at_zero((1, 1, 1, 1), d) == 0
    assert laplacian_at_zero((2, 1, 1), d) == 0


@pytest.mark.parametrize("d", [4, 5, 6])
def test_laplacian_table_matches_symbolic_oracle(d):
    for weight in (2, 4):
        for mu in partitions_of(weight, weight):
            assert monomial_laplacian_oracle(mu, d) == laplacian_at_zero(mu, d), mu


def test_printed_table_differs_only_in_two_entries():
    d = 5
    differing = [mu.parts for mu in partitions_of(4, 4)
                 if printed_laplacian_at_zero(mu, d) != laplacian_at_zero(mu, d)]
    assert differing == [(4,), (3, 1)]
    assert printed_laplacian_at_zero((4,), d) == 12 * d * d + 4 * d * (d - 1)
    assert printed_laplacian_at_zero((3, 1), d) == -4 * d * (d - 1)


def test_laplacian_rejects_other_weights():
    with pytest.raises(DegreeNotTabulatedError, match="degree not tabulated"):
        laplacian_at_zero((2, 1), 4)


def test_oracle_with_explicit_power():
    # Delta (x1^2 + x1 x2 + x2^2) = 4 in two variables
    assert monomial_laplacian_oracle((2,), 2, power=1) == 4
    assert monomial_laplacian_oracle((1, 1, 1), 2) == 0
