# qevar/sympoly.py
# ───────────────────────────────────────────────────────────────────
# Symmetric polynomials evaluated at real vectors: elementary, complete,
# power-sum and Schur (Jacobi–Trudi), Newton conversions, and the table
# of Laplacian-at-zero coefficients of the low-degree Schur polynomials
# together with the symbolic oracle that certifies it.

import logging
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np
import sympy as sp

from qevar.errors import DegreeNotTabulatedError

logger = logging.getLogger(__name__)

RealVectorLike = Union[Sequence[float], np.ndarray]


class Partition:
    """
    Weakly decreasing tuple of positive integers; trailing zeros are dropped.
    """

    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[int] = ()):
        values = tuple(int(p) for p in parts)
        if any(p < 0 for p in values):
            raise ValueError(f"Partition parts must be nonnegative: {values}")
        if any(values[i] < values[i + 1] for i in range(len(values) - 1)):
            raise ValueError(f"Partition parts must be weakly decreasing: {values}")
        while values and values[-1] == 0:
            values = values[:-1]
        self.parts = values

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def conjugate(self) -> "Partition":
        if not self.parts:
            return Partition()
        return Partition([sum(1 for p in self.parts if p > i) for i in range(self.parts[0])])

    def cells(self) -> Iterator[Tuple[int, int]]:
        for row, part in enumerate(self.parts):
            for col in range(part):
                yield row, col

    def __iter__(self):
        return iter(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __getitem__(self, index):
        return self.parts[index]

    def __eq__(self, other) -> bool:
        if isinstance(other, Partition):
            return self.parts == other.parts
        if isinstance(other, tuple):
            return self.parts == Partition(other).parts
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.parts)

    def __repr__(self) -> str:
        return f"Partition{self.parts}"


PartitionLike = Union[Partition, Sequence[int]]


def as_partition(mu: PartitionLike) -> Partition:
    return mu if isinstance(mu, Partition) else Partition(mu)


def as_real_vector(x: RealVectorLike) -> np.ndarray:
    """
    Args:
      x – sequence of real numbers

    Returns:
      1-D float64 array

    Raises:
      ValueError if x is empty, not one-dimensional or contains non-finite entries
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"Expected a nonempty real vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Real vector contains non-finite entries")
    return arr


def _generate_partitions(remaining: int, max_part: int, slots: int) -> Iterator[Tuple[int, ...]]:
    if remaining == 0:
        yield ()
        return
    if slots == 0:
        return
    for first in range(min(remaining, max_part), 0, -1):
        for rest in _generate_partitions(remaining - first, first, slots - 1):
            yield (first,) + rest


def partitions_of(weight: int, max_length: int) -> List[Partition]:
    """
    All partitions of `weight` with at most `max_length` parts, in
    reverse-lexicographic order ((4), (3,1), (2,2), ...).
    """
    if weight < 0:
        raise ValueError(f"weight must be nonnegative, got {weight}")
    if max_length < 1:
        raise ValueError(f"max_length must be positive, got {max_length}")
    return [Partition(p) for p in _generate_partitions(weight, weight, max_length)]


def elementary(k: int, x: RealVectorLike) -> float:
    """e_k(x); e_0 = 1 and e_k = 0 for k > dim(x)."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    values = as_real_vector(x)
    if k > values.size:
        return 0.0
    e = [1.0] + [0.0] * k
    for xi in values:
        for j in range(k, 0, -1):
            e[j] += xi * e[j - 1]
    return float(e[k])


def complete(k: int, x: RealVectorLike) -> float:
    """h_k(x), the sum of all degree-k monomials; h_0 = 1."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    return _complete_list(k, as_real_vector(x))[k]


def _complete_list(max_k: int, values: np.ndarray) -> List[float]:
    h = [1.0] + [0.0] * max_k
    for xi in values:
        for j in range(1, max_k + 1):
            h[j] += xi * h[j - 1]
    return [float(v) for v in h]


def power_sum(k: int, x: RealVectorLike) -> float:
    if k < 1:
        raise ValueError(f"power sums are defined for k >= 1, got {k}")
    values = as_real_vector(x)
    return float(np.sum(values ** k))


def _determinant(matrix: List[list]):
    # Laplace expansion along the first row; matrices here are at most 4x4
    # and the entries may be floats or sympy polynomials.
    size = len(matrix)
    if size == 1:
        return matrix[0][0]
    if size == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total = None
    for col in range(size):
        minor = [row[:col] + row[col + 1:] for row in matrix[1:]]
        term = matrix[0][col] * _determinant(minor)
        if col % 2:
            term = -term
        total = term if total is None else total + term
    return total


def _jacobi_trudi_matrix(parts: Tuple[int, ...], h: Callable[[int], object], zero) -> List[list]:
    size = len(parts)
    return [
        [h(parts[i] - i + j) if parts[i] - i + j >= 0 else zero for j in range(size)]
        for i in range(size)
    ]


def schur(mu: PartitionLike, x: RealVectorLike) -> float:
    """
    Schur polynomial S_mu(x) as the Jacobi–Trudi determinant det(h_{mu_i - i + j}).

    Returns 0 when mu has more rows than x has coordinates, and 1 for the
    empty partition.
    """
    partition = as_partition(mu)
    values = as_real_vector(x)
    if partition.length > values.size:
        return 0.0
    if partition.length == 0:
        return 1.0
    max_index = partition.parts[0] + partition.length - 1
    h = _complete_list(max_index, values)
    matrix = _jacobi_trudi_matrix(partition.parts, lambda k: h[k], 0.0)
    return float(_determinant(matrix))


def newton_e_from_p(p_values: Sequence[float]) -> List[float]:
    """
    Newton's identities k e_k = sum_{i=1..k} (-1)^(i-1) e_{k-i} p_i.

    Args:
      p_values – power sums p_1, ..., p_k

    Returns:
      elementary values e_1, ..., e_k
    """
    e = [1.0]
    for k in range(1, len(p_values) + 1):
        acc = 0.0
        for i in range(1, k + 1):
            sign = 1.0 if i % 2 == 1 else -1.0
            acc += sign * e[k - i] * float(p_values[i - 1])
        e.append(acc / k)
    return e[1:]


# Δ^{|mu|/2} S_mu at X = 0, certified by monomial_laplacian_oracle.
_LAPLACIAN_TABLE: Dict[Tuple[int, ...], Callable[[int], int]] = {
    (1, 1): lambda d: 0,
    (2,): lambda d: 2 * d,
    (1, 1, 1, 1): lambda d: 0,
    (2, 1, 1): lambda d: 0,
    (2, 2): lambda d: 4 * d * (d - 1),
    (3, 1): lambda d: 4 * d * (d - 1),
    (4,): lambda d: 24 * d + 4 * d * (d - 1),
}

# The same table as it appears in the printed derivation; two entries differ.
_PRINTED_LAPLACIAN_TABLE: Dict[Tuple[int, ...], Callable[[int], int]] = {
    (1, 1): lambda d: 0,
    (2,): lambda d: 2 * d,
    (1, 1, 1, 1): lambda d: 0,
    (2, 1, 1): lambda d: 0,
    (2, 2): lambda d: 4 * d * (d - 1),
    (3, 1): lambda d: -4 * d * (d - 1),
    (4,): lambda d: 12 * d * d + 4 * d * (d - 1),
}


def _tabulated(table: Dict[Tuple[int, ...], Callable[[int], int]], mu: PartitionLike, d: int) -> int:
    partition = as_partition(mu)
    if partition.weight not in (2, 4):
        raise DegreeNotTabulatedError(partition.weight)
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    return int(table[partition.parts](d))


def laplacian_at_zero(mu: PartitionLike, d: int) -> int:
    """
    Δ S_mu(0) for |mu| = 2 and Δ² S_mu(0) for |mu| = 4, in d variables.

    Raises:
      DegreeNotTabulatedError for any other weight
    """
    return _tabulated(_LAPLACIAN_TABLE, mu, d)


def printed_laplacian_at_zero(mu: PartitionLike, d: int) -> int:
    return _tabulated(_PRINTED_LAPLACIAN_TABLE, mu, d)


@lru_cache(maxsize=None)
def _oracle(parts: Tuple[int, ...], d: int, power: int) -> int:
    gens = sp.symbols(f"x0:{d}")
    zero = sp.Poly(0, *gens, domain="ZZ")
    if len(parts) > d:
        return 0
    max_k = (parts[0] + len(parts) - 1) if parts else 0
    h = [sp.Poly(1, *gens, domain="ZZ")] + [zero] * max_k
    for g in gens:
        xg = sp.Poly(g, *gens, domain="ZZ")
        for k in range(1, max_k + 1):
            h[k] = h[k] + xg * h[k - 1]
    poly = _determinant(_jacobi_trudi_matrix(parts, lambda k: h[k], zero)) if parts else h[0]
    for _ in range(power):
        poly = sum((poly.diff((g, 2)) for g in gens), zero)
    constant = poly.as_expr().subs({g: 0 for g in gens})
    return int(constant)


def monomial_laplacian_oracle(mu: PartitionLike, d: int, power: int = None) -> int:
    """
    Expand S_mu in d variables as an explicit integer polynomial, apply the
    Euclidean Laplacian `power` times (default |mu|/2) and evaluate at 0.
    """
    partition = as_partition(mu)
    if power is None:
        power = partition.weight // 2
    logger.debug(f"Symbolic Laplacian oracle for {partition} in {d} variables, power {power}")
    return _oracle(partition.parts, d, power)
