# qevar/weingarten.py
# ───────────────────────────────────────────────────────────────────
# Exact Haar moments of unitary matrix entries through the Weingarten
# function of S_k (k <= 4), and the exact second and fourth moments of
# the diagonal of a Haar-conjugated traceless diagonal matrix. This is
# the oracle the closed forms in qevar.orbit are certified against.

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import sympy as sp

from qevar.errors import DegreeNotSupportedError, DimensionBelowDegreeError
from qevar.sympoly import Partition, PartitionLike, as_partition, partitions_of

logger = logging.getLogger(__name__)

MAX_DEGREE = 4

Number = Union[int, float, Fraction]

# Conjugacy classes of S_k by cycle type, and irreducible characters on them.
_CLASSES: Dict[int, List[Tuple[int, ...]]] = {
    0: [()],
    1: [(1,)],
    2: [(1, 1), (2,)],
    3: [(1, 1, 1), (2, 1), (3,)],
    4: [(1, 1, 1, 1), (2, 1, 1), (2, 2), (3, 1), (4,)],
}

_CHARACTERS: Dict[int, Dict[Tuple[int, ...], Tuple[int, ...]]] = {
    0: {(): (1,)},
    1: {(1,): (1,)},
    2: {(2,): (1, 1), (1, 1): (1, -1)},
    3: {(3,): (1, 1, 1), (2, 1): (2, 0, -1), (1, 1, 1): (1, -1, 1)},
    4: {
        (4,): (1, 1, 1, 1, 1),
        (3, 1): (3, 1, -1, 0, -1),
        (2, 2): (2, 0, 2, -1, 0),
        (2, 1, 1): (3, -1, -1, 0, 1),
        (1, 1, 1, 1): (1, -1, 1, 1, -1),
    },
}


def centralizer_order(cycle_type: Sequence[int]) -> int:
    """z_rho = prod_i i^{m_i} m_i! for a cycle type rho."""
    order = 1
    for length in set(cycle_type):
        multiplicity = sum(1 for part in cycle_type if part == length)
        order *= length ** multiplicity * math.factorial(multiplicity)
    return order


def class_size(cycle_type: Sequence[int]) -> int:
    return math.factorial(sum(cycle_type)) // centralizer_order(cycle_type)


def character(shape: PartitionLike, cycle_type: PartitionLike) -> int:
    lam = as_partition(shape)
    rho = as_partition(cycle_type)
    k = lam.weight
    if k > MAX_DEGREE or rho.weight != k:
        raise DegreeNotSupportedError(max(k, rho.weight))
    return _CHARACTERS[k][lam.parts][_CLASSES[k].index(rho.parts)]


def verify_character_tables() -> None:
    """
    Check row orthogonality sum_sigma chi_lambda(sigma) chi_mu(sigma) = delta k!.

    Raises:
      RuntimeError if an embedded table is inconsistent
    """
    for k, table in _CHARACTERS.items():
        sizes = [class_size(rho) for rho in _CLASSES[k]]
        if sum(sizes) != math.factorial(k):
            raise RuntimeError(f"S_{k} class sizes do not add up to {k}!")
        expected_shapes = {p.parts for p in partitions_of(k, max(k, 1))}
        if set(table) != expected_shapes:
            raise RuntimeError(f"S_{k} character table is missing irreducibles")
        for lam, mu in itertools.product(table, repeat=2):
            inner = sum(n * a * b for n, a, b in zip(sizes, table[lam], table[mu]))
            target = math.factorial(k) if lam == mu else 0
            if inner != target:
                raise RuntimeError(f"S_{k} characters {lam}, {mu} fail orthogonality: {inner} != {target}")


verify_character_tables()


def hook_content_dimension(shape: PartitionLike, d: int) -> Fraction:
    """s_lambda(1^d) = prod over cells of (d + content) / hook."""
    lam = as_partition(shape)
    conj = lam.conjugate()
    value = Fraction(1)
    for row, col in lam.cells():
        hook = lam[row] - col + conj[col] - row - 1
        value *= Fraction(d + col - row, hook)
    return value


@lru_cache(maxsize=None)
def _weingarten_cached(rho: Tuple[int, ...], d: int) -> Fraction:
    k = sum(rho)
    total = Fraction(0)
    for lam, chars in _CHARACTERS[k].items():
        if len(lam) > d:
            continue
        dim = chars[0]
        chi = chars[_CLASSES[k].index(rho)]
        total += Fraction(dim * dim * chi) / hook_content_dimension(lam, d)
    return total / (math.factorial(k) ** 2)


def weingarten_value(cycle_type: PartitionLike, d: int) -> Fraction:
    """
    Wg(rho, d) from the character expansion restricted to shapes with at most
    d rows. For d >= k this is the usual Weingarten function; for d < k it is
    the pseudo-inverse that still integrates Haar moments exactly.
    """
    rho = as_partition(cycle_type)
    if rho.weight > MAX_DEGREE:
        raise DegreeNotSupportedError(rho.weight)
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    return _weingarten_cached(rho.parts, d)


def wg(cycle_type: PartitionLike, d: int) -> Fraction:
    """
    Weingarten function Wg(sigma, d) for sigma of the given cycle type.

    Raises:
      DegreeNotSupportedError for k > 4
      DimensionBelowDegreeError for d < k
    """
    rho = as_partition(cycle_type)
    if rho.weight > MAX_DEGREE:
        raise DegreeNotSupportedError(rho.weight)
    if d < rho.weight:
        raise DimensionBelowDegreeError(d, rho.weight)
    return weingarten_value(rho, d)


@dataclass
class WeingartenTable:
    """
    Wg(rho, d) for every cycle type rho of k as a rational function of d,
    stored as numerator/denominator coefficients (highest power first).
    """

    k: int
    values: Dict[Partition, Tuple[List[Fraction], List[Fraction]]] = field(default_factory=dict)

    def evaluate(self, cycle_type: PartitionLike, d: int) -> Fraction:
        if d < self.k:
            raise DimensionBelowDegreeError(d, self.k)
        numerator, denominator = self.values[as_partition(cycle_type)]
        return _horner(numerator, d) / _horner(denominator, d)


def _horner(coeffs: Sequence[Fraction], d: int) -> Fraction:
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * d + c
    return acc


def _to_fraction(value) -> Fraction:
    rational = sp.Rational(value)
    return Fraction(int(rational.p), int(rational.q))


@lru_cache(maxsize=None)
def weingarten_table(k: int) -> WeingartenTable:
    if k > MAX_DEGREE or k < 0:
        raise DegreeNotSupportedError(k)
    d = sp.Symbol("d")
    table = WeingartenTable(k=k)
    for rho in _CLASSES[k]:
        expr = sp.Integer(0)
        for lam, chars in _CHARACTERS[k].items():
            lam_part = Partition(lam)
            conj = lam_part.conjugate()
            dimension = sp.Integer(1)
            for row, col in lam_part.cells():
                hook = lam[row] - col + conj[col] - row - 1
                dimension *= (d + col - row) / sp.Integer(hook)
            chi = chars[_CLASSES[k].index(rho)]
            expr += sp.Integer(chars[0] ** 2 * chi) / dimension
        expr = sp.cancel(expr / sp.Integer(math.factorial(k) ** 2))
        numerator, denominator = sp.fraction(expr)
        num_coeffs = [_to_fraction(c) for c in sp.Poly(numerator, d).all_coeffs()]
        den_coeffs = [_to_fraction(c) for c in sp.Poly(denominator, d).all_coeffs()]
        table.values[Partition(rho)] = (num_coeffs, den_coeffs)
    logger.debug(f"Built symbolic Weingarten table for S_{k}")
    return table


def cycle_type(perm: Sequence[int]) -> Tuple[int, ...]:
    seen = [False] * len(perm)
    lengths = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        node = start
        while not seen[node]:
            seen[node] = True
            node = perm[node]
            length += 1
        lengths.append(length)
    return tuple(sorted(lengths, reverse=True))


def _compose_with_inverse(sigma: Tuple[int, ...], tau: Tuple[int, ...]) -> Tuple[int, ...]:
    inverse = [0] * len(tau)
    for a, t in enumerate(tau):
        inverse[t] = a
    return tuple(sigma[inverse[a]] for a in range(len(sigma)))


@lru_cache(maxsize=None)
def _entry_moment_cached(rows: Tuple[int, ...], cols: Tuple[int, ...],
                         conj_rows: Tuple[int, ...], conj_cols: Tuple[int, ...], d: int) -> Fraction:
    k = len(rows)
    perms = list(itertools.permutations(range(k)))
    sigmas = [s for s in perms if all(rows[a] == conj_rows[s[a]] for a in range(k))]
    taus = [t for t in perms if all(cols[a] == conj_cols[t[a]] for a in range(k))]
    total = Fraction(0)
    for sigma in sigmas:
        for tau in taus:
            total += _weingarten_cached(cycle_type(_compose_with_inverse(sigma, tau)), d)
    return total


def entry_moment(rows: Sequence[int], cols: Sequence[int], d: int,
                 conj_rows: Optional[Sequence[int]] = None,
                 conj_cols: Optional[Sequence[int]] = None) -> Fraction:
    """
    E[ prod_a U_{rows[a], cols[a]} * prod_b conj(U_{conj_rows[b], conj_cols[b]}) ]
    under Haar measure on U(d), exactly.

    Args:
      rows, cols           – indices of the unconjugated entries (0-based)
      d                    – matrix size
      conj_rows, conj_cols – indices of the conjugated entries; default to
                             rows/cols, i.e. the moment of prod |U_{ij}|^2

    Returns:
      exact Fraction; 0 for unbalanced monomials

    Raises:
      DegreeNotSupportedError if more than 4 unconjugated entries
      ValueError on out-of-range indices
    """
    rows_t = tuple(int(i) for i in rows)
    cols_t = tuple(int(j) for j in cols)
    conj_rows_t = rows_t if conj_rows is None else tuple(int(i) for i in conj_rows)
    conj_cols_t = cols_t if conj_cols is None else tuple(int(j) for j in conj_cols)
    if len(rows_t) != len(cols_t) or len(conj_rows_t) != len(conj_cols_t):
        raise ValueError("row and column index tuples must have equal length")
    k = len(rows_t)
    if k > MAX_DEGREE:
        raise DegreeNotSupportedError(k)
    for index in rows_t + cols_t + conj_rows_t + conj_cols_t:
        if not 0 <= index < d:
            raise ValueError(f"index {index} out of range for d = {d}")
    if len(conj_rows_t) != k:
        return Fraction(0)
    if sorted(rows_t) != sorted(conj_rows_t) or sorted(cols_t) != sorted(conj_cols_t):
        return Fraction(0)
    if k == 0:
        return Fraction(1)
    return _entry_moment_cached(rows_t, cols_t, conj_rows_t, conj_cols_t, d)


def asymptotic_entry_moment(cols: Sequence[int], d: int) -> float:
    """Leading-order E|U_{i j1}|^2 |U_{i j2}|^2 ~ d^-2 (1 + delta_{j1 j2})."""
    j1, j2 = cols
    return (1.0 + (1.0 if j1 == j2 else 0.0)) / (d * d)


# ─── Moments of ||diag(U* D0 U)||^{2k} ──────────────────────────────

def _set_partitions(items: Tuple[int, ...]) -> List[Tuple[Tuple[int, ...], ...]]:
    if not items:
        return [()]
    first, rest = items[0], items[1:]
    result = []
    for sub in _set_partitions(rest):
        result.append(((first,),) + sub)
        for index in range(len(sub)):
            merged = sub[:index] + ((first,) + sub[index],) + sub[index + 1:]
            result.append(merged)
    return result


def _is_refinement(fine, coarse) -> bool:
    return all(any(set(block) <= set(big) for big in coarse) for block in fine)


def _mobius(fine, coarse) -> int:
    value = 1
    for big in coarse:
        merged = sum(1 for block in fine if set(block) <= set(big))
        value *= (-1) ** (merged - 1) * math.factorial(merged - 1)
    return value


def _injective_weights(values: Sequence[Number], size: int) -> Dict[Tuple[Tuple[int, ...], ...], Number]:
    """
    For every set partition pi of `size` positions, the sum over injective
    block labellings of prod_blocks Lambda^{|block|}, by Mobius inversion
    from products of power sums.
    """
    power = {m: sum(v ** m for v in values) for m in range(1, size + 1)}
    partitions = _set_partitions(tuple(range(size)))
    weights = {}
    for fine in partitions:
        total = 0
        for coarse in partitions:
            if _is_refinement(fine, coarse):
                product = 1
                for block in coarse:
                    product *= power[len(block)]
                total += _mobius(fine, coarse) * product
        weights[fine] = total
    return weights


def _centered(spectrum) -> Tuple[List[Number], int]:
    if hasattr(spectrum, "Lambda"):
        values = [float(v) for v in spectrum.Lambda]
        return values, len(values)
    values = list(spectrum)
    if all(isinstance(v, (int, Fraction)) for v in values):
        exact = [Fraction(v) for v in values]
        mean = sum(exact) / len(exact)
        return [v - mean for v in exact], len(exact)
    floats = [float(v) for v in values]
    mean = math.fsum(floats) / len(floats)
    return [v - mean for v in floats], len(floats)


def _pattern_moment(values: Sequence[Number], d: int, row_patterns) -> Number:
    size = len(row_patterns[0][1])
    weights = _injective_weights(values, size)
    total = 0
    for factor, rows in row_patterns:
        if factor == 0:
            continue
        for pattern, weight in weights.items():
            if len(pattern) > d:
                continue
            cols = [0] * size
            for label, block in enumerate(pattern):
                for position in block:
                    cols[position] = label
            moment = entry_moment(rows, cols, d)
            if isinstance(weight, float):
                total += factor * float(moment) * weight
            else:
                total += factor * moment * weight
    return total


def exact_m2(spectrum) -> Number:
    """
    E ||diag(U* D0 U)||^2 summed exactly over Weingarten index patterns.

    Args:
      spectrum – SpectrumVector, or a sequence of ints/Fractions (centered
                 exactly and summed in rational arithmetic)
    """
    values, d = _centered(spectrum)
    return _pattern_moment(values, d, [(d, (0, 0))])


def exact_m4(spectrum) -> Number:
    """E ||diag(U* D0 U)||^4, same conventions as exact_m2."""
    values, d = _centered(spectrum)
    patterns = [(d, (0, 0, 0, 0))]
    if d >= 2:
        patterns.append((d * (d - 1), (0, 0, 1, 1)))
    return _pattern_moment(values, d, patterns)


def exact_m4_unreduced(spectrum) -> Number:
    """Naive sum over all (i1, i2, j1..j4); only meant for d <= 4."""
    values, d = _centered(spectrum)
    total = 0
    for i1, i2 in itertools.product(range(d), repeat=2):
        for js in itertools.product(range(d), repeat=4):
            coefficient = values[js[0]] * values[js[1]] * values[js[2]] * values[js[3]]
            if coefficient == 0:
                continue
            moment = entry_moment((i1, i1, i2, i2), js, d)
            if isinstance(coefficient, float):
                total += coefficient * float(moment)
            else:
                total += coefficient * moment
    return total
