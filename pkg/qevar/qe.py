# qevar/qe.py
# ───────────────────────────────────────────────────────────────────
# Quantum variances of an orthonormal basis against a compressed
# observable, the Y random variable, SLLN partial sums over a sequence of
# eigenspaces, and moment-Cauchy checks of empirical spectral measures.

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from qevar.errors import DimensionMismatchError, NotHermitianError
from qevar.haar import GENERATOR_NAME, HaarSampler, summarize
from qevar.orbit import (
    EmpiricalMeasure,
    SpectrumVector,
    center_spectrum,
    check_unitary,
    empirical_measure,
    moment2_exact,
    moment_map_diagonal,
    variance_Y,
)

logger = logging.getLogger(__name__)

REFERENCES = ("liouville", "trace_mean")
SUMMABLE_TAIL_RATIO = 0.05


@dataclass
class HermitianCompression:
    """
    Dense Hermitian matrix of an observable cut down to an eigenspace,
    written in a reference basis, with the target limit state omega(A).
    """

    matrix: np.ndarray
    liouville_state: float = 0.0
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {self.matrix.shape}")
        scale = max(1.0, float(np.max(np.abs(self.matrix))) if self.matrix.size else 1.0)
        asymmetry = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if asymmetry > 1e-10 * scale:
            raise NotHermitianError(f"matrix is not Hermitian (max |T - T*| = {asymmetry:.3e})")

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _eigh(self):
        return np.linalg.eigh(self.matrix)

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eigh[1]

    @cached_property
    def spectrum(self) -> SpectrumVector:
        return center_spectrum(self._eigh[0])

    @property
    def trace_mean(self) -> float:
        return math.fsum(np.real(np.diagonal(self.matrix))) / self.d

    @classmethod
    def diagonal(cls, values: Sequence[float], liouville_state: float = 0.0) -> "HermitianCompression":
        return cls(np.diag(np.asarray(values, dtype=float)), liouville_state)


def _reference_value(T: HermitianCompression, reference: str) -> float:
    if reference == "trace_mean":
        return T.trace_mean
    if reference == "liouville":
        return float(T.liouville_state)
    raise ValueError(f"reference must be one of {REFERENCES}, got {reference!r}")


def matrix_elements(T: HermitianCompression, U: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """<(T - shift) u_j, u_j> for every column u_j of U."""
    U = check_unitary(U, T.d)
    shifted = T.matrix - shift * np.eye(T.d)
    return np.real(np.sum(U.conj() * (shifted @ U), axis=0))


def quantum_variance(T: HermitianCompression, U: np.ndarray, reference: str = "trace_mean") -> float:
    """
    (1/d) sum_j |<T u_j, u_j> - ref|^2 with ref = omega(A) ("liouville") or
    (1/d) Tr T ("trace_mean").

    Raises:
      DimensionMismatchError, NotUnitaryError
    """
    ref = _reference_value(T, reference)
    deviations = matrix_elements(T, U, ref)
    return math.fsum(deviations ** 2) / T.d


def Y_value(T: HermitianCompression, U: np.ndarray) -> float:
    """
    ||J(W* D(Lambda) W)||^2 for the ONB U seen in the eigenbasis of T;
    equals d * quantum_variance(T, U, "trace_mean").
    """
    U = check_unitary(U, T.d)
    W = (T.eigenvectors.conj().T @ U).T
    return math.fsum(moment_map_diagonal(W, T.spectrum) ** 2)


@dataclass
class BridgeBound:
    difference: float
    bound: float

    @property
    def holds(self) -> bool:
        return abs(self.difference) <= self.bound * (1.0 + 1e-12) + 1e-15


def variance_bridge_bound(T: HermitianCompression, U: np.ndarray) -> BridgeBound:
    """
    |QV_liouville - QV_trace| <= |omega - m| * (2 max_j |a_j - m| + |omega - m|)
    with a_j = <T u_j, u_j> and m = (1/d) Tr T.
    """
    m = T.trace_mean
    gap = abs(float(T.liouville_state) - m)
    spread = float(np.max(np.abs(matrix_elements(T, U, m))))
    difference = quantum_variance(T, U, "liouville") - quantum_variance(T, U, "trace_mean")
    return BridgeBound(difference=difference, bound=gap * (2.0 * spread + gap))


# ─── SLLN over a sequence of levels ─────────────────────────────────

@dataclass
class LevelRecord:
    level: int
    d: int
    y_value: float
    y_expected: float
    y_variance: float
    v_trace: float
    trace_mean: float
    increment: float
    partial_sum: float
    cesaro_average: float
    v_liouville: Optional[float] = None
    liouville_state: Optional[float] = None
    cesaro_liouville: Optional[float] = None
    draws: int = 1
    v_trace_mean: Optional[float] = None
    v_trace_stderr: Optional[float] = None
    v_liouville_mean: Optional[float] = None
    v_trace_expected: Optional[float] = None


@dataclass
class BorelCantelliReport:
    total: float
    tail: float
    tail_ratio: float
    summable: bool


def borel_cantelli_regime(dims: Sequence[int]) -> BorelCantelliReport:
    """
    Numerical summability of sum 1/d_n: the share of the total carried by
    the second half of the levels. A share <= 0.05 is read as summable.
    """
    if not dims:
        raise ValueError("dims must be nonempty")
    inverse = [1.0 / d for d in dims]
    total = math.fsum(inverse)
    tail = math.fsum(inverse[len(inverse) // 2:])
    ratio = tail / total
    return BorelCantelliReport(total=total, tail=tail, tail_ratio=ratio, summable=ratio <= SUMMABLE_TAIL_RATIO)


@dataclass
class SequenceRun:
    levels: List[LevelRecord]
    seed: int
    stream_index: int
    generator: str = GENERATOR_NAME
    borel_cantelli: Optional[BorelCantelliReport] = None

    @property
    def partial_sums(self) -> List[float]:
        return [record.partial_sum for record in self.levels]

    def recomputed_partial_sums(self) -> List[float]:
        increments = []
        sums = []
        for record in self.levels:
            increments.append((record.y_value - record.y_expected) / record.d)
            sums.append(math.fsum(increments))
        return sums

    def variance_band(self, sigmas: float = 3.0) -> float:
        """sigmas * sqrt(sum_n Var(Y_n / d_n)) / N, the Chebyshev band for |S_N / N|."""
        variance = math.fsum(record.y_variance / record.d ** 2 for record in self.levels)
        return sigmas * math.sqrt(variance) / len(self.levels)

    def final_ratio(self) -> float:
        return self.levels[-1].partial_sum / len(self.levels)

    def to_records(self) -> List[Dict[str, object]]:
        return [asdict(record) for record in self.levels]

    def to_dict(self) -> Dict[str, object]:
        return {
            "seed": self.seed,
            "stream_index": self.stream_index,
            "generator": self.generator,
            "levels": self.to_records(),
            "borel_cantelli": asdict(self.borel_cantelli) if self.borel_cantelli else None,
            "variance_band_3sigma": self.variance_band(),
            "final_ratio": self.final_ratio(),
        }


Level = Union[SpectrumVector, HermitianCompression]


def _as_compression(level: Level) -> HermitianCompression:
    if isinstance(level, HermitianCompression):
        return level
    return HermitianCompression.diagonal(level.lam, liouville_state=level.trace_mean)


def slln_run(levels: Sequence[Level], sampler: HaarSampler, draws: int = 1,
             labels: Optional[Sequence[int]] = None, progress: bool = False) -> SequenceRun:
    """
    One Haar ONB per level (from a per-level child sampler): Y_n, E Y_n,
    partial sums S_N = sum (1/d_n)(Y_n - E Y_n) and Cesaro averages
    (1/N) sum (1/d_n) Y_n. Extra draws per level feed the V_A statistics.

    Args:
      levels  – SpectrumVector (diagonal observable) or HermitianCompression per level
      sampler – parent sampler; level n uses sampler.spawn(n, d_n)
      draws   – ONBs drawn per level (the first one drives the SLLN)
      labels  – level keys (defaults to 1..N)

    Raises:
      ValueError when a level has d_n < 2
    """
    if not levels:
        raise ValueError("slln_run needs at least one level")
    if draws < 1:
        raise ValueError(f"draws must be positive, got {draws}")
    labels = list(labels) if labels is not None else list(range(1, len(levels) + 1))
    if len(labels) != len(levels):
        raise DimensionMismatchError("labels and levels differ in length")
    compressions = [_as_compression(level) for level in levels]
    for label, T in zip(labels, compressions):
        if T.d < 2:
            raise ValueError(f"level {label} has d = {T.d}, every level needs d >= 2")

    records: List[LevelRecord] = []
    increments: List[float] = []
    cesaro_terms: List[float] = []
    liouville_terms: List[float] = []
    for index, (label, T) in enumerate(tqdm(list(zip(labels, compressions)), desc="levels",
                                            disable=None if progress else True, leave=False)):
        s = T.spectrum
        child = sampler.spawn(index, T.d)
        unitaries = child.sample_batch(draws)
        y = Y_value(T, unitaries[0])
        expected = moment2_exact(s)
        increments.append((y - expected) / T.d)
        cesaro_terms.append(y / T.d)
        v_trace = [quantum_variance(T, U, "trace_mean") for U in unitaries]
        v_liouville = [quantum_variance(T, U, "liouville") for U in unitaries]
        liouville_terms.append(v_liouville[0])
        trace_stats = summarize(np.asarray(v_trace))
        records.append(LevelRecord(
            level=int(label),
            d=T.d,
            y_value=y,
            y_expected=expected,
            y_variance=variance_Y(s),
            v_trace=v_trace[0],
            trace_mean=T.trace_mean,
            increment=increments[-1],
            partial_sum=math.fsum(increments),
            cesaro_average=math.fsum(cesaro_terms) / len(cesaro_terms),
            v_liouville=v_liouville[0],
            liouville_state=float(T.liouville_state),
            cesaro_liouville=math.fsum(liouville_terms) / len(liouville_terms),
            draws=draws,
            v_trace_mean=float(trace_stats.mean),
            v_trace_stderr=trace_stats.stderr,
            v_liouville_mean=math.fsum(v_liouville) / draws,
            v_trace_expected=expected / T.d,
        ))
        logger.debug(f"level {label}: d={T.d} Y={y:.6g} EY={expected:.6g}")

    run = SequenceRun(
        levels=records,
        seed=sampler.seed,
        stream_index=sampler.stream_index,
        borel_cantelli=borel_cantelli_regime([record.d for record in records]),
    )
    logger.info(f"SLLN run over {len(records)} levels: S_N/N = {run.final_ratio():.3e}, "
                f"3-sigma band {run.variance_band():.3e}")
    return run


# ─── Szegő asymptotics as moment-Cauchy behaviour ───────────────────

@dataclass
class SzegoReport:
    max_moment: int
    moments: List[List[float]]
    successive_differences: List[List[float]]
    tail_sup_differences: List[float]
    stabilized: List[bool]
    limits: List[Optional[float]]


def szego_convergence(measures: Sequence[EmpiricalMeasure], max_moment: int = 4,
                      tolerance: float = 1e-2) -> SzegoReport:
    """
    Moments 1..max_moment of each measure, their successive differences and
    the sup over pairs in the second half of the sequence. A moment whose
    tail sup is <= tolerance is reported as stabilized, with the last value
    as its limit estimate; otherwise no limit is claimed.
    """
    if len(measures) < 2:
        raise ValueError("szego_convergence needs at least two measures")
    if max_moment < 1:
        raise ValueError(f"max_moment must be positive, got {max_moment}")
    table = [measure.moments(max_moment) for measure in measures]
    tail = table[len(table) // 2:]
    differences, sups, stabilized, limits = [], [], [], []
    for k in range(max_moment):
        column = [row[k] for row in table]
        differences.append([abs(b - a) for a, b in zip(column, column[1:])])
        tail_column = [row[k] for row in tail]
        sup = max(tail_column) - min(tail_column)
        sups.append(sup)
        stabilized.append(sup <= tolerance)
        limits.append(column[-1] if sup <= tolerance else None)
    return SzegoReport(
        max_moment=max_moment,
        moments=table,
        successive_differences=differences,
        tail_sup_differences=sups,
        stabilized=stabilized,
        limits=limits,
    )


def spectral_measures(levels: Sequence[Level]) -> List[EmpiricalMeasure]:
    return [empirical_measure(_as_compression(level).spectrum) for level in levels]
