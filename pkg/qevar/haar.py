# qevar/haar.py
# ───────────────────────────────────────────────────────────────────
# Seeded Haar sampling on U(d) (complex Ginibre + QR with the R-diagonal
# phase fix) and Monte-Carlo estimators built on it.

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from qevar.errors import DimensionMismatchError
from qevar.orbit import SpectrumVector, moment_map_diagonal_batch
from qevar.sympoly import RealVectorLike, as_real_vector

logger = logging.getLogger(__name__)

GENERATOR_NAME = "numpy.random.PCG64"
DEFAULT_BATCH_SIZE = 2000
MIN_SAMPLES = 100


@dataclass
class HaarSampler:
    """
    Single-owner source of Haar unitaries. Equal (seed, stream_index, d,
    parent path) reproduce bit-identical sequences; children come from spawn().
    """

    seed: int
    d: int
    stream_index: int = 0
    path: Tuple[int, ...] = ()
    _rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be positive, got {self.d}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.path + (self.stream_index,))
        self._rng = np.random.Generator(np.random.PCG64(sequence))

    @property
    def generator_name(self) -> str:
        return GENERATOR_NAME

    def spawn(self, stream_index: int, d: Optional[int] = None) -> "HaarSampler":
        return HaarSampler(
            seed=self.seed,
            d=self.d if d is None else d,
            stream_index=stream_index,
            path=self.path + (self.stream_index,),
        )

    def _ginibre(self, count: int) -> np.ndarray:
        shape = (count, self.d, self.d)
        return (self._rng.standard_normal(shape) + 1j * self._rng.standard_normal(shape)) / math.sqrt(2.0)

    def _fix_phases(self, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
        diagonal = np.diagonal(R, axis1=-2, axis2=-1)
        return Q * (diagonal / np.abs(diagonal))[..., None, :]

    def sample_batch(self, count: int) -> np.ndarray:
        """(count, d, d) stack of independent Haar unitaries."""
        if count < 1:
            raise ValueError(f"count must be positive, got {count}")
        Q, R = np.linalg.qr(self._ginibre(count))
        return self._fix_phases(Q, R)

    def sample_unitary(self) -> np.ndarray:
        return self.sample_batch(1)[0]


@dataclass
class MCEstimate:
    mean: Union[float, complex]
    stderr: float
    samples: int

    def within(self, target: Union[float, complex], sigmas: float = 4.0, floor: float = 0.0) -> bool:
        return abs(self.mean - target) <= sigmas * self.stderr + floor

    def to_dict(self) -> dict:
        mean = self.mean
        if isinstance(mean, complex):
            mean = {"re": mean.real, "im": mean.imag}
        return {
            "mean": mean,
            "stderr": self.stderr,
            "samples": self.samples,
            "provenance": f"monte-carlo(samples={self.samples}, stderr={self.stderr!r})",
        }


def summarize(values: np.ndarray) -> MCEstimate:
    """Compensated mean and unbiased standard error of real or complex draws."""
    values = np.asarray(values)
    n = values.size
    if np.iscomplexobj(values):
        mean = complex(math.fsum(values.real) / n, math.fsum(values.imag) / n)
        spread = (np.var(values.real, ddof=1) + np.var(values.imag, ddof=1)) if n > 1 else 0.0
    else:
        mean = math.fsum(values) / n
        spread = np.var(values, ddof=1) if n > 1 else 0.0
    return MCEstimate(mean=mean, stderr=float(math.sqrt(spread / n)), samples=int(n))


def _collect(sampler: HaarSampler, samples: int, statistic, batch_size: Optional[int],
             progress: bool, label: str) -> np.ndarray:
    batch_size = batch_size or DEFAULT_BATCH_SIZE
    chunks = []
    remaining = samples
    with tqdm(total=samples, desc=label, disable=None if progress else True, leave=False) as bar:
        while remaining > 0:
            count = min(batch_size, remaining)
            chunks.append(statistic(sampler.sample_batch(count)))
            remaining -= count
            bar.update(count)
    logger.debug(f"{label}: {samples} samples in {len(chunks)} batches at d={sampler.d}")
    return np.concatenate(chunks)


def _check_samples(samples: int) -> None:
    if samples < MIN_SAMPLES:
        raise ValueError(f"samples must be at least {MIN_SAMPLES}, got {samples}")


def _check_dimension(sampler: HaarSampler, d: int) -> None:
    if sampler.d != d:
        raise DimensionMismatchError(f"sampler draws {sampler.d}x{sampler.d} unitaries, spectrum has d={d}")


def mc_moment(s: SpectrumVector, k: int, samples: int, sampler: HaarSampler,
              batch_size: Optional[int] = None, progress: bool = False) -> MCEstimate:
    """
    Monte-Carlo estimate of E ||moment_map_diagonal(U, s)||^k.

    Args:
      s       – centered spectrum
      k       – 2 or 4
      samples – number of Haar draws (>= 100)
      sampler – HaarSampler of matching dimension
    """
    if k not in (2, 4):
        raise ValueError(f"k must be 2 or 4, got {k}")
    _check_samples(samples)
    _check_dimension(sampler, s.d)

    def statistic(batch):
        squared = np.sum(moment_map_diagonal_batch(batch, s) ** 2, axis=1)
        return squared if k == 2 else squared ** 2

    return summarize(_collect(sampler, samples, statistic, batch_size, progress, f"m{k} d={s.d}"))


def mc_characteristic(s: SpectrumVector, X: RealVectorLike, samples: int, sampler: HaarSampler,
                      batch_size: Optional[int] = None, progress: bool = False) -> MCEstimate:
    """Sample mean of exp(i <X, moment_map_diagonal(U, s)>)."""
    x = as_real_vector(X)
    if x.size != s.d:
        raise DimensionMismatchError(f"X has dimension {x.size}, spectrum has {s.d}")
    _check_samples(samples)
    _check_dimension(sampler, s.d)

    def statistic(batch):
        return np.exp(1j * (moment_map_diagonal_batch(batch, s) @ x))

    return summarize(_collect(sampler, samples, statistic, batch_size, progress, f"phi d={s.d}"))


def mc_weingarten_spotcheck(rows: Sequence[int], cols: Sequence[int], samples: int, sampler: HaarSampler,
                            batch_size: Optional[int] = None, progress: bool = False) -> MCEstimate:
    """
    Monte-Carlo estimate of E prod_a |U_{rows[a], cols[a]}|^2, e.g.
    rows=(i, i), cols=(j1, j2) for E |U_{i j1}|^2 |U_{i j2}|^2.
    """
    if len(rows) != len(cols) or not rows:
        raise ValueError("rows and cols must be nonempty and of equal length")
    for index in list(rows) + list(cols):
        if not 0 <= index < sampler.d:
            raise ValueError(f"index {index} out of range for d = {sampler.d}")
    _check_samples(samples)
    rows_arr = np.asarray(rows, dtype=int)
    cols_arr = np.asarray(cols, dtype=int)

    def statistic(batch):
        return np.prod(np.abs(batch[:, rows_arr, cols_arr]) ** 2, axis=1)

    return summarize(_collect(sampler, samples, statistic, batch_size, progress, f"entries d={sampler.d}"))
