# qevar/torus.py
# ───────────────────────────────────────────────────────────────────
# Flat torus R^dim / 2pi Z^dim: eigenspaces are lattice shells
# {k : |k|^2 = n}. Shell enumeration and counting, the product observable
# class (trig potential x degree-0 multiplier) compressed to a shell,
# local Weyl and direction-equidistribution checks, and the random-ONB
# experiment over a sequence of shells.

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from scipy import stats
from scipy.special import gammaln

from qevar.errors import DimensionMismatchError, EmptyShellError, NotHermitianError
from qevar.haar import HaarSampler
from qevar.qe import HermitianCompression, SequenceRun, slln_run

logger = logging.getLogger(__name__)

MIN_DIM = 2
MAX_DIM = 6
QUANTIZATION = "midpoint-direction, symmetrized; sphere average on k = -l"

Exponent = Tuple[int, ...]


def _check_dim(dim: int) -> None:
    if not MIN_DIM <= dim <= MAX_DIM:
        raise ValueError(f"dim must lie in [{MIN_DIM}, {MAX_DIM}], got {dim}")


# ─── Lattice shells ─────────────────────────────────────────────────

@dataclass
class LatticeShell:
    dim: int
    n: int
    points: np.ndarray

    @property
    def multiplicity(self) -> int:
        return int(self.points.shape[0])

    @property
    def radius(self) -> float:
        return math.sqrt(self.n)

    def directions(self) -> np.ndarray:
        return self.points / self.radius

    def point_set(self) -> set:
        return {tuple(int(v) for v in row) for row in self.points}


def admits_representation(dim: int, n: int) -> bool:
    """
    Whether n is a sum of dim squares: primes 3 mod 4 to even powers for
    dim 2, n not of the form 4^a (8b + 7) for dim 3, always for dim >= 4.
    """
    if n < 0:
        return False
    if n == 0 or dim >= 4:
        return True
    if dim == 2:
        return all(exponent % 2 == 0 for prime, exponent in sp.factorint(n).items() if prime % 4 == 3)
    if dim == 3:
        while n % 4 == 0:
            n //= 4
        return n % 8 != 7
    return math.isqrt(n) ** 2 == n


def _enumerate_shell(dim: int, n: int) -> List[Tuple[int, ...]]:
    points: List[Tuple[int, ...]] = []
    prefix: List[int] = []

    def visit(remaining: int, slots: int) -> None:
        if slots == 1:
            root = math.isqrt(remaining)
            if root * root == remaining:
                for value in ((-root, root) if root else (0,)):
                    points.append(tuple(prefix) + (value,))
            return
        bound = math.isqrt(remaining)
        for value in range(-bound, bound + 1):
            prefix.append(value)
            visit(remaining - value * value, slots - 1)
            prefix.pop()

    visit(n, dim)
    return points


def lattice_shell(dim: int, n: int) -> LatticeShell:
    """
    All k in Z^dim with |k|^2 = n, by pruned depth-first search, in
    lexicographic order.

    Raises:
      ValueError for dim outside [2, 6] or n < 1
      EmptyShellError when no lattice point lies on the shell
    """
    _check_dim(dim)
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not admits_representation(dim, n):
        raise EmptyShellError(dim, n)
    points = _enumerate_shell(dim, n)
    if not points:
        raise EmptyShellError(dim, n)
    return LatticeShell(dim=dim, n=n, points=np.asarray(points, dtype=np.int64))


def theta_counts(dim: int, n_max: int) -> np.ndarray:
    """r_dim(n) for n = 0..n_max from the dim-th power of the theta series."""
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    theta = np.zeros(n_max + 1, dtype=np.int64)
    for k in range(math.isqrt(n_max) + 1):
        theta[k * k] += 1 if k == 0 else 2
    counts = np.zeros(n_max + 1, dtype=np.int64)
    counts[0] = 1
    for _ in range(dim):
        counts = np.convolve(counts, theta)[: n_max + 1]
    return counts


@dataclass
class MultiplicitySequence:
    dim: int
    n_max: int
    entries: List[Tuple[int, int]]
    slope: Optional[float] = None
    intercept: Optional[float] = None

    def to_records(self) -> List[Dict[str, int]]:
        return [{"dim": self.dim, "n": n, "multiplicity": m} for n, m in self.entries]


def multiplicity_sequence(dim: int, n_max: int, min_multiplicity: int = 1) -> MultiplicitySequence:
    """
    Nonempty shells n <= n_max with d_N >= min_multiplicity, and the least
    squares slope of log d_N against log sqrt(n) over n >= n_max / 2.
    """
    _check_dim(dim)
    if n_max < 1:
        raise ValueError(f"n_max must be positive, got {n_max}")
    counts = theta_counts(dim, n_max)
    entries = [(n, int(counts[n])) for n in range(1, n_max + 1)
               if counts[n] > 0 and counts[n] >= min_multiplicity]
    result = MultiplicitySequence(dim=dim, n_max=n_max, entries=entries)
    upper = [(n, m) for n, m in entries if 2 * n >= n_max]
    if len(upper) >= 2:
        x = np.log(np.sqrt([n for n, _ in upper]))
        y = np.log([m for _, m in upper])
        fit = stats.linregress(x, y)
        result.slope, result.intercept = float(fit.slope), float(fit.intercept)
        logger.info(f"dim={dim}: log-log multiplicity slope {fit.slope:.3f} over {len(upper)} shells")
    else:
        logger.warning(f"dim={dim}: too few shells in the upper half of n <= {n_max} to fit a slope")
    return result


# ─── Observables ────────────────────────────────────────────────────

def sphere_monomial_average(exponents: Exponent) -> float:
    """Average of prod x_i^{a_i} over the unit sphere S^{dim-1}."""
    if any(a % 2 for a in exponents):
        return 0.0
    if not any(exponents):
        return 1.0
    dim = len(exponents)
    halves = [(a + 1) / 2.0 for a in exponents]
    log_value = (math.fsum(gammaln(b) for b in halves) - gammaln(math.fsum(halves))
                 + gammaln(dim / 2.0) - (dim / 2.0) * math.log(math.pi))
    return float(math.exp(log_value))


@dataclass
class SphereMultiplier:
    """Polynomial sum c_a x^a restricted to the unit sphere."""

    dim: int
    terms: Dict[Exponent, float]
    name: str = "g"

    def __post_init__(self):
        for exponent in self.terms:
            if len(exponent) != self.dim:
                raise DimensionMismatchError(f"exponent {exponent} does not match dim {self.dim}")

    def evaluate(self, directions: np.ndarray) -> np.ndarray:
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        values = np.zeros(directions.shape[0])
        for exponent, coefficient in self.terms.items():
            values = values + coefficient * np.prod(directions ** np.asarray(exponent), axis=1)
        return values

    def sphere_average(self) -> float:
        return math.fsum(c * sphere_monomial_average(a) for a, c in self.terms.items())

    @classmethod
    def constant(cls, dim: int, value: float = 1.0) -> "SphereMultiplier":
        return cls(dim, {(0,) * dim: value}, name=f"{value}")

    @classmethod
    def _monomials(cls, dim: int, pieces: Mapping[Tuple[Tuple[int, int], ...], float], name: str):
        terms = {}
        for powers, coefficient in pieces.items():
            exponent = [0] * dim
            for axis, power in powers:
                exponent[axis] += power
            terms[tuple(exponent)] = terms.get(tuple(exponent), 0.0) + coefficient
        return cls(dim, terms, name=name)

    @classmethod
    def square_difference(cls, dim: int, i: int = 0, j: int = 1) -> "SphereMultiplier":
        return cls._monomials(dim, {((i, 2),): 1.0, ((j, 2),): -1.0}, f"x{i}^2-x{j}^2")

    @classmethod
    def product(cls, dim: int, i: int = 0, j: int = 1) -> "SphereMultiplier":
        return cls._monomials(dim, {((i, 1), (j, 1)): 1.0}, f"x{i}x{j}")

    @classmethod
    def quartic(cls, dim: int, i: int = 0, j: int = 1) -> "SphereMultiplier":
        """Re (x_i + i x_j)^4 = x_i^4 - 6 x_i^2 x_j^2 + x_j^4, harmonic of degree 4."""
        return cls._monomials(dim, {((i, 4),): 1.0, ((i, 2), (j, 2)): -6.0, ((j, 4),): 1.0},
                              f"Re(x{i}+ix{j})^4")


def harmonic_test_functions(dim: int) -> List[SphereMultiplier]:
    return [
        SphereMultiplier.square_difference(dim),
        SphereMultiplier.product(dim),
        SphereMultiplier.quartic(dim),
    ]


@dataclass
class TorusObservable:
    """
    Potential sum_m c_m e^{i<m,x>} (c_{-m} = conj c_m) times a degree-0
    multiplier g(xi/|xi|).
    """

    dim: int
    potential_coeffs: Dict[Exponent, complex]
    multiplier: SphereMultiplier
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.multiplier.dim != self.dim:
            raise DimensionMismatchError(f"multiplier has dim {self.multiplier.dim}, observable {self.dim}")
        coeffs = {}
        for frequency, value in self.potential_coeffs.items():
            key = tuple(int(v) for v in frequency)
            if len(key) != self.dim:
                raise DimensionMismatchError(f"frequency {key} does not match dim {self.dim}")
            coeffs[key] = complex(value)
        for key, value in coeffs.items():
            mirror = coeffs.get(tuple(-v for v in key), 0j)
            if abs(mirror - value.conjugate()) > 1e-12:
                raise NotHermitianError(f"potential coefficient at {key} lacks its conjugate at the mirror frequency")
        self.potential_coeffs = coeffs

    @property
    def mean_potential(self) -> float:
        return self.potential_coeffs.get((0,) * self.dim, 0j).real

    @property
    def liouville_state(self) -> float:
        return self.mean_potential * self.multiplier.sphere_average()

    @property
    def bandwidth(self) -> int:
        return max((max(abs(v) for v in key) for key in self.potential_coeffs), default=0)

    @classmethod
    def scalar(cls, dim: int, value: float) -> "TorusObservable":
        return cls(dim, {(0,) * dim: value}, SphereMultiplier.constant(dim))

    @classmethod
    def pure_multiplier(cls, multiplier: SphereMultiplier) -> "TorusObservable":
        return cls(multiplier.dim, {(0,) * multiplier.dim: 1.0}, multiplier)

    @classmethod
    def pure_potential(cls, dim: int, coeffs: Mapping[Exponent, complex]) -> "TorusObservable":
        return cls(dim, dict(coeffs), SphereMultiplier.constant(dim))

    def describe(self) -> Dict[str, object]:
        return {
            "dim": self.dim,
            "multiplier": self.multiplier.name,
            "potential": {",".join(map(str, k)): [v.real, v.imag] for k, v in sorted(self.potential_coeffs.items())},
            "liouville_state": self.liouville_state,
            "quantization": QUANTIZATION,
        }


def _coefficient_grid(obs: TorusObservable) -> Tuple[np.ndarray, int]:
    width = obs.bandwidth
    grid = np.zeros((2 * width + 1,) * obs.dim, dtype=complex)
    for key, value in obs.potential_coeffs.items():
        grid[tuple(v + width for v in key)] = value
    return grid, width


def compress_observable(shell: LatticeShell, obs: TorusObservable) -> HermitianCompression:
    """
    T_{k,l} = c_{l-k} g((k+l)/|k+l|), with the sphere average of g when
    k = -l, then T <- (T + T*) / 2.
    """
    if shell.dim != obs.dim:
        raise DimensionMismatchError(f"shell has dim {shell.dim}, observable {obs.dim}")
    points = shell.points
    size = shell.multiplicity
    grid, width = _coefficient_grid(obs)
    differences = points[None, :, :] - points[:, None, :]
    inside = np.all(np.abs(differences) <= width, axis=2)
    coefficients = np.zeros((size, size), dtype=complex)
    index = tuple((differences[inside] + width).T)
    coefficients[inside] = grid[index]

    sums = (points[:, None, :] + points[None, :, :]).reshape(-1, shell.dim).astype(float)
    norms = np.linalg.norm(sums, axis=1)
    multiplier = np.full(size * size, obs.multiplier.sphere_average())
    regular = norms > 0
    multiplier[regular] = obs.multiplier.evaluate(sums[regular] / norms[regular, None])
    T = coefficients * multiplier.reshape(size, size)
    T = (T + T.conj().T) / 2.0
    return HermitianCompression(
        matrix=T,
        liouville_state=obs.liouville_state,
        metadata={"dim": shell.dim, "n": shell.n, "quantization": QUANTIZATION},
    )


def diagonal_symbol(shell: LatticeShell, obs: TorusObservable) -> np.ndarray:
    """<A e_k, e_k> = c_0 g(k/|k|) for every point of the shell."""
    return obs.mean_potential * obs.multiplier.evaluate(shell.directions())


@dataclass
class WeylReport:
    dim: int
    shells: List[Tuple[int, int]]
    deviations: List[float]
    trend_slope: Optional[float] = None
    trend_pvalue: Optional[float] = None
    asserted: bool = False


def local_weyl_check(shells: Sequence[LatticeShell], obs: TorusObservable) -> WeylReport:
    """
    (1/d_N) Tr T_N - omega(A) per shell, with a log-log trend of |deviation|
    against n. Convergence is only expected for dim >= 5.
    """
    if not shells:
        raise ValueError("local_weyl_check needs at least one shell")
    deviations = []
    for shell in shells:
        if shell.dim != obs.dim:
            raise DimensionMismatchError(f"shell has dim {shell.dim}, observable {obs.dim}")
        trace_mean = math.fsum(diagonal_symbol(shell, obs)) / shell.multiplicity
        deviations.append(trace_mean - obs.liouville_state)
    report = WeylReport(
        dim=obs.dim,
        shells=[(shell.n, shell.multiplicity) for shell in shells],
        deviations=deviations,
        asserted=obs.dim >= 5,
    )
    usable = [(shell.n, abs(dev)) for shell, dev in zip(shells, deviations) if dev != 0.0]
    if len(usable) >= 3:
        fit = stats.linregress(np.log([n for n, _ in usable]), np.log([v for _, v in usable]))
        report.trend_slope, report.trend_pvalue = float(fit.slope), float(fit.pvalue)
    if not report.asserted:
        logger.warning(f"dim={obs.dim}: local Weyl deviations are reported, convergence is not asserted below dim 5")
    return report


def direction_equidistribution(shell: LatticeShell, test_functions: Sequence[SphereMultiplier]) -> np.ndarray:
    """(1/d_N) sum_k g(k/|k|) per test function; each g has sphere average 0."""
    directions = shell.directions()
    return np.array([math.fsum(g.evaluate(directions)) / shell.multiplicity for g in test_functions])


def qe_experiment(shells: Sequence[LatticeShell], obs: TorusObservable, onb_draws: int,
                  sampler: HaarSampler, progress: bool = False) -> SequenceRun:
    """Compress obs to every shell and run the random-ONB sequence experiment."""
    if not shells:
        raise ValueError("qe_experiment needs at least one shell")
    compressions = []
    for shell in shells:
        logger.debug(f"Compressing observable to shell n={shell.n} (d_N={shell.multiplicity})")
        compressions.append(compress_observable(shell, obs))
    return slln_run(compressions, sampler, draws=onb_draws, labels=[shell.n for shell in shells],
                    progress=progress)
