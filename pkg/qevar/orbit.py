# qevar/orbit.py
# ───────────────────────────────────────────────────────────────────
# Moments of inertia of the diagonal pushforward of a unitary conjugation
# orbit (the permutohedron with its Duistermaat–Heckman measure):
# centering, the diagonal moment map, m2/m4 through the Schur series and
# in closed form, the printed beta_4 variants, and the truncated orbital
# Fourier transform.

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from qevar.errors import DimensionMismatchError, NotUnitaryError, SingularClosedFormError
from qevar.sympoly import (
    Partition,
    RealVectorLike,
    as_real_vector,
    laplacian_at_zero,
    partitions_of,
    power_sum,
    schur,
)

logger = logging.getLogger(__name__)

UNITARY_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SpectrumVector:
    """
    Eigenvalues `lam` of a compressed observable and their centered form
    `Lambda` (Lambda_j = lam_j - trace_mean, so p_1(Lambda) = 0).
    """

    lam: np.ndarray
    Lambda: np.ndarray
    trace_mean: float

    @property
    def d(self) -> int:
        return int(self.lam.size)

    @property
    def p2(self) -> float:
        return power_sum(2, self.Lambda)

    @property
    def p4(self) -> float:
        return power_sum(4, self.Lambda)

    def scaled(self, factor: float) -> "SpectrumVector":
        return center_spectrum(self.lam * factor)

    def to_dict(self) -> Dict[str, object]:
        return {
            "lambda": [float(v) for v in self.lam],
            "Lambda": [float(v) for v in self.Lambda],
            "trace_mean": float(self.trace_mean),
            "d": self.d,
        }


def center_spectrum(lam: RealVectorLike) -> SpectrumVector:
    values = as_real_vector(lam)
    if np.all(values == values[0]):
        # scalar spectra give D0 = 0 bit-for-bit
        trace_mean = float(values[0])
    else:
        trace_mean = math.fsum(values) / values.size
    centered = values - trace_mean
    return SpectrumVector(lam=values.copy(), Lambda=centered, trace_mean=float(trace_mean))


def unitarity_deviation(U: np.ndarray) -> float:
    U = np.asarray(U)
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def check_unitary(U: np.ndarray, d: Optional[int] = None, tol: float = UNITARY_TOLERANCE) -> np.ndarray:
    """
    Raises:
      DimensionMismatchError if U is not square (or not d x d)
      NotUnitaryError if max |U*U - I| exceeds tol
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {U.shape}")
    if d is not None and U.shape[0] != d:
        raise DimensionMismatchError(f"matrix is {U.shape[0]}x{U.shape[0]}, expected {d}x{d}")
    deviation = unitarity_deviation(U)
    if deviation > tol:
        raise NotUnitaryError(deviation)
    return U


def moment_map_diagonal(U: np.ndarray, s: SpectrumVector) -> np.ndarray:
    """
    Diagonal of U D(Lambda) U*: entry i is sum_j Lambda_j |U_ij|^2.

    Raises:
      NotUnitaryError beyond 1e-10
      DimensionMismatchError if U is not d x d
    """
    U = check_unitary(U, s.d)
    return (np.abs(U) ** 2) @ s.Lambda


def moment_map_diagonal_batch(U: np.ndarray, s: SpectrumVector) -> np.ndarray:
    """Unchecked batched form for (count, d, d) stacks of sampled unitaries."""
    return (np.abs(U) ** 2) @ s.Lambda


def permutohedron_center_of_mass(lam: RealVectorLike) -> np.ndarray:
    values = as_real_vector(lam)
    return np.full(values.size, math.fsum(values) / values.size)


# ─── Schur-series route ─────────────────────────────────────────────

def _log_prefactor(mu: Partition, d: int) -> float:
    """log prod_{i <= l(mu)} (d-i)! / (mu_i + d - i)!"""
    return float(sum(gammaln(d - i + 1) - gammaln(part + d - i + 1)
                     for i, part in enumerate(mu.parts, start=1)))


def series_moment(s: SpectrumVector, order: int) -> float:
    """
    m_order = sum over |mu| = order of Delta^{order/2} S_mu(0) * S_mu(Lambda) * prefactor(mu, d).

    Args:
      s     – centered spectrum
      order – 2 or 4
    """
    if order not in (2, 4):
        raise ValueError(f"series moments are available for order 2 and 4, got {order}")
    d = s.d
    total = 0.0
    for mu in partitions_of(order, d):
        coefficient = laplacian_at_zero(mu, d)
        if coefficient == 0:
            continue
        total += coefficient * schur(mu, s.Lambda) * math.exp(_log_prefactor(mu, d))
    return total


def moment2_exact(s: SpectrumVector) -> float:
    """E ||J(U* D0 U)||^2 = p_2(Lambda) / (d + 1)."""
    return s.p2 / (s.d + 1)


def moment_coefficients(d: int) -> Tuple[float, float]:
    """
    (a, b) with m_4 = a * p_2(Lambda)^2 + b * p_4(Lambda) for centered spectra.
    """
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    cubic = (d + 1) * (d + 2) * (d + 3)
    return 1.0 / cubic + 1.0 / (d * (d + 1)), 2.0 / cubic


def moment4_exact(s: SpectrumVector) -> float:
    """E ||J(U* D0 U)||^4, summed through the Schur series; valid for all d >= 1."""
    return series_moment(s, 4)


def moment4_closed_form(s: SpectrumVector) -> float:
    a, b = moment_coefficients(s.d)
    return a * s.p2 ** 2 + b * s.p4


def variance_Y(s: SpectrumVector) -> float:
    """Var Y = m4 - m2^2 ~ 2 p_2^2 / d^3 when p_2 grows like d."""
    d = s.d
    p2 = s.p2
    # m4 - m2^2 with the cancellation done by hand
    return p2 * p2 / (d * (d + 1) ** 2) + (p2 * p2 + 2.0 * s.p4) / ((d + 1) * (d + 2) * (d + 3))


def uncentered_moment2(lam: RealVectorLike) -> float:
    """E ||J(U* D(lambda) U)||^2 = m_2 + d * (trace mean)^2."""
    s = center_spectrum(lam)
    return moment2_exact(s) + s.d * s.trace_mean ** 2


def localization_extremes(s: SpectrumVector) -> Dict[str, float]:
    """
    Quantum variance at the two ends of the permutohedron: an eigenbasis
    (vertex) gives p_2(Lambda)/d, the center of mass gives 0.
    """
    return {
        "vertex": s.p2 / s.d,
        "center": 0.0,
        "haar_mean": s.p2 / (s.d * (s.d + 1)),
    }


# ─── beta_4 as printed ──────────────────────────────────────────────

def beta4_resolved(d: int) -> float:
    """Coefficient of p_2^2 in the last display of the degree-4 derivation."""
    if d <= 2:
        raise SingularClosedFormError(d)
    return (1.0 / ((d + 1) * d)
            + (4 * d - 1) / ((d + 3) * (d + 2) * (d + 1))
            - (d - 1) / ((d + 2) * (d + 1) * (d - 2)))


def beta4_statement(d: int) -> float:
    """Coefficient of p_2^2 as it appears in the statement of the moment lemma."""
    if d <= 2:
        raise SingularClosedFormError(d)
    return (4.0 / ((d + 1) * d)
            - 4.0 * (d - 1) / ((d + 2) * (d + 1) * (d - 2))
            + (12 * d * d + 4 * d * (d - 1)) / ((d + 3) * (d + 2) * (d + 1) * d))


def beta4_ratio(d: int) -> float:
    return beta4_statement(d) / beta4_resolved(d)


def beta4_candidates(s: SpectrumVector) -> Dict[str, float]:
    """m_4 under each candidate form: statement, final display, recomputed series."""
    p2 = s.p2
    candidates = {"recomputed_series": moment4_exact(s)}
    try:
        candidates["lemma_statement"] = beta4_statement(s.d) * p2 * p2
        candidates["final_display"] = beta4_resolved(s.d) * p2 * p2
    except SingularClosedFormError:
        logger.debug(f"Printed beta_4 forms are singular at d={s.d}")
    return candidates


# ─── Orbital Fourier transform ──────────────────────────────────────

def orbital_fourier_truncated(s: SpectrumVector, X: RealVectorLike, max_degree: int = 4) -> complex:
    """
    Partial sum over |mu| <= max_degree of S_mu(X) * i^|mu| * S_mu(Lambda) * prefactor(mu, d),
    the series of E exp(i <X, diag(U D0 U*)>).

    Raises:
      DimensionMismatchError if dim(X) != d
      ValueError unless 0 <= max_degree <= 4
    """
    x = as_real_vector(X)
    if x.size != s.d:
        raise DimensionMismatchError(f"X has dimension {x.size}, spectrum has {s.d}")
    if not 0 <= max_degree <= 4:
        raise ValueError(f"max_degree must lie in [0, 4], got {max_degree}")
    total = 0j
    for weight in range(max_degree + 1):
        phase = 1j ** weight
        for mu in partitions_of(weight, s.d):
            term = schur(mu, x) * schur(mu, s.Lambda)
            if term == 0.0:
                continue
            total += phase * term * math.exp(_log_prefactor(mu, s.d))
    return complex(total)


# ─── Empirical spectral measure ─────────────────────────────────────

@dataclass
class EmpiricalMeasure:
    """Finite atomic probability measure."""

    locations: np.ndarray
    weights: np.ndarray
    label: Optional[str] = field(default=None)

    def __post_init__(self):
        self.locations = np.asarray(self.locations, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.locations.shape != self.weights.shape or self.locations.ndim != 1:
            raise DimensionMismatchError("locations and weights must be 1-D arrays of equal length")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {math.fsum(self.weights)!r}, expected 1")

    @property
    def atoms(self) -> List[Tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    def moment(self, k: int) -> float:
        return math.fsum(self.weights * self.locations ** k)

    def moments(self, max_moment: int) -> List[float]:
        return [self.moment(k) for k in range(1, max_moment + 1)]

    def central_moment(self, k: int) -> float:
        mean = self.moment(1)
        return math.fsum(self.weights * (self.locations - mean) ** k)

    @classmethod
    def uniform(cls, locations: RealVectorLike, label: Optional[str] = None) -> "EmpiricalMeasure":
        values = as_real_vector(locations)
        return cls(values, np.full(values.size, 1.0 / values.size), label)


def empirical_measure(s: SpectrumVector) -> EmpiricalMeasure:
    """Uniform measure with mass 1/d at each eigenvalue."""
    return EmpiricalMeasure.uniform(s.lam)


# ─── Report ─────────────────────────────────────────────────────────

@dataclass
class MomentReport:
    """
    m2/m4 of one spectrum from the three routes: closed form, Weingarten
    oracle and Monte-Carlo (MCEstimate from qevar.haar, or None).
    """

    d: int
    m2_exact: float
    m4_exact: float
    variance_exact: float
    m2_weingarten: Optional[float] = None
    m4_weingarten: Optional[float] = None
    m2_mc: Optional[object] = None
    m4_mc: Optional[object] = None
    sample_count: int = 0
    seed: Optional[int] = None
    generator: Optional[str] = None

    def __post_init__(self):
        if self.m2_exact < 0:
            raise ValueError(f"m2 must be nonnegative, got {self.m2_exact}")
        if self.variance_exact < -1e-12 * max(1.0, self.m4_exact):
            raise ValueError(f"m4 < m2^2 (variance {self.variance_exact})")

    def discrepancies(self) -> Dict[str, float]:
        """Relative oracle residuals and MC deviations in standard errors."""
        result: Dict[str, float] = {}
        for name, exact, oracle in (("m2", self.m2_exact, self.m2_weingarten),
                                    ("m4", self.m4_exact, self.m4_weingarten)):
            if oracle is not None:
                result[f"{name}_weingarten_rel"] = abs(exact - oracle) / max(abs(oracle), 1e-300)
        for name, exact, estimate in (("m2", self.m2_exact, self.m2_mc), ("m4", self.m4_exact, self.m4_mc)):
            if estimate is not None:
                gap = abs(estimate.mean - exact)
                result[f"{name}_mc_sigmas"] = gap / estimate.stderr if estimate.stderr > 0 else (0.0 if gap == 0 else math.inf)
        return result

    def agrees(self, rel_tol: float = 1e-10, sigmas: float = 4.0) -> bool:
        for key, value in self.discrepancies().items():
            limit = rel_tol if key.endswith("_rel") else sigmas
            if value > limit:
                return False
        return True

    def to_dict(self) -> Dict[str, object]:
        def claim(value, provenance):
            return None if value is None else {"value": value, "provenance": provenance}

        return {
            "d": self.d,
            "m2_exact": claim(self.m2_exact, "closed-form"),
            "m4_exact": claim(self.m4_exact, "closed-form"),
            "variance_exact": claim(self.variance_exact, "closed-form"),
            "m2_weingarten": claim(self.m2_weingarten, "weingarten"),
            "m4_weingarten": claim(self.m4_weingarten, "weingarten"),
            "m2_mc": self.m2_mc.to_dict() if self.m2_mc is not None else None,
            "m4_mc": self.m4_mc.to_dict() if self.m4_mc is not None else None,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "generator": self.generator,
            "discrepancies": self.discrepancies(),
            "agrees": self.agrees(),
        }
