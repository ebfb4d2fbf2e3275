# qevar/errors.py
# ───────────────────────────────────────────────────────────────────
# Input errors raised by the components. All of them are ValueErrors so
# the CLI maps them to the "invalid input" exit code.

from typing import Optional


class NotUnitaryError(ValueError):
    def __init__(self, deviation: float):
        self.deviation = deviation
        super().__init__(f"not unitary (max |U*U - I| = {deviation:.3e})")


class NotHermitianError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class DegreeNotTabulatedError(ValueError):
    def __init__(self, weight: int):
        self.weight = weight
        super().__init__(f"degree not tabulated: |mu| = {weight}")


class DegreeNotSupportedError(ValueError):
    def __init__(self, degree: int):
        self.degree = degree
        super().__init__(f"degree not supported: k = {degree} (k <= 4 required)")


class DimensionBelowDegreeError(ValueError):
    def __init__(self, d: int, k: int):
        self.d = d
        self.k = k
        super().__init__(f"dimension below degree: d = {d} < k = {k}")


class SingularClosedFormError(ValueError):
    def __init__(self, d: int):
        self.d = d
        super().__init__(f"closed form singular; use weingarten oracle (d = {d})")


class EmptyShellError(ValueError):
    """No integer vector of the requested dimension has squared norm n."""

    def __init__(self, dim: int, n: int):
        self.dim = dim
        self.n = n
        super().__init__(f"no lattice points on the shell |k|^2 = {n} in dimension {dim}")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "config"):
        self.line = line
        self.source = source
        self.message = message
        location = f"{source}:{line}" if line is not None else source
        super().__init__(f"{location}: {message}")
