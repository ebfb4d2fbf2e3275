"""
Configuration for qevar experiments.

Environment defaults come from a .env file (if present) and the process
environment; an experiment is described by an optional JSON file whose
keys are overridden by command-line flags. Validation errors point at the
line of the offending key.
"""
import json
import logging
import os
import re
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv

from qevar.errors import ConfigError

logger = logging.getLogger(__name__)

load_dotenv()

COMMANDS = ("moments", "mc-verify", "beta4-adjudicate", "slln", "torus-shells", "torus-qe")
# commands whose Monte-Carlo sample count is set by `samples`
SAMPLED_COMMANDS = ("moments", "mc-verify")
FORMATS = ("json", "csv")
SPECTRUM_SOURCES = ("explicit", "uniform-grid", "random", "from-shell")
MULTIPLIERS = ("constant", "square_difference", "product", "quartic")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except (ValueError, TypeError):
        logger.warning(f"Invalid {name}={raw!r}. Using default of {default}.")
        return default


# --- Environment defaults ---
DEFAULT_SEED = 20240917
ENV_SEED = os.getenv("QEVAR_SEED")
SEED = _env_int("QEVAR_SEED", DEFAULT_SEED)
SAMPLES = _env_int("QEVAR_SAMPLES", 100000)
BATCH_SIZE = _env_int("QEVAR_BATCH_SIZE", 2000)
OUTPUT_DIR = os.getenv("QEVAR_OUTPUT_DIR", "results")
OUTPUT_FORMAT = os.getenv("QEVAR_FORMAT", "json").lower()
if OUTPUT_FORMAT not in FORMATS:
    logger.warning(f"Invalid QEVAR_FORMAT={OUTPUT_FORMAT!r}. Using default of json.")
    OUTPUT_FORMAT = "json"
PROGRESS = os.getenv("QEVAR_PROGRESS", "1") not in ("0", "false", "False", "no")

# Per-command defaults used when neither the file nor a flag sets a value.
COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "moments": {"d": [3], "spectrum_source": "explicit", "spectrum": [1.0, 0.0, -1.0]},
    "mc-verify": {"d": [3, 10, 50], "spectrum_source": "random", "spectra_count": 3},
    "beta4-adjudicate": {"d": [4, 5, 6, 7, 8], "spectrum_source": "random", "spectra_count": 1},
    "slln": {"n_max": 200, "spectrum_source": "uniform-grid"},
    "torus-shells": {"dim": 2, "n_max": 50},
    "torus-qe": {"dim": 5, "n_values": [3, 4, 5, 6], "draws": 20, "spectrum_source": "from-shell",
                 "observable": {"multiplier": "quartic", "potential": {}}},
}


@dataclass
class ExperimentConfig:
    command: str
    seed: int = SEED
    seed_source: str = "env" if ENV_SEED else "default"
    samples: int = SAMPLES
    batch_size: int = BATCH_SIZE
    d: List[int] = field(default_factory=list)
    dim: Optional[int] = None
    n_max: Optional[int] = None
    n_values: List[int] = field(default_factory=list)
    min_multiplicity: int = 1
    spectrum_source: str = "explicit"
    spectrum: List[float] = field(default_factory=list)
    spectra_count: int = 1
    draws: int = 1
    observable: Dict[str, Any] = field(default_factory=dict)
    out: str = OUTPUT_DIR
    format: str = OUTPUT_FORMAT
    progress: bool = PROGRESS
    source_path: Optional[str] = None
    _lines: Dict[str, int] = field(default_factory=dict, repr=False)

    def line_of(self, key: str) -> Optional[int]:
        return self._lines.get(key)

    def fail(self, key: str, message: str) -> ConfigError:
        line = self.line_of(key)
        return ConfigError(message, line=line, source="config")

    def validate(self) -> "ExperimentConfig":
        """
        Raises:
          ConfigError naming the offending key's line (when it came from a file)
        """
        if self.command not in COMMANDS:
            raise self.fail("command", f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.format not in FORMATS:
            raise self.fail("format", f"format must be one of {FORMATS}, got {self.format!r}")
        if self.seed < 0:
            raise self.fail("seed", f"seed must be nonnegative, got {self.seed}")
        if self.command in SAMPLED_COMMANDS and self.samples < 100:
            raise self.fail("samples", f"samples must be at least 100 for {self.command}, got {self.samples}")
        if self.batch_size < 1:
            raise self.fail("batch_size", f"batch_size must be positive, got {self.batch_size}")
        if self.spectrum_source not in SPECTRUM_SOURCES:
            raise self.fail("spectrum_source", f"spectrum_source must be one of {SPECTRUM_SOURCES}")
        if self.command in ("moments", "mc-verify", "beta4-adjudicate"):
            if not self.d:
                raise self.fail("d", "d must name at least one dimension")
            if any(d < 1 for d in self.d):
                raise self.fail("d", f"dimensions must be positive, got {self.d}")
            if self.command == "mc-verify" and any(d < 2 for d in self.d):
                raise self.fail("d", "mc-verify needs d >= 2")
            if self.spectrum_source == "explicit":
                if not self.spectrum:
                    raise self.fail("spectrum", "explicit spectrum source needs a nonempty spectrum")
                if any(d != len(self.spectrum) for d in self.d):
                    raise self.fail("d", f"explicit spectrum has {len(self.spectrum)} entries but d = {self.d}")
            if self.spectra_count < 1:
                raise self.fail("spectra_count", "spectra_count must be positive")
        if self.command == "slln":
            if self.n_max is None or self.n_max < 2:
                raise self.fail("n_max", "slln needs n_max >= 2")
        if self.command in ("torus-shells", "torus-qe"):
            if self.dim is None or not 2 <= self.dim <= 6:
                raise self.fail("dim", f"dim must lie in [2, 6], got {self.dim}")
        if self.command == "torus-shells" and (self.n_max is None or self.n_max < 1):
            raise self.fail("n_max", "torus-shells needs n_max >= 1")
        if self.command == "torus-qe":
            if not self.n_values or any(n < 1 for n in self.n_values):
                raise self.fail("n_values", "torus-qe needs positive shell radii n_values")
            if self.draws < 2:
                raise self.fail("draws", "torus-qe needs at least two ONB draws per shell")
            multiplier = self.observable.get("multiplier", "constant")
            if multiplier not in MULTIPLIERS:
                raise self.fail("observable", f"multiplier must be one of {MULTIPLIERS}, got {multiplier!r}")
        return self

    def resolved(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("_lines", None)
        data.pop("progress", None)
        return data


def _key_lines(text: str) -> Dict[str, int]:
    lines = {}
    for match in re.finditer(r'"([A-Za-z_][A-Za-z0-9_-]*)"\s*:', text):
        key = match.group(1).replace("-", "_")
        lines.setdefault(key, text.count("\n", 0, match.start()) + 1)
    return lines


def load_config_file(path: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    """
    Returns:
      (values, key -> line number)

    Raises:
      FileNotFoundError if path does not exist
      ConfigError on malformed JSON or a non-object top level
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        values = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, line=e.lineno, source="config") from e
    if not isinstance(values, dict):
        raise ConfigError("top level must be a JSON object", line=1, source="config")
    return {k.replace("-", "_"): v for k, v in values.items()}, _key_lines(text)


_INT_KEYS = ("seed", "samples", "batch_size", "dim", "n_max", "min_multiplicity", "spectra_count", "draws")
_INT_LIST_KEYS = ("d", "n_values")


def _coerce(key: str, value: Any, lines: Dict[str, int], source: str) -> Any:
    def fail(message):
        return ConfigError(message, line=lines.get(key), source=source)

    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise fail(f"{key} must be an integer, got {value!r}")
        return value
    if key in _INT_LIST_KEYS:
        if isinstance(value, int) and not isinstance(value, bool):
            return [value]
        if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise fail(f"{key} must be an integer or a list of integers, got {value!r}")
        return list(value)
    if key == "spectrum":
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                  for v in value):
            raise fail(f"spectrum must be a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if key == "observable":
        if not isinstance(value, dict):
            raise fail("observable must be an object")
        return value
    if key in ("out", "format", "spectrum_source", "command"):
        if not isinstance(value, str):
            raise fail(f"{key} must be a string, got {value!r}")
        return value
    raise fail(f"unknown key {key!r}")


def _spectrum_layer(values: Dict[str, Any], layer: Dict[str, Any]) -> bool:
    """A spectrum set in a layer brings its own d and the explicit source, unless the layer names them."""
    if "spectrum" not in layer:
        return False
    if "spectrum_source" not in layer:
        values["spectrum_source"] = "explicit"
    if "d" not in layer:
        values["d"] = [len(values["spectrum"])]
    return True


def build_config(command: str, config_path: Optional[str] = None,
                 overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Resolve an ExperimentConfig: command defaults < environment < file < flags.
    """
    values: Dict[str, Any] = dict(COMMAND_DEFAULTS.get(command, {}))
    lines: Dict[str, int] = {}
    source = "config"
    seed_source = "env" if ENV_SEED else "default"
    spectrum_given = False
    d_given = False
    if config_path:
        file_values, lines = load_config_file(config_path)
        file_command = file_values.pop("command", command)
        if file_command != command:
            raise ConfigError(f"file is for command {file_command!r}, not {command!r}",
                              line=lines.get("command"), source=source)
        for key, value in file_values.items():
            values[key] = _coerce(key, value, lines, source)
        if "seed" in file_values:
            seed_source = "file"
        spectrum_given = _spectrum_layer(values, file_values)
        d_given = "d" in file_values
    flags = {k: v for k, v in (overrides or {}).items() if v is not None and v != () and v != []}
    for key, value in flags.items():
        values[key] = list(value) if isinstance(value, tuple) else value
        lines.pop(key, None)
    if "seed" in flags:
        seed_source = "flag"
    spectrum_given = _spectrum_layer(values, flags) or spectrum_given
    d_given = d_given or "d" in flags
    # a d without a matching spectrum falls back to the uniform grid
    if d_given and not spectrum_given and values.get("spectrum_source") == "explicit":
        if any(d != len(values.get("spectrum", [])) for d in values["d"]):
            values["spectrum_source"] = "uniform-grid"
    config = ExperimentConfig(command=command, seed_source=seed_source, source_path=config_path, **values)
    config._lines = lines
    logger.debug(f"Resolved configuration: {config.resolved()}")
    return config.validate()
