"""
Run configuration: a TOML file resolved into frozen dataclasses.

Physics defaults live in the bundled files under configs/; the values below
only fill keys a file leaves out.
"""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from src.errors import ConfigError, DomainError
from src.nonlinearity import Family, Nonlinearity
from src.solver.grid import RadialGrid


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NonlinearityConfig:
    p: float = 2.0
    q: float = 0.0
    family: str = Family.SUPER_EXPONENTIAL.value


@dataclass(frozen=True)
class GridConfig:
    n: int = 1
    R: float = 2.0
    J: int = 256


@dataclass(frozen=True)
class InitConfig:
    profile: str = "parabola"
    amplitude: float = 1.0
    supersolution_check: bool = True


@dataclass(frozen=True)
class SolverConfig:
    phi_stop: float = 400.0
    safety: float = 0.02
    diffusion_safety: float = 0.5
    tol: float = 1e-9
    snapshot_delta_phi: float = 1.0
    t_max: float = 10.0
    max_steps: int = 5_000_000
    probe_offset: float = 1.0


@dataclass(frozen=True)
class AnalysisConfig:
    alpha: Optional[float] = None
    C_compact: float = 1.0
    y_resolution: int = 200
    y_max: float = 8.0
    lambdas: Tuple[float, ...] = (1.0, 0.5)
    boundary_layer: float = 0.05


@dataclass(frozen=True)
class OdeConfig:
    y0: float = 1.0
    stop_value: float = 10.0
    rel_tol: float = 1e-8


SECTIONS = {
    "nonlinearity": NonlinearityConfig,
    "grid": GridConfig,
    "init": InitConfig,
    "solver": SolverConfig,
    "analysis": AnalysisConfig,
    "ode": OdeConfig,
}


@dataclass(frozen=True)
class RunConfig:
    nonlinearity: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    init: InitConfig = field(default_factory=InitConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    ode: OdeConfig = field(default_factory=OdeConfig)
    output_dir: str = "runs/default"

    def nl(self) -> Nonlinearity:
        c = self.nonlinearity
        return Nonlinearity(c.p, c.q, Family(c.family))

    def radial_grid(self) -> RadialGrid:
        c = self.grid
        return RadialGrid(c.n, c.R, c.J)

    @property
    def alpha(self) -> float:
        """Exponent of the analysis ball B_{s^α}; 1/(2p) unless configured."""
        if self.analysis.alpha is not None:
            return self.analysis.alpha
        return 1.0 / (2.0 * self.nonlinearity.p)

    @property
    def in_theorem_scope(self) -> bool:
        return self.grid.n <= 2

    def to_dict(self) -> Dict[str, Any]:
        """Resolved configuration with alpha filled in; the output directory is not part of it."""
        data = dataclasses.asdict(self)
        data.pop("output_dir")
        data["analysis"]["alpha"] = self.alpha
        data["analysis"]["lambdas"] = list(self.analysis.lambdas)
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def run_id(self) -> str:
        return self.config_hash()[:12]


def parse_value(text: str) -> Any:
    """A TOML scalar or array; bare words fall back to strings."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Set dotted keys ("solver.phi_stop") in a nested dict, returning a new dict."""
    merged = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    for path, value in overrides.items():
        if "." not in path:
            merged[path] = value
            continue
        section, key = path.split(".", 1)
        merged.setdefault(section, {})
        merged[section][key] = value
    return merged


def _build_section(name: str, cls, raw: Any, problems: List[tuple]):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        problems.append((name, "expected a table"))
        return cls()
    known = {f.name: f for f in dataclasses.fields(cls)}
    values = {}
    for key, value in raw.items():
        if key not in known:
            problems.append((f"{name}.{key}", "unknown key"))
            continue
        default = known[key].default
        if isinstance(default, tuple):
            if not isinstance(value, (list, tuple)):
                problems.append((f"{name}.{key}", "expected an array"))
                continue
            value = tuple(float(v) for v in value)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                problems.append((f"{name}.{key}", "expected true or false"))
                continue
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
                problems.append((f"{name}.{key}", f"expected an integer, got {value!r}"))
                continue
            value = int(value)
        elif isinstance(default, float) or default is None:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                problems.append((f"{name}.{key}", f"expected a number, got {value!r}"))
                continue
            value = float(value)
        elif isinstance(default, str) and not isinstance(value, str):
            problems.append((f"{name}.{key}", f"expected a string, got {value!r}"))
            continue
        values[key] = value
    return cls(**values)


def build_config(raw: Dict[str, Any]) -> RunConfig:
    """
    Validate a raw nested dict and build the RunConfig.

    Raises:
        ConfigError: listing every problem with its dotted field path
    """
    problems: List[tuple] = []
    for key in raw:
        if key not in SECTIONS and key != "output_dir":
            problems.append((key, "unknown section"))

    sections = {name: _build_section(name, cls, raw.get(name), problems) for name, cls in SECTIONS.items()}
    output_dir = raw.get("output_dir", RunConfig.output_dir)
    if not isinstance(output_dir, str):
        problems.append(("output_dir", "expected a string"))
        output_dir = RunConfig.output_dir
    config = RunConfig(output_dir=output_dir, **sections)

    try:
        config.nl()
    except (DomainError, ValueError) as e:
        problems.append(("nonlinearity", str(e)))
    try:
        config.radial_grid()
    except DomainError as e:
        problems.append(("grid", str(e)))

    p = config.nonlinearity.p
    if p > 0.0 and not 0.0 < config.alpha < 1.0 / p:
        problems.append((
            "analysis.alpha",
            f"alpha={config.alpha} must lie in (0, 1/p) = (0, {1.0 / p:.6g}); "
            "this is the hypothesis of Lemma 3.2 (h_α >= ½F⁻¹(T-t))",
        ))
    if not config.init.amplitude > 0.0:
        problems.append(("init.amplitude", f"must be positive, got {config.init.amplitude}"))
    if config.init.profile not in ("parabola", "cosine"):
        problems.append(("init.profile", f"unknown profile {config.init.profile!r}"))
    if not config.solver.snapshot_delta_phi > 0.0:
        problems.append(("solver.snapshot_delta_phi", "must be positive"))
    if not 0.0 < config.solver.safety <= 0.5:
        problems.append(("solver.safety", "must lie in (0, 0.5]"))
    if not 0.0 < config.solver.diffusion_safety <= 1.0:
        problems.append(("solver.diffusion_safety", "must lie in (0, 1]"))
    if config.analysis.y_resolution < 8:
        problems.append(("analysis.y_resolution", "must be at least 8"))
    if not config.analysis.C_compact > 0.0:
        problems.append(("analysis.C_compact", "must be positive"))
    if any(not 0.0 < lam <= 1.0 for lam in config.analysis.lambdas):
        problems.append(("analysis.lambdas", "every λ must lie in (0, 1]"))
    if not 0.0 <= config.analysis.boundary_layer < 0.5:
        problems.append(("analysis.boundary_layer", "must lie in [0, 0.5)"))
    if not config.ode.stop_value > config.ode.y0 > 0.0:
        problems.append(("ode", "need 0 < y0 < stop_value"))
    if not 1e-12 <= config.ode.rel_tol <= 1e-3:
        problems.append(("ode.rel_tol", "must lie in [1e-12, 1e-3]"))

    if problems:
        raise ConfigError(problems)
    if not config.in_theorem_scope:
        logger.warning(f"n={config.grid.n}: out of theorem scope (the profile result covers n <= 2)")
    return config


def load_config(path: Optional[str], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read a TOML file (or start from defaults when path is None) and apply overrides."""
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        except FileNotFoundError:
            raise ConfigError([("--config", f"file not found: {path}")])
        except tomllib.TOMLDecodeError as e:
            raise ConfigError([("--config", f"not valid TOML: {e}")])
    return build_config(apply_overrides(raw, overrides or {}))
