"""Run configuration (flat TOML), action-map and belief-trajectory CSV readers."""
from __future__ import annotations

import csv
import dataclasses
import io
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .belief import SUM_TOLERANCE, LabelSet
from .cost import CostMatrix, load_cost_csv
from .errors import ValidationError
from .scenario import ActionMap, DegradationSchedule, GeneratorModel, RiskSettings

FORMATS = ("json", "csv")


def data_path(*parts: str) -> Path:
    """Location of a file shipped inside the package ``data`` directory."""
    return Path(str(resources.files("perceptrisk").joinpath("data", *parts)))


def default_config_path() -> Path:
    return data_path("configs", "default.toml")


@dataclass
class RunConfig:
    labels: list[str] = field(
        default_factory=lambda: ["SL", "DP", "SS", "DE", "AT", "RR", "CO", "TL", "AO", "RO"]
    )
    cost_matrix: Path = field(default_factory=lambda: data_path("costs", "gtsrb10.csv"))
    action_map: Path = field(default_factory=lambda: data_path("actions", "gtsrb10_actions.csv"))
    beliefs: Path | None = None

    T: float = 6.0
    intervals: int = 6
    q: int = 20
    epsilon: float = 0.1
    mu: float = 0.5
    eta: float = 10.0
    b0: float = 0.02
    noise_ref: float = 0.02
    s_min: float = 0.5
    s_max: float = 200.0
    kappa: float = 0.5

    seed: int = 0
    trials: int = 100
    workers: int = 1
    etas: list[float] = field(default_factory=lambda: [1.0, 10.0, 50.0])
    sweep_trials: int = 500
    noise_levels: list[float] = field(default_factory=lambda: [0.0, 0.04, 0.4, 4.0, 40.0])
    sweep_resolution: float = 1.0
    resolution_levels: list[float] = field(default_factory=lambda: [1.0, 0.3, 0.1, 0.03, 0.01])
    sweep_noise: float = 0.04

    quad_tol: float = 1e-8
    mle_tol: float = 1e-10
    mle_max_iter: int = 100_000

    verify_cases: int = 20
    verify_draws: int = 200_000
    verify_cvar_cases: int = 200
    verify_tol: float = 0.0

    out: Path = Path("out")
    format: str = "json"

    def __post_init__(self):
        self.validate()

    # ------------------------------------------------------------------
    def validate(self) -> RunConfig:
        def bad(name, msg):
            raise ValidationError(f"config field {name!r}: {msg}")

        LabelSet(self.labels)
        if not 0 < self.epsilon <= 1:
            bad("epsilon", f"must lie in (0, 1], got {self.epsilon}")
        if not 0 < self.mu < 1:
            bad("mu", f"must lie in (0, 1), got {self.mu}")
        if not self.eta >= 0:
            bad("eta", f"must be >= 0, got {self.eta}")
        if self.q < 2:
            bad("q", f"must be >= 2, got {self.q}")
        if self.intervals < 1:
            bad("intervals", f"must be >= 1, got {self.intervals}")
        if not (math.isfinite(self.T) and self.T > 0):
            bad("T", f"must be positive, got {self.T}")
        if not self.b0 >= 0:
            bad("b0", f"must be >= 0, got {self.b0}")
        if not self.noise_ref > 0:
            bad("noise_ref", f"must be positive, got {self.noise_ref}")
        if not 0 < self.s_min < self.s_max:
            bad("s_min", f"need 0 < s_min < s_max, got {self.s_min}, {self.s_max}")
        if not self.kappa > 0:
            bad("kappa", f"must be positive, got {self.kappa}")
        if self.seed < 0:
            bad("seed", f"must be nonnegative, got {self.seed}")
        for name in ("trials", "workers", "sweep_trials", "verify_cases", "verify_cvar_cases"):
            if getattr(self, name) < 1:
                bad(name, f"must be >= 1, got {getattr(self, name)}")
        if self.verify_draws < 10_000:
            bad("verify_draws", f"must be >= 10000, got {self.verify_draws}")
        if not self.verify_tol >= 0:
            bad("verify_tol", f"must be >= 0, got {self.verify_tol}")
        if any(not (math.isfinite(e) and e > 0) for e in self.etas):
            bad("etas", f"thresholds must be positive and finite, got {self.etas}")
        for name in ("noise_levels", "resolution_levels"):
            vals = getattr(self, name)
            if not vals or any(not (math.isfinite(v) and v >= 0) for v in vals):
                bad(name, f"need a non-empty list of finite nonnegative values, got {vals}")
        if any(v > 1 for v in self.resolution_levels) or not 0 <= self.sweep_resolution <= 1:
            bad("resolution_levels", "resolution fractions must lie in [0, 1]")
        if not (math.isfinite(self.sweep_noise) and self.sweep_noise >= 0):
            bad("sweep_noise", f"must be finite and >= 0, got {self.sweep_noise}")
        for name in ("quad_tol", "mle_tol"):
            if not getattr(self, name) > 0:
                bad(name, f"must be positive, got {getattr(self, name)}")
        if self.mle_max_iter < 1:
            bad("mle_max_iter", f"must be >= 1, got {self.mle_max_iter}")
        if self.format not in FORMATS:
            bad("format", f"must be one of {FORMATS}, got {self.format!r}")
        return self

    def check_files(self) -> RunConfig:
        for name in ("cost_matrix", "action_map", "beliefs"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise FileNotFoundError(f"config field {name!r}: no such file {p}")
        return self

    # ------------------------------------------------------------------
    @property
    def tau(self) -> float:
        return self.T / self.intervals

    def schedule(self) -> DegradationSchedule:
        return DegradationSchedule(self.T, self.intervals, self.b0, self.noise_ref)

    def generator(self) -> GeneratorModel:
        return GeneratorModel(0, len(self.labels), self.s_min, self.s_max, self.kappa)

    def settings(self) -> RiskSettings:
        return RiskSettings(
            self.epsilon, self.mu, self.eta, self.q, self.quad_tol, self.mle_tol, self.mle_max_iter
        )

    def sweep_points(self) -> tuple[list[tuple[float, float]], list[tuple[float, float]]]:
        noise = [(self.sweep_resolution, b) for b in self.noise_levels]
        quality = [(r, self.sweep_noise) for r in self.resolution_levels]
        return noise, quality

    def load_costs(self) -> CostMatrix:
        return load_cost_csv(self.cost_matrix, self.labels)

    def load_actions(self) -> ActionMap:
        return load_action_csv(self.action_map).check_total(LabelSet(self.labels))

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


_PATH_KEYS = {"cost_matrix", "action_map", "beliefs", "out"}
_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value: Any, base: Path) -> Any:
    default = _FIELDS[name].default
    if isinstance(value, dict):
        raise ValidationError(f"config field {name!r}: nested tables are not supported")
    if name in _PATH_KEYS:
        if not isinstance(value, str):
            raise ValidationError(f"config field {name!r}: expected a path string")
        p = Path(value).expanduser()
        # input files resolve against the config file, the output directory
        # against the working directory
        return p if p.is_absolute() or name == "out" else (base / p)
    if name in ("labels",):
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ValidationError(f"config field {name!r}: expected a list of strings")
        return value
    if name in ("etas", "noise_levels", "resolution_levels"):
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ValidationError(f"config field {name!r}: expected a list of numbers")
        return [float(v) for v in value]
    if isinstance(default, bool) or isinstance(value, bool):
        raise ValidationError(f"config field {name!r}: unexpected boolean")
    if isinstance(default, int):
        if not isinstance(value, int):
            raise ValidationError(f"config field {name!r}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if not isinstance(value, (int, float)):
            raise ValidationError(f"config field {name!r}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ValidationError(f"config field {name!r}: expected a string, got {value!r}")
        return value
    return value


def parse_config(text: str, base: Path, source: str = "<config>") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{source}: {exc}") from None
    unknown = sorted(set(raw) - set(_FIELDS))
    if unknown:
        raise ValidationError(f"{source}: unknown config field(s) {unknown}")
    values = {k: _coerce(k, v, base) for k, v in raw.items()}
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from None


def load_config(path: str | Path | None = None) -> RunConfig:
    """Read a flat TOML config; relative input paths resolve against its directory."""
    path = Path(path) if path is not None else default_config_path()
    text = path.read_text()
    return parse_config(text, path.resolve().parent, str(path))


# ----------------------------------------------------------------------------
# CSV inputs
# ----------------------------------------------------------------------------


def _data_lines(text: str):
    # yields (line number, line) skipping blank and '#' comment lines
    for n, line in enumerate(text.splitlines(), start=1):
        if line.strip() and not line.lstrip().startswith("#"):
            yield n, line


def parse_action_csv(text: str, source: str = "<action csv>") -> ActionMap:
    lines = list(_data_lines(text))
    if not lines:
        raise ValidationError(f"{source}: empty action map")
    header = [c.strip() for c in next(csv.reader([lines[0][1]]))]
    if header != ["label", "action"]:
        raise ValidationError(f"{source}:{lines[0][0]}: header must be 'label,action'")
    actions: dict[str, str] = {}
    for n, line in lines[1:]:
        row = [c.strip() for c in next(csv.reader([line]))]
        if len(row) != 2 or not all(row):
            raise ValidationError(f"{source}:{n}: expected 'label,action'")
        if row[0] in actions:
            raise ValidationError(f"{source}:{n}: duplicate label {row[0]!r}")
        actions[row[0]] = row[1]
    return ActionMap(actions)


def load_action_csv(path: str | Path) -> ActionMap:
    path = Path(path)
    return parse_action_csv(path.read_text(), str(path))


@dataclass(frozen=True)
class BeliefInterval:
    step: int
    t_start: float
    t_end: float
    times: np.ndarray
    beliefs: np.ndarray
    lines: tuple[int, ...]

    @property
    def q(self) -> int:
        return self.beliefs.shape[0]


@dataclass(frozen=True)
class BeliefTrajectory:
    labels: LabelSet
    intervals: list[BeliefInterval]
    tau: float


def parse_belief_csv(
    text: str, tau: float, labels=None, source: str = "<belief csv>"
) -> BeliefTrajectory:
    """Read ``t,p_<label>,...`` rows and group them into intervals of length ``tau``.

    Row ``t`` falls into step ``k = floor(t / tau) + 1``, i.e. the interval
    ``[(k - 1) tau, k tau)``.  Errors quote the CSV line number.  Negative
    probabilities are rejected outright; small rounding deviations are left to
    the belief clamp.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"tau must be positive, got {tau}")
    lines = list(_data_lines(text))
    if not lines:
        raise ValidationError(f"{source}: empty belief file")
    hline, header = lines[0][0], [c.strip() for c in next(csv.reader([lines[0][1]]))]
    if len(header) < 3 or header[0] != "t" or not all(h.startswith("p_") for h in header[1:]):
        raise ValidationError(f"{source}:{hline}: header must be 't,p_<label1>,...,p_<labelm>'")
    found = LabelSet([h[2:] for h in header[1:]])
    if labels is not None and tuple(labels) != found.labels:
        raise ValidationError(
            f"{source}:{hline}: belief labels {list(found)} do not match configured labels {list(labels)}"
        )
    groups: dict[int, list] = {}
    reader = csv.reader(io.StringIO("\n".join(line for _, line in lines[1:])))
    for (n, _), row in zip(lines[1:], reader):
        if len(row) != len(header):
            raise ValidationError(f"{source}:{n}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ValidationError(f"{source}:{n}: {exc}") from None
        t, p = vals[0], np.array(vals[1:])
        if not math.isfinite(t) or t < 0:
            raise ValidationError(f"{source}:{n}: time must be finite and >= 0, got {t}")
        if not np.all(np.isfinite(p)):
            raise ValidationError(f"{source}:{n}: non-finite probability")
        if np.any(p < 0):
            raise ValidationError(f"{source}:{n}: negative probability {p[p < 0][0]}")
        if abs(p.sum() - 1.0) > SUM_TOLERANCE:
            raise ValidationError(f"{source}:{n}: probabilities sum to {p.sum():.6g}")
        k = int(math.floor(t / tau + 1e-9)) + 1
        groups.setdefault(k, []).append((n, t, p))
    intervals = []
    for k in sorted(groups):
        rows = groups[k]
        intervals.append(
            BeliefInterval(
                k, (k - 1) * tau, k * tau,
                np.array([r[1] for r in rows]),
                np.vstack([r[2] for r in rows]),
                tuple(r[0] for r in rows),
            )
        )
    return BeliefTrajectory(found, intervals, float(tau))


def load_belief_csv(path: str | Path, tau: float, labels=None) -> BeliefTrajectory:
    path = Path(path)
    return parse_belief_csv(path.read_text(), tau, labels, str(path))


def dump_belief_csv(labels, times, beliefs) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", *(f"p_{lb}" for lb in labels)])
    for t, row in zip(times, beliefs):
        w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])
    return out.getvalue()
