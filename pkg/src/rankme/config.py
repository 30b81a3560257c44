"""TOML run configuration with strict validation.

Example::

    command = "simulate"
    seed = 15
    reps = 2000
    estimators = ["r", "ls", "l1"]

    [scenario]
    n = 100
    beta = [2.0]
    x = "uniform(-3,9)"
    v = "normal(0,2)"
    e = "logistic(0,1)"
    design = "deterministic"

Unknown keys anywhere are rejected, so a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .distributions import MvNormal, law_literal, parse_law
from .errors import ConfigError, RankMEError
from .estimators import ESTIMATOR_NAMES
from .scores import SCORE_ALIASES
from .simulation import DESIGN_MODES, Fixed, ModelSpec, Random
from .tables import TABLE_IDS

COMMANDS = ("estimate", "simulate", "table", "asym", "diag")
DIAG_KINDS = ("linearity", "representation", "hellinger", "fisher")
FORMATS = ("json", "csv")
CONSTRUCTIONS = ("approx", "expected")

_TOP_KEYS = {
    "command", "seed", "reps", "jobs", "score", "scores", "estimators", "estimator",
    "input", "table", "out", "format", "scenario", "diag",
}
_SCENARIO_KEYS = {"n", "beta", "beta0", "x", "v", "u", "e", "design"}
_DIAG_KEYS = {"kind", "ns", "pairs", "shift", "reps"}


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 100
    beta: tuple = (2.0,)
    beta0: float = 1.0
    x: str = "uniform(-3,9)"
    v: str = "none"
    u: str = "none"
    e: str = "logistic(0,1)"
    design: str = "random"

    def to_spec(self) -> ModelSpec:
        try:
            x = parse_law(self.x)
            if x is None:
                raise ConfigError("scenario.x: a regressor law is required")
            e = parse_law(self.e)
            if e is None or isinstance(e, MvNormal):
                raise ConfigError("scenario.e: a scalar model-error law is required")
            return ModelSpec(
                n=self.n,
                beta=self.beta,
                beta0=self.beta0,
                e_law=e,
                x_law=Random(x),
                v_law=parse_law(self.v),
                u_law=parse_law(self.u),
                design_mode=self.design,
            )
        except ConfigError:
            raise
        except RankMEError as exc:
            raise ConfigError(f"scenario: {exc}") from exc


@dataclass(frozen=True)
class DiagConfig:
    kind: str = "linearity"
    ns: tuple = (100, 400, 1600)
    pairs: tuple = (((1.0,), (1.0,)),)
    shift: str = "normal(0,1)"
    reps: int = 200


@dataclass(frozen=True)
class RunConfig:
    command: Optional[str] = None
    seed: int = 15
    reps: int = 2000
    jobs: int = 1
    score: str = "wilcoxon"
    scores: str = "approx"
    estimators: tuple = ("r", "ls", "l1")
    estimator: str = "r"
    input: Optional[str] = None
    table: str = "t1"
    out: Optional[str] = None
    format: Optional[str] = None
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    diag: DiagConfig = field(default_factory=DiagConfig)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg

    def canonical(self) -> dict:
        d = asdict(self)
        for key in ("out", "format", "jobs"):
            d.pop(key)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _check_keys(section: str, d: dict, allowed: set) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        where = f"[{section}] " if section else ""
        raise ConfigError(f"{where}unknown key(s): {', '.join(extra)}")


def _typed(name: str, value, kind):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        return value
    raise AssertionError(kind)


def _law_text(name: str, value) -> str:
    if value == 0 and not isinstance(value, bool):
        return "none"
    return _typed(name, value, str)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML run configuration.

    Raises
    ------
    ConfigError
        On TOML syntax errors (with line and column), unknown keys, wrong
        types, or out-of-range values; the message names the field.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc
    _check_keys("", doc, _TOP_KEYS)
    kw = {}
    for key in ("command", "score", "scores", "estimator", "input", "table", "out", "format"):
        if key in doc:
            kw[key] = _typed(key, doc[key], str)
    for key in ("seed", "reps", "jobs"):
        if key in doc:
            kw[key] = _typed(key, doc[key], int)
    if "estimators" in doc:
        ests = doc["estimators"]
        if not isinstance(ests, list) or not ests:
            raise ConfigError("estimators: expected a non-empty list")
        kw["estimators"] = tuple(_typed("estimators", e, str) for e in ests)
    if "scenario" in doc:
        kw["scenario"] = _parse_scenario(doc["scenario"])
    if "diag" in doc:
        kw["diag"] = _parse_diag(doc["diag"])
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def _parse_scenario(d) -> ScenarioConfig:
    if not isinstance(d, dict):
        raise ConfigError("scenario: expected a table")
    _check_keys("scenario", d, _SCENARIO_KEYS)
    kw = {}
    if "n" in d:
        kw["n"] = _typed("scenario.n", d["n"], int)
    if "beta" in d:
        b = d["beta"]
        b = b if isinstance(b, list) else [b]
        kw["beta"] = tuple(_typed("scenario.beta", x, float) for x in b)
    if "beta0" in d:
        kw["beta0"] = _typed("scenario.beta0", d["beta0"], float)
    for key in ("x", "v", "u", "e"):
        if key in d:
            kw[key] = _law_text(f"scenario.{key}", d[key])
    if "design" in d:
        kw["design"] = _typed("scenario.design", d["design"], str)
    return ScenarioConfig(**kw)


def _parse_diag(d) -> DiagConfig:
    if not isinstance(d, dict):
        raise ConfigError("diag: expected a table")
    _check_keys("diag", d, _DIAG_KEYS)
    kw = {}
    if "kind" in d:
        kw["kind"] = _typed("diag.kind", d["kind"], str)
    if "ns" in d:
        if not isinstance(d["ns"], list) or not d["ns"]:
            raise ConfigError("diag.ns: expected a non-empty list of sizes")
        kw["ns"] = tuple(_typed("diag.ns", x, int) for x in d["ns"])
    if "pairs" in d:
        try:
            kw["pairs"] = tuple(
                (tuple(float(x) for x in b), tuple(float(x) for x in c)) for b, c in d["pairs"]
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("diag.pairs: expected [[b0star], [beta0]] pairs") from exc
    if "shift" in d:
        kw["shift"] = _typed("diag.shift", d["shift"], str)
    if "reps" in d:
        kw["reps"] = _typed("diag.reps", d["reps"], int)
    return DiagConfig(**kw)


def validate(cfg: RunConfig) -> None:
    if cfg.command is not None and cfg.command not in COMMANDS:
        raise ConfigError(f"command: expected one of {COMMANDS}, got {cfg.command!r}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {cfg.seed}")
    if cfg.reps < 2:
        raise ConfigError(f"reps: must be at least 2, got {cfg.reps}")
    if cfg.jobs < 1:
        raise ConfigError(f"jobs: must be at least 1, got {cfg.jobs}")
    if cfg.score.lower() not in SCORE_ALIASES:
        raise ConfigError(f"score: unknown score {cfg.score!r}")
    if cfg.scores not in CONSTRUCTIONS:
        raise ConfigError(f"scores: expected one of {CONSTRUCTIONS}, got {cfg.scores!r}")
    for e in cfg.estimators:
        if e not in ESTIMATOR_NAMES:
            raise ConfigError(f"estimators: unknown estimator {e!r}")
    if cfg.estimator not in ESTIMATOR_NAMES:
        raise ConfigError(f"estimator: unknown estimator {cfg.estimator!r}")
    if cfg.table not in TABLE_IDS:
        raise ConfigError(f"table: expected one of {TABLE_IDS}, got {cfg.table!r}")
    if cfg.format is not None and cfg.format not in FORMATS:
        raise ConfigError(f"format: expected one of {FORMATS}, got {cfg.format!r}")
    sc = cfg.scenario
    if sc.design not in DESIGN_MODES:
        raise ConfigError(f"scenario.design: expected one of {DESIGN_MODES}, got {sc.design!r}")
    if sc.n < len(sc.beta) + 2:
        raise ConfigError(f"scenario.n: need n >= p + 2, got n={sc.n}")
    sc.to_spec()
    dg = cfg.diag
    if dg.kind not in DIAG_KINDS:
        raise ConfigError(f"diag.kind: expected one of {DIAG_KINDS}, got {dg.kind!r}")
    if any(n < 3 for n in dg.ns):
        raise ConfigError("diag.ns: sizes must be at least 3")
    if dg.reps < 2:
        raise ConfigError(f"diag.reps: must be at least 2, got {dg.reps}")
    try:
        if parse_law(dg.shift) is None:
            raise ConfigError("diag.shift: a shift law is required")
    except RankMEError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"diag.shift: {exc}") from exc


def scenario_from_spec(spec: ModelSpec) -> ScenarioConfig:
    if isinstance(spec.x_law, Fixed):
        raise ConfigError("fixed design matrices cannot be written to a config")
    return ScenarioConfig(
        n=spec.n,
        beta=spec.beta,
        beta0=spec.beta0,
        x=spec.x_law.literal,
        v=law_literal(spec.v_law),
        u=law_literal(spec.u_law),
        e=spec.e_law.literal,
        design=spec.design_mode,
    )
