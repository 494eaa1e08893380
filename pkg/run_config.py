"""Run configuration: KEY=VALUE files, environment overrides and the run digest.

File format (same as the toolkit_config.txt that ships with the repo):

    # comment
    group=F2
    op=witness-sample
    seed=7
    x=1 a A

Precedence: command-line flags > --config file > environment
(PROXLAB_WORKERS, PROXLAB_DB) > defaults.
"""

import hashlib
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from groups import (
    ElementEncodingError,
    GroupElement,
    NotSymmetricError,
    SymmetricSet,
    UnknownBackendError,
    ball,
    decode_element,
    parse_group,
)

DEFAULT_CONFIG_FILE = "toolkit_config.txt"
DEFAULT_DB_PATH = "proxlab_runs.db"

OPS = (
    "sample-field",
    "witness-sample",
    "witness-verify",
    "pack-saturate",
    "pack-glue",
    "pack-merge",
    "glue-sample",
    "glue-verify",
    "prox-check",
    "prox-minimal",
    "prox-tprime",
    "prox-obstruct",
    "prox-faithful",
    "bound-eval",
)

ENV_KEYS = {
    "PROXLAB_WORKERS": "workers",
    "PROXLAB_DB": "db",
}

# keys that never change results and stay out of the digest
_NON_SEMANTIC = ("workers", "out", "db", "config")


class RunConfigError(ValueError):
    """Raised with every problem found in a configuration, not just the first."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    group: str = "Z"
    op: str = "sample-field"
    seed: int = 0
    seeds: Optional[str] = None
    x_radius: int = 1
    x: Optional[str] = None
    k: int = 1
    y1_size: int = 0
    size_floor: int = 0
    switch_radius: int = 4
    window_radius: Optional[int] = None
    epsilon_inv: int = 4
    max_attempts: int = 100
    trials: int = 1000
    search_radius: int = 4
    depth: int = 8
    alphabet_size: int = 2
    element: Optional[str] = None
    sites: Optional[str] = None
    e1: Optional[str] = None
    e2: Optional[str] = None
    workers: int = 1
    out: str = "-"
    db: str = DEFAULT_DB_PATH
    config: Optional[str] = field(default=None, compare=False)

    @property
    def backend(self):
        return parse_group(self.group)

    @property
    def epsilon(self) -> float:
        return 1.0 / self.epsilon_inv

    def x_set(self) -> SymmetricSet:
        """The explicit X when given, otherwise ball(x_radius)."""
        backend = self.backend
        if self.x is None:
            return ball(backend, self.x_radius)
        return SymmetricSet(frozenset(decode_element(backend, t) for t in self.x.split()))

    def seed_pair(self) -> Optional[Tuple[int, int]]:
        """The two packing seeds from `seeds=s1,s2`, or None when unset."""
        if self.seeds is None:
            return None
        first, second = _SEEDS.fullmatch(self.seeds).groups()
        return int(first), int(second)

    def element_value(self) -> Optional[GroupElement]:
        if self.element is None:
            return None
        return decode_element(self.backend, self.element)

    def site_list(self, key: str = "sites") -> List[GroupElement]:
        text = getattr(self, key)
        if text is None:
            return []
        return [decode_element(self.backend, t) for t in text.split()]


_TEXT_KEYS = ("group", "op", "seeds", "x", "element", "sites", "e1", "e2", "out", "db", "config")
_OPTIONAL_TEXT = ("seeds", "x", "element", "sites", "e1", "e2", "config")
_KNOWN_KEYS = {f.name for f in fields(RunConfig)} | {"epsilon"}
_SEEDS = re.compile(r"\s*(\d+)\s*,\s*(\d+)\s*")

# lower bounds for integer keys
_MINIMUM = {
    "x_radius": 0,
    "k": 1,
    "y1_size": 0,
    "size_floor": 0,
    "switch_radius": 1,
    "window_radius": 0,
    "epsilon_inv": 1,
    "max_attempts": 1,
    "trials": 1,
    "search_radius": 0,
    "depth": 1,
    "alphabet_size": 1,
    "workers": 1,
}


def parse_key_values(text: str, source: str = "config") -> Tuple[Dict[str, str], List[str]]:
    """KEY=VALUE lines; blank lines and # comments skipped. Returns (values, errors)."""
    values: Dict[str, str] = {}
    errors: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            errors.append(f"{source} line {lineno}: expected KEY=VALUE, got {line!r}")
            continue
        key, value = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        value = value.strip()
        if key in values:
            errors.append(f"{source} line {lineno}: duplicate key {key!r}")
            continue
        values[key] = value
    return values, errors


def _parse_epsilon(text: str) -> int:
    match = re.fullmatch(r"1\s*/\s*(\d+)", text)
    if match is None or int(match.group(1)) < 1:
        raise ValueError(f"epsilon must be written 1/m with m >= 1, got {text!r}")
    return int(match.group(1))


def build_run_config(values: Mapping[str, str], errors: Optional[List[str]] = None) -> RunConfig:
    """Validate raw string values into a RunConfig, collecting every error."""
    errors = list(errors or [])
    kwargs = {}
    for key, raw in values.items():
        if key not in _KNOWN_KEYS:
            errors.append(f"unknown key {key!r}")
            continue
        if key == "epsilon":
            try:
                m = _parse_epsilon(raw)
            except ValueError as e:
                errors.append(str(e))
                continue
            if "epsilon_inv" in values and values["epsilon_inv"] != str(m):
                errors.append(f"epsilon={raw} conflicts with epsilon_inv={values['epsilon_inv']}")
            kwargs["epsilon_inv"] = m
            continue
        if key not in _TEXT_KEYS:
            if raw == "" and key == "window_radius":
                continue
            try:
                number = int(raw)
            except ValueError:
                errors.append(f"{key} must be an integer, got {raw!r}")
                continue
            if key in _MINIMUM and number < _MINIMUM[key]:
                errors.append(f"{key} must be >= {_MINIMUM[key]}, got {number}")
                continue
            kwargs[key] = number
        else:
            if key in _OPTIONAL_TEXT and not raw:
                continue
            kwargs[key] = raw

    seeds = kwargs.get("seeds")
    if seeds is not None and _SEEDS.fullmatch(seeds) is None:
        errors.append(f"seeds must be two non-negative integers written s1,s2, got {seeds!r}")

    op = kwargs.get("op", RunConfig.op)
    if op not in OPS:
        errors.append(f"unknown op {op!r}; expected one of {', '.join(OPS)}")

    backend = None
    try:
        backend = parse_group(kwargs.get("group", RunConfig.group))
    except UnknownBackendError as e:
        errors.append(str(e))

    if backend is not None:
        for key in ("x", "element", "sites", "e1", "e2"):
            text = kwargs.get(key)
            if not text:
                continue
            decoded = []
            for token in text.split():
                try:
                    decoded.append(decode_element(backend, token))
                except ElementEncodingError as e:
                    errors.append(f"{key}: {e}")
            if key == "x" and len(decoded) == len(text.split()):
                try:
                    SymmetricSet(frozenset(decoded))
                except NotSymmetricError as e:
                    errors.append(f"x: {e}")
            if key == "element" and len(text.split()) != 1:
                errors.append(f"element must be a single group element, got {text!r}")

    if errors:
        raise RunConfigError(errors)
    return RunConfig(**kwargs)


def parse_run_config(text: str) -> RunConfig:
    values, errors = parse_key_values(text)
    return build_run_config(values, errors)


def env_values(environ: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    environ = os.environ if environ is None else environ
    return {key: environ[name] for name, key in ENV_KEYS.items() if environ.get(name)}


def resolve_run_config(
    flags: Mapping[str, Optional[str]],
    config_file: Optional[str] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """Merge flags over the config file over the environment, then validate once."""
    values: Dict[str, str] = dict(env_values(environ))
    errors: List[str] = []
    if config_file is not None:
        path = Path(config_file)
        if not path.exists():
            raise RunConfigError([f"config file not found: {config_file}"])
        file_values, errors = parse_key_values(path.read_text(), source=config_file)
        values.update(file_values)
        values["config"] = config_file
    values.update({k: str(v) for k, v in flags.items() if v is not None})
    return build_run_config(values, errors)


def render_run_config(config: RunConfig, semantic_only: bool = True) -> str:
    """Canonical KEY=VALUE rendering, keys sorted, unset keys omitted."""
    lines = []
    for f in sorted(fields(config), key=lambda f: f.name):
        if semantic_only and f.name in _NON_SEMANTIC:
            continue
        value = getattr(config, f.name)
        if value is None:
            continue
        lines.append(f"{f.name}={value}")
    return "\n".join(lines) + "\n"


def run_digest(config: RunConfig) -> str:
    """SHA-256 of the canonical rendering; worker count and output paths are excluded."""
    return hashlib.sha256(render_run_config(config).encode()).hexdigest()
