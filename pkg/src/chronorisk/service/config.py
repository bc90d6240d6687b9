"""Service configuration: plain-text key=value file plus environment overrides.

Every key in the file may also be supplied as CHRONORISK_<KEY> (upper-cased)
in the environment; the environment wins. Unknown keys in the file are
rejected so typos fail loudly.
"""

import os
from dataclasses import dataclass, fields

from ..errors import ConfigurationError

ENV_PREFIX = "CHRONORISK_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8700
    checkpoint: str = "model.ckpt"
    store: str = "clinic.log"
    user: str = "clinician"
    password: str = "change-me"
    workers: int = 1
    queue_depth: int = 256
    session_ttl_seconds: int = 3600
    explain_permutations: int = 300
    static_dir: str = ""

    def __post_init__(self):
        if not (0 <= self.port <= 65535):
            raise ConfigurationError(f"port out of range: {self.port}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be positive: {self.workers}")
        if self.queue_depth < 1:
            raise ConfigurationError(
                f"queue_depth must be positive: {self.queue_depth}")
        if self.session_ttl_seconds < 1:
            raise ConfigurationError("session_ttl_seconds must be positive")
        if self.explain_permutations < 1:
            raise ConfigurationError("explain_permutations must be positive")
        if not self.user or not self.password:
            raise ConfigurationError("user and password must be non-empty")


_INT_FIELDS = {f.name for f in fields(ServiceConfig) if f.type in (int, "int")}


def _parse_file(path: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        raw[key.strip()] = value.strip()
    return raw


def load_config(path: str | None = None,
                env: dict[str, str] | None = None) -> ServiceConfig:
    env = os.environ if env is None else env
    valid = {f.name for f in fields(ServiceConfig)}
    raw = _parse_file(path) if path is not None else {}
    unknown = sorted(set(raw) - valid)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    for name in valid:
        override = env.get(ENV_PREFIX + name.upper())
        if override is not None:
            raw[name] = override
    kwargs: dict = {}
    for name, value in raw.items():
        if name in _INT_FIELDS:
            try:
                kwargs[name] = int(value)
            except ValueError as exc:
                raise ConfigurationError(
                    f"config key {name} must be an integer, got {value!r}"
                ) from exc
        else:
            kwargs[name] = value
    return ServiceConfig(**kwargs)
