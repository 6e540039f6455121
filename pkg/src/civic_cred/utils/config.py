"""Centralized configuration management for scenario runs."""

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from ..errors import InvalidConfig

REPLAY_TARGETS = ("random", "same", "other")


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs for the transit and contact-tracing scenarios.

    The seed fully determines a run.

    Attributes:
        seed: 64-bit seed for every random draw of the run
        citizens: Citizens (transit) or agents (tracing)
        relying_parties: Transit relying-party nodes
        credentials_per_citizen: Credentials each citizen obtains and spends
        cheaters: Citizens who replay one consumed presentation
        forgers: Citizens who also present a tampered signature
        key_bits: Modulus size of generated keys
        public_exponent: RSA public exponent
        quota: Issuer quota per (citizen, attribute, period)
        gossip_every: Gossip round after every N-th presentation (0 disables)
        replay_at: Where cheaters replay: random, same or other node
        issuer: Issuer name
        attributes: Attributes the issuer keys; citizens hold the first one
        epochs: Tracing timeline length
        proximity_events: Number of sampled proximity events
        infected: Number of infected agents
        infectious_window: Epochs before publication that count as exposure
    """

    seed: int = 0
    citizens: int = 10
    relying_parties: int = 2
    credentials_per_citizen: int = 3
    cheaters: int = 0
    forgers: int = 0
    key_bits: int = 16
    public_exponent: int = 3
    quota: int = 3
    gossip_every: int = 1
    replay_at: str = "random"
    issuer: str = "tax-office"
    attributes: Tuple[str, ...] = ("taxpayer:region-X", "taxpayer:region-Y")
    epochs: int = 28
    proximity_events: int = 200
    infected: int = 1
    infectious_window: int = 14

    def __post_init__(self):
        if isinstance(self.attributes, (list, str)):
            attributes = (self.attributes,) if isinstance(self.attributes, str) else tuple(self.attributes)
            object.__setattr__(self, "attributes", attributes)

    def validate(self) -> "ScenarioConfig":
        """Check constraints shared by both scenarios.

        Raises:
            InvalidConfig: On the first violated constraint
        """
        counts = (
            "citizens", "relying_parties", "credentials_per_citizen", "cheaters",
            "forgers", "quota", "gossip_every", "epochs", "proximity_events",
            "infected", "infectious_window",
        )
        for name in counts:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise InvalidConfig(f"{name} must be a non-negative integer, got {value!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise InvalidConfig(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")
        if self.key_bits < 8:
            raise InvalidConfig("key_bits must be at least 8")
        if self.public_exponent < 3 or self.public_exponent % 2 == 0:
            raise InvalidConfig("public_exponent must be an odd integer >= 3")
        if self.cheaters > self.citizens or self.forgers > self.citizens:
            raise InvalidConfig("cheaters and forgers must not exceed citizens")
        if self.replay_at not in REPLAY_TARGETS:
            raise InvalidConfig(f"replay_at must be one of {REPLAY_TARGETS}")
        if not self.issuer:
            raise InvalidConfig("issuer must be non-empty")
        if not self.attributes or any(not a for a in self.attributes):
            raise InvalidConfig("attributes must be a non-empty list of names")
        if len(set(self.attributes)) != len(self.attributes):
            raise InvalidConfig("attributes must be distinct")
        return self

    def merged(self, **overrides: Any) -> "ScenarioConfig":
        """Copy with the given fields replaced; None values are ignored."""
        updates = {key: value for key, value in overrides.items() if value is not None}
        unknown = set(updates) - {f.name for f in fields(self)}
        if unknown:
            raise InvalidConfig(f"Unknown config fields: {sorted(unknown)}")
        return replace(self, **updates)

    def to_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        doc["attributes"] = list(self.attributes)
        return doc

    @classmethod
    def from_dict(cls, config_dict: Mapping[str, Any], base: Optional["ScenarioConfig"] = None) -> "ScenarioConfig":
        """Load configuration from a dictionary, rejecting unknown keys.

        Example:
            config = ScenarioConfig.from_dict({"seed": 1, "citizens": 10})
        """
        return (base or cls()).merged(**dict(config_dict))

    @classmethod
    def from_env(cls, prefix: str = "CIVIC_CRED") -> "ScenarioConfig":
        """Load configuration from environment variables.

        Environment variables:
            CIVIC_CRED_SEED: Default seed
            CIVIC_CRED_KEY_BITS: Default modulus size
        """
        overrides: Dict[str, Any] = {}
        for name in ("seed", "key_bits"):
            raw = os.getenv(f"{prefix}_{name.upper()}")
            if raw:
                try:
                    overrides[name] = int(raw, 0)
                except ValueError:
                    raise InvalidConfig(f"{prefix}_{name.upper()} is not an integer: {raw!r}") from None
        return cls().merged(**overrides)


@dataclass(frozen=True)
class LogConfig:
    """Logging configuration.

    Attributes:
        level: Log level name
        log_file: Optional log file path
    """

    level: str = "WARNING"
    log_file: Optional[str] = None

    @classmethod
    def from_env(cls, prefix: str = "CIVIC_CRED_LOG") -> "LogConfig":
        """Environment variables: CIVIC_CRED_LOG_LEVEL, CIVIC_CRED_LOG_FILE."""
        return cls(
            level=os.getenv(f"{prefix}_LEVEL", cls.level),
            log_file=os.getenv(f"{prefix}_FILE") or None,
        )


@dataclass(frozen=True)
class AppConfig:
    """Complete application configuration combining all settings."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    logging: LogConfig = field(default_factory=LogConfig)

    @classmethod
    def from_env(cls) -> "AppConfig":
        return cls(scenario=ScenarioConfig.from_env(), logging=LogConfig.from_env())


def load_config_from_file(config_path: str, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """Load a ScenarioConfig from a JSON or YAML file.

    Values in the file override `base` (defaults when omitted).

    Raises:
        FileNotFoundError: If config file doesn't exist
        InvalidConfig: If the format is unsupported or the content invalid

    Example:
        config = load_config_from_file("transit.json")
    """
    from .serialization import load_json

    config_file = Path(config_path)
    if not config_file.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    if config_file.suffix == ".json":
        try:
            config_dict = load_json(config_file)
        except ValueError as e:
            raise InvalidConfig(f"Invalid JSON in {config_path}: {e}") from e
    elif config_file.suffix in (".yaml", ".yml"):
        try:
            import yaml
        except ImportError:
            raise InvalidConfig("PyYAML is required for YAML config files") from None
        with open(config_file, "r") as f:
            config_dict = yaml.safe_load(f)
    else:
        raise InvalidConfig(f"Unsupported config file format: {config_path}")

    if not isinstance(config_dict, dict):
        raise InvalidConfig(f"Config file must hold an object: {config_path}")
    return ScenarioConfig.from_dict(config_dict, base=base)
