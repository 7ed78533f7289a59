import logging
import os
from typing import Any

from pydantic import model_validator
from pydantic_config import BaseConfig


HARD_LIMITS = {"carrier": 64, "powerset": 24, "fin_base": 5, "cover": 10, "product": 12, "mediator_bits": 16}

_LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def get_logger(name: str) -> logging.Logger:
    """Return a logger under the `pfl` namespace, installing the package handler on first use."""
    root = logging.getLogger("pfl")
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_LOG_FORMAT, datefmt="%b %d %H:%M:%S"))
        root.addHandler(handler)
        root.setLevel(os.environ.get("PFL_LOG_LEVEL", "WARNING").upper())
        root.propagate = False
    if not name.startswith("pfl"):
        name = f"pfl.{name}"
    return logging.getLogger(name)


logger = get_logger(__name__)


class LimitConfig(BaseConfig):
    carrier: int = 64
    powerset: int = 24
    fin_base: int = 5
    cover: int = 10
    product: int = 12
    mediator_bits: int = 16

    @model_validator(mode="before")
    def clamp_to_hard_limits(cls, values: dict[str, Any]) -> dict[str, Any]:
        """Caps may be lowered freely but never raised above the hard maxima"""
        if not isinstance(values, dict):
            return values
        for key, value in list(values.items()):
            if key not in HARD_LIMITS or value is None:
                continue
            value = int(value)
            if value < 0:
                raise ValueError(f"limit {key} must be non-negative, got {value}")
            if value > HARD_LIMITS[key]:
                logger.warning(f"limit {key}={value} exceeds the hard maximum, using {HARD_LIMITS[key]}")
                value = HARD_LIMITS[key]
            values[key] = value
        return values


def _limits_from_env() -> LimitConfig:
    env_limit = os.environ.get("PFL_LIMIT")
    if env_limit is None:
        return LimitConfig()
    return LimitConfig(powerset=int(env_limit))


_limits: LimitConfig | None = None


def get_limits() -> LimitConfig:
    global _limits
    if _limits is None:
        _limits = _limits_from_env()
    return _limits


def set_limits(limits: LimitConfig | None) -> None:
    """Replace the process-wide limits. `None` re-reads the environment on next access."""
    global _limits
    _limits = limits


class PflError(Exception):
    exit_code = 2

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


class CarrierMismatch(PflError, ValueError):
    pass


class LimitExceeded(PflError, ValueError):
    pass


class InvalidStructure(PflError, ValueError):
    pass


class DslError(PflError):
    pass


class ParseError(DslError):
    exit_code = 1

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        location = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{location}{message}")
        self.line = line
        self.column = column


class ResolutionError(DslError):
    pass


class ContractViolation(PflError):
    exit_code = 3


class FactorizationFailed(ContractViolation):
    pass


def check_limit(kind: str, value: int, what: str) -> None:
    """Raise `LimitExceeded` if `value` is above the configured cap `kind`"""
    cap = getattr(get_limits(), kind)
    if value > cap:
        raise LimitExceeded(f"{what} is {value}, above the {kind} limit of {cap}")
