"""Input validation helpers used across the estimator and network modules."""

import ipaddress
import math
from collections.abc import Iterable, Sequence

from .errors import ValidationError

# Operator-declared device temperature regime; shared by prober and classifier.
THERMAL_STATES = ("warm", "cold", "unknown")


def check_ipv4(addr: str) -> str:
    """Validate a dotted-quad IPv4 address and return it in canonical form."""
    try:
        return str(ipaddress.IPv4Address(addr))
    except (ipaddress.AddressValueError, ValueError) as exc:
        raise ValidationError(f"not a valid IPv4 address: {addr!r}") from exc


def check_port(port: int) -> int:
    if not isinstance(port, int) or isinstance(port, bool) or not 0 <= port <= 65535:
        raise ValidationError(f"port must be an integer in [0, 65535], got {port!r}")
    return port


def check_positive(value: float, name: str) -> float:
    if not value > 0:
        raise ValidationError(f"{name} must be > 0, got {value!r}")
    return value


def check_non_negative(value: float, name: str) -> float:
    if value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value!r}")
    return value


def check_rtts(values: Iterable[float], name: str = "rtts") -> list[float]:
    """Validate a round-trip-time vector: non-empty, finite, non-negative."""
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} must be numeric: {exc}") from exc
    if not out:
        raise ValidationError(f"{name} must not be empty")
    for v in out:
        if not math.isfinite(v) or v < 0:
            raise ValidationError(f"{name} must contain finite values >= 0, got {v!r}")
    return out


def check_choice(value: str, allowed: Sequence[str], name: str) -> str:
    if value not in allowed:
        raise ValidationError(f"{name} must be one of {list(allowed)}, got {value!r}")
    return value
