"""Exception types shared across the toolkit."""


class RootProbeError(Exception):
    """Base class for all rootprobe errors."""


class ValidationError(RootProbeError, ValueError):
    """An input value violates a documented precondition."""


class MalformedMessageError(RootProbeError, ValueError):
    """A byte sequence could not be parsed as a DNS message."""


class TransportError(RootProbeError, OSError):
    """A socket could not be created, bound, or written to.

    Distinct from a probe timeout, which is a normal measurement outcome.
    """


class EmptyInputError(RootProbeError, ValueError):
    """A statistic was requested over an empty sample set."""


class InsufficientSamplesError(RootProbeError, ValueError):
    """A two-sample comparison needs at least two samples per side."""


class InfeasibleModelError(RootProbeError, ValueError):
    """Requested latency moments cannot be realized (mean <= floor)."""


class ProfileFormatError(RootProbeError, ValueError):
    """A profile file has an unsupported or inconsistent format."""
