"""UDP responder emulating a hotspot device's DNS service with shaped latency.

The latency family is lognormal over a floor offset: rtts are positive and
right-skewed, and the recorded rooted-device runs show stddevs far above
their means, which a lognormal can realize.  The family is an emulation
choice; the measurements this reproduces never identified a distribution.
"""

import heapq
import math
import random
import socket
import threading
import time
from dataclasses import dataclass, field

from . import dnswire
from .errors import InfeasibleModelError, TransportError, ValidationError
from .validation import check_ipv4, check_non_negative, check_port

FAMILY_LOGNORMAL = "lognormal"
FAMILY_FIXED = "fixed"


@dataclass(frozen=True)
class LatencyModel:
    """Delay distribution: floor + lognormal(mu, sigma), or a fixed constant."""

    family: str
    target_mean: float
    target_stddev: float
    mu: float = 0.0
    sigma: float = 0.0
    floor: float = 0.2
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in (FAMILY_LOGNORMAL, FAMILY_FIXED):
            raise ValidationError(f"unknown latency family: {self.family!r}")
        if not self.target_mean > 0:
            raise ValidationError("target_mean must be > 0")
        check_non_negative(self.target_stddev, "target_stddev")
        check_non_negative(self.floor, "floor")
        if self.family == FAMILY_FIXED and self.target_stddev != 0.0:
            raise ValidationError("fixed family requires target_stddev == 0")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValidationError("drop_probability must be in [0, 1]")


def fit_latency_model(
    mean: float,
    stddev: float,
    floor: float = 0.2,
    drop_probability: float = 0.0,
    seed: int = 0,
) -> LatencyModel:
    """Method-of-moments fit on the floor-shifted variable.

    With m = mean - floor and s = stddev:
        sigma^2 = ln(1 + s^2/m^2),  mu = ln(m) - sigma^2/2
    so the analytic mean/stddev of the model equal the requested moments
    exactly.  stddev == 0 degenerates to the fixed family.
    """
    check_non_negative(stddev, "stddev")
    if stddev == 0.0:
        if mean <= 0:
            raise InfeasibleModelError(f"fixed delay must be > 0, got {mean}")
        return LatencyModel(
            family=FAMILY_FIXED,
            target_mean=mean,
            target_stddev=0.0,
            floor=floor,
            drop_probability=drop_probability,
            seed=seed,
        )
    if mean <= floor:
        raise InfeasibleModelError(
            f"mean {mean} ms is not above the floor of {floor} ms"
        )
    m = mean - floor
    sigma2 = math.log(1.0 + (stddev / m) ** 2)
    mu = math.log(m) - sigma2 / 2.0
    return LatencyModel(
        family=FAMILY_LOGNORMAL,
        target_mean=mean,
        target_stddev=stddev,
        mu=mu,
        sigma=math.sqrt(sigma2),
        floor=floor,
        drop_probability=drop_probability,
        seed=seed,
    )


def analytic_moments(model: LatencyModel) -> tuple[float, float]:
    """Closed-form (mean, stddev) of the delay distribution in ms."""
    if model.family == FAMILY_FIXED:
        return model.target_mean, 0.0
    scale = math.exp(model.mu + model.sigma**2 / 2.0)
    return model.floor + scale, scale * math.sqrt(math.expm1(model.sigma**2))


def sample_delay(model: LatencyModel, rng: random.Random) -> float:
    """One delay draw in ms; deterministic for a given seeded rng state."""
    if model.family == FAMILY_FIXED:
        return model.target_mean
    return model.floor + rng.lognormvariate(model.mu, model.sigma)


@dataclass
class SimDeviceConfig:
    model: LatencyModel
    listen_host: str = "127.0.0.1"
    listen_port: int = 0
    answer_name: str = "dns.google."

    def __post_init__(self):
        check_ipv4(self.listen_host)
        check_port(self.listen_port)


@dataclass(order=True)
class _Pending:
    due: float
    seq: int
    payload: bytes = field(compare=False)
    addr: tuple = field(compare=False)


class SimulatedDevice:
    """Threaded UDP responder; responses are delayed independently.

    One receiver thread decodes queries and samples delays (sampling is
    serialized there, so a seed reproduces the same delay sequence); one
    dispatcher thread sends responses as their deadlines come due, so a
    slow response never blocks accepting the next datagram.

    The dispatcher sleeps to within a fraction of a millisecond of each
    deadline and spins out the remainder, so delivered delays track the
    sampled ones to within tens of microseconds instead of inheriting
    the scheduler's wakeup latency.
    """

    # how close to a deadline the dispatcher switches from waiting to spinning
    _SPIN_WINDOW_S = 0.0003

    def __init__(self, config: SimDeviceConfig):
        self.config = config
        self._rng = random.Random(config.model.seed)
        self._sock: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._cond = threading.Condition()
        self._queue: list[_Pending] = []
        self._seq = 0
        self._running = False
        self.queries_seen = 0
        self.responses_sent = 0

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "SimulatedDevice":
        if self._running:
            return self
        try:
            self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self._sock.bind((self.config.listen_host, self.config.listen_port))
        except OSError as exc:
            if self._sock is not None:
                self._sock.close()
                self._sock = None
            raise TransportError(f"cannot bind simulator socket: {exc}") from exc
        self._sock.settimeout(0.1)
        self._running = True
        self._threads = [
            threading.Thread(target=self._receive_loop, name="sim-recv", daemon=True),
            threading.Thread(target=self._dispatch_loop, name="sim-send", daemon=True),
        ]
        for t in self._threads:
            t.start()
        return self

    def stop(self) -> None:
        with self._cond:
            self._running = False
            self._cond.notify_all()
        for t in self._threads:
            t.join(timeout=2.0)
        self._threads = []
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self) -> "SimulatedDevice":
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    @property
    def address(self) -> tuple[str, int]:
        if self._sock is None:
            raise RuntimeError("simulator is not running")
        return self._sock.getsockname()[:2]

    @property
    def port(self) -> int:
        return self.address[1]

    # -- internals ---------------------------------------------------------

    def _receive_loop(self) -> None:
        model = self.config.model
        while True:
            with self._cond:
                if not self._running:
                    return
            try:
                data, addr = self._sock.recvfrom(2048)
            except socket.timeout:
                continue
            except OSError:
                return
            received_at = time.perf_counter()
            try:
                query = dnswire.decode_message(data)
            except dnswire.MalformedMessageError:
                continue
            if query.is_response or not query.questions:
                continue
            self.queries_seen += 1
            delay_s = sample_delay(model, self._rng) / 1000.0
            if model.drop_probability > 0 and self._rng.random() < model.drop_probability:
                continue
            payload = dnswire.encode_ptr_response(
                query.id,
                query.questions[0],
                self.config.answer_name,
                recursion_desired=query.recursion_desired,
            )
            with self._cond:
                self._seq += 1
                heapq.heappush(
                    self._queue, _Pending(received_at + delay_s, self._seq, payload, addr)
                )
                self._cond.notify_all()

    def _dispatch_loop(self) -> None:
        while True:
            with self._cond:
                while True:
                    if not self._running:
                        return
                    if not self._queue:
                        self._cond.wait()
                        continue
                    remaining = self._queue[0].due - time.perf_counter()
                    if remaining > self._SPIN_WINDOW_S:
                        self._cond.wait(remaining - self._SPIN_WINDOW_S)
                        continue
                    item = heapq.heappop(self._queue)
                    break
            # spin out the last stretch off the lock; a datagram arriving
            # meanwhile can be reordered by at most the spin window
            while time.perf_counter() < item.due:
                pass
            try:
                self._sock.sendto(item.payload, item.addr)
                self.responses_sent += 1
            except OSError:
                if not self._running:
                    return


def serve(config: SimDeviceConfig) -> SimulatedDevice:
    """Start a responder for the given config; caller owns shutdown."""
    return SimulatedDevice(config).start()
