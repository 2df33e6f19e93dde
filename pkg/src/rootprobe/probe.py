"""Timed DNS query campaigns against a target gateway.

Queries are strictly sequential (one in flight at a time) and rtts come
from the monotonic clock; the wall clock only timestamps the campaign.
Raw rtts are stored unadjusted.  The cost of the tool's own encode/send/
receive/decode path is estimated against a loopback null responder and
reported separately, never subtracted.
"""

import random
import socket
import threading
import time
from dataclasses import dataclass, field

from .dnswire import DnsQuestion, decode_message, encode_query, ptr_question_for_ipv4
from .errors import MalformedMessageError, TransportError
from .validation import THERMAL_STATES, check_choice, check_ipv4, check_port, check_positive

OUTCOME_ANSWERED = "answered"
OUTCOME_TIMEOUT = "timeout"
OUTCOME_MALFORMED = "malformed"
OUTCOME_ID_MISMATCH = "id_mismatch"

OUTCOMES = (OUTCOME_ANSWERED, OUTCOME_TIMEOUT, OUTCOME_MALFORMED, OUTCOME_ID_MISMATCH)


@dataclass
class ProbeConfig:
    target_host: str
    target_port: int = 53
    runs: int = 3
    queries_per_run: int = 100
    inter_query_gap_ms: float = 100.0
    timeout_ms: float = 2000.0
    question: DnsQuestion = field(default_factory=lambda: ptr_question_for_ipv4("8.8.8.8"))
    recursion_desired: bool = True
    thermal_state: str = "unknown"  # operator-declared; nothing in-band reveals it
    source_port: int | None = None  # None = fresh ephemeral port per query
    discard_first: int = 0  # unrecorded warm-up queries (ARP/neighbor noise)

    def __post_init__(self):
        self.target_host = check_ipv4(self.target_host)
        check_port(self.target_port)
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.queries_per_run < 1:
            raise ValueError("queries_per_run must be >= 1")
        check_positive(self.timeout_ms, "timeout_ms")
        if self.inter_query_gap_ms < 0:
            raise ValueError("inter_query_gap_ms must be >= 0")
        check_choice(self.thermal_state, THERMAL_STATES, "thermal_state")
        if self.source_port is not None:
            check_port(self.source_port)
        if self.discard_first < 0:
            raise ValueError("discard_first must be >= 0")

    @property
    def target(self) -> tuple[str, int]:
        return (self.target_host, self.target_port)


@dataclass(frozen=True)
class Sample:
    """One timed query: rtt is set exactly when the outcome is answered."""

    run_index: int
    query_index: int
    rtt_ms: float | None
    outcome: str

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if (self.rtt_ms is not None) != (self.outcome == OUTCOME_ANSWERED):
            raise ValueError("rtt_ms must be present exactly for answered samples")
        if self.rtt_ms is not None and self.rtt_ms < 0:
            raise ValueError("rtt_ms must be >= 0")


@dataclass
class Campaign:
    config: ProbeConfig
    samples: list[Sample]
    started_at: float  # wall clock, seconds since the epoch
    tool_overhead_ms: float
    aborted_reason: str | None = None

    @property
    def complete(self) -> bool:
        expected = self.config.runs * self.config.queries_per_run
        return self.aborted_reason is None and len(self.samples) == expected

    def outcome_counts(self) -> dict[str, int]:
        counts = {o: 0 for o in OUTCOMES}
        for s in self.samples:
            counts[s.outcome] += 1
        return counts

    def answered_rtts(self) -> list[float]:
        return [s.rtt_ms for s in self.samples if s.outcome == OUTCOME_ANSWERED]

    def rtts_by_run(self) -> list[list[float]]:
        runs: list[list[float]] = [[] for _ in range(self.config.runs)]
        for s in self.samples:
            if s.outcome == OUTCOME_ANSWERED:
                runs[s.run_index].append(s.rtt_ms)
        return runs

    @property
    def loss_rate(self) -> float:
        if not self.samples:
            return 0.0
        lost = sum(1 for s in self.samples if s.outcome != OUTCOME_ANSWERED)
        return lost / len(self.samples)


def probe_once(
    target: tuple[str, int],
    question: DnsQuestion,
    txn_id: int,
    timeout_ms: float,
    recursion_desired: bool = True,
    source_port: int | None = None,
    run_index: int = 0,
    query_index: int = 0,
) -> Sample:
    """Send one query and wait for a response with the matching id.

    Datagrams that do not decode, or decode to the wrong id or to a
    non-response, are discarded and the wait continues.  If the deadline
    passes, the outcome records the most specific thing seen meanwhile:
    id_mismatch over malformed over plain timeout.
    """
    wire = encode_query(question, txn_id, recursion_desired)
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    except OSError as exc:
        raise TransportError(f"cannot create probe socket: {exc}") from exc
    try:
        if source_port is not None:
            try:
                sock.bind(("0.0.0.0", source_port))
            except OSError as exc:
                raise TransportError(f"cannot bind source port {source_port}: {exc}") from exc
        saw_mismatch = saw_malformed = False
        sent_at = time.perf_counter()
        try:
            sock.sendto(wire, target)
        except OSError as exc:
            raise TransportError(f"send to {target[0]}:{target[1]} failed: {exc}") from exc
        deadline = sent_at + timeout_ms / 1000.0
        while True:
            remaining = deadline - time.perf_counter()
            if remaining <= 0:
                break
            sock.settimeout(remaining)
            try:
                data, _ = sock.recvfrom(4096)
            except socket.timeout:
                break
            except OSError as exc:
                raise TransportError(f"receive failed: {exc}") from exc
            received_at = time.perf_counter()
            try:
                msg = decode_message(data)
            except MalformedMessageError:
                saw_malformed = True
                continue
            if msg.is_response and msg.id == txn_id:
                return Sample(
                    run_index=run_index,
                    query_index=query_index,
                    rtt_ms=(received_at - sent_at) * 1000.0,
                    outcome=OUTCOME_ANSWERED,
                )
            saw_mismatch = True
        if saw_mismatch:
            outcome = OUTCOME_ID_MISMATCH
        elif saw_malformed:
            outcome = OUTCOME_MALFORMED
        else:
            outcome = OUTCOME_TIMEOUT
        return Sample(run_index=run_index, query_index=query_index, rtt_ms=None, outcome=outcome)
    finally:
        sock.close()


class _NullResponder:
    """Loopback responder that reflects queries instantly with the QR bit set."""

    def __enter__(self):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind(("127.0.0.1", 0))
        self._sock.settimeout(0.05)
        self.address = self._sock.getsockname()[:2]
        self._running = True
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()
        return self

    def _loop(self):
        while self._running:
            try:
                data, addr = self._sock.recvfrom(2048)
            except socket.timeout:
                continue
            except OSError:
                return
            if len(data) >= 12:
                reply = bytearray(data)
                reply[2] |= 0x80
                self._sock.sendto(bytes(reply), addr)

    def __exit__(self, *exc):
        self._running = False
        self._thread.join(timeout=1.0)
        self._sock.close()


def measure_tool_overhead(samples: int = 10) -> float:
    """Mean rtt in ms of the full probe path against an instant responder.

    Approximates the per-query cost the tool itself adds; stored on the
    campaign as metadata for the operator to judge, not applied to rtts.
    """
    question = ptr_question_for_ipv4("8.8.8.8")
    rtts = []
    with _NullResponder() as echo:
        for i in range(samples):
            s = probe_once(echo.address, question, txn_id=i + 1, timeout_ms=500.0)
            if s.outcome == OUTCOME_ANSWERED:
                rtts.append(s.rtt_ms)
    if not rtts:
        return float("nan")
    return sum(rtts) / len(rtts)


def run_campaign(config: ProbeConfig, progress=None) -> Campaign:
    """Run the configured campaign: runs x queries_per_run sequential probes.

    A fresh random transaction id is drawn per query.  A transport error
    aborts the campaign; samples collected so far are preserved and the
    campaign is flagged via aborted_reason.
    """
    started_at = time.time()
    overhead = measure_tool_overhead()
    rng = random.Random()
    samples: list[Sample] = []
    aborted: str | None = None
    gap_s = config.inter_query_gap_ms / 1000.0

    def one(run_idx: int, query_idx: int) -> Sample:
        return probe_once(
            config.target,
            config.question,
            txn_id=rng.getrandbits(16),
            timeout_ms=config.timeout_ms,
            recursion_desired=config.recursion_desired,
            source_port=config.source_port,
            run_index=run_idx,
            query_index=query_idx,
        )

    try:
        for _ in range(config.discard_first):
            one(0, 0)  # warm-up, not recorded
            if gap_s:
                time.sleep(gap_s)
        first = True
        for run_idx in range(config.runs):
            for query_idx in range(config.queries_per_run):
                if not first and gap_s:
                    time.sleep(gap_s)
                first = False
                sample = one(run_idx, query_idx)
                samples.append(sample)
                if progress is not None:
                    progress(sample)
    except TransportError as exc:
        aborted = str(exc)

    return Campaign(
        config=config,
        samples=samples,
        started_at=started_at,
        tool_overhead_ms=overhead,
        aborted_reason=aborted,
    )
