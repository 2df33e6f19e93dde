"""Light pre-check that a target actually exposes a usable DNS service.

Hotspot targets typically expose almost nothing, so the scan is built to
be non-intrusive: one datagram per UDP port, one connection attempt per
TCP port, nothing else.  UDP state is reported as unknown unless the
kernel surfaces an ICMP-style refusal, because silence proves nothing.
"""

import random
import socket
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .dnswire import decode_message, encode_query, ptr_question_for_ipv4
from .errors import MalformedMessageError, ValidationError
from .validation import check_ipv4, check_port, check_positive

STATUS_OPEN = "open"
STATUS_CLOSED = "closed"
STATUS_FILTERED = "filtered"
STATUS_UNKNOWN = "unknown"

TRANSPORTS = ("udp", "tcp")

# DNS and DHCP first: on the hotspots this tool targets they are commonly
# the only services present at all.
DEFAULT_PORTS = ((53, "udp"), (67, "udp"), (80, "tcp"), (443, "tcp"))


@dataclass(frozen=True)
class PortStatus:
    port: int
    transport: str
    status: str


@dataclass(frozen=True)
class ServiceReport:
    target: str
    dns_functional: bool
    dns_rtt_hint_ms: float | None
    probed_ports: tuple[PortStatus, ...]


def _probe_udp(host, port, timeout_s, payload, expect_txn_id=None):
    """One datagram out; returns (status, rtt_ms or None).

    A connected UDP socket is used so an ICMP port-unreachable comes back
    as ECONNREFUSED.  With expect_txn_id set, only a decodable DNS
    response with that id counts as open.
    """
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    except OSError:
        return STATUS_UNKNOWN, None
    try:
        try:
            sock.connect((host, port))
            sent_at = time.perf_counter()
            sock.send(payload)
        except OSError:
            return STATUS_UNKNOWN, None
        deadline = sent_at + timeout_s
        while True:
            remaining = deadline - time.perf_counter()
            if remaining <= 0:
                return STATUS_UNKNOWN, None
            sock.settimeout(remaining)
            try:
                data = sock.recv(4096)
            except socket.timeout:
                return STATUS_UNKNOWN, None
            except ConnectionRefusedError:
                return STATUS_CLOSED, None
            except OSError:
                return STATUS_UNKNOWN, None
            rtt_ms = (time.perf_counter() - sent_at) * 1000.0
            if expect_txn_id is None:
                return STATUS_OPEN, rtt_ms
            try:
                msg = decode_message(data)
            except MalformedMessageError:
                continue
            if msg.is_response and msg.id == expect_txn_id:
                return STATUS_OPEN, rtt_ms
    finally:
        sock.close()


def _probe_tcp(host, port, timeout_s):
    try:
        with socket.create_connection((host, port), timeout=timeout_s):
            return STATUS_OPEN
    except ConnectionRefusedError:
        return STATUS_CLOSED
    except socket.timeout:
        return STATUS_FILTERED
    except OSError:
        return STATUS_UNKNOWN


def scan_services(
    target: str,
    ports=DEFAULT_PORTS,
    timeout_ms: float = 1000.0,
    dns_port: int = 53,
) -> ServiceReport:
    """Probe the given ports and check DNS works at udp/dns_port.

    The functional DNS check doubles as the probe for that UDP port, so
    the one-datagram-per-port bound holds even when the port is listed.
    """
    target = check_ipv4(target)
    check_positive(timeout_ms, "timeout_ms")
    check_port(dns_port)
    normalized = []
    for port, transport in ports:
        check_port(port)
        if transport not in TRANSPORTS:
            raise ValidationError(f"transport must be one of {list(TRANSPORTS)}, got {transport!r}")
        if (port, transport) in normalized:
            raise ValidationError(f"duplicate port entry: {port}/{transport}")
        normalized.append((port, transport))

    timeout_s = timeout_ms / 1000.0
    txn_id = random.getrandbits(16)
    dns_query = encode_query(ptr_question_for_ipv4("8.8.8.8"), txn_id)

    def probe(entry):
        port, transport = entry
        if transport == "tcp":
            return PortStatus(port, transport, _probe_tcp(target, port, timeout_s)), None
        if port == dns_port:
            status, rtt = _probe_udp(target, port, timeout_s, dns_query, expect_txn_id=txn_id)
            return PortStatus(port, transport, status), rtt
        status, _ = _probe_udp(target, port, timeout_s, b"")
        return PortStatus(port, transport, status), None

    dns_listed = (dns_port, "udp") in normalized
    with ThreadPoolExecutor(max_workers=max(1, min(8, len(normalized) + 1))) as pool:
        results = list(pool.map(probe, normalized))
        if not dns_listed:
            # still assess DNS even when the port list omits it
            extra_status, extra_rtt = _probe_udp(
                target, dns_port, timeout_s, dns_query, expect_txn_id=txn_id
            )

    statuses = tuple(status for status, _ in results)
    dns_rtt = None
    dns_open = False
    if dns_listed:
        for status, rtt in results:
            if (status.port, status.transport) == (dns_port, "udp"):
                dns_rtt = rtt
                dns_open = status.status == STATUS_OPEN
    else:
        dns_rtt = extra_rtt
        dns_open = extra_status == STATUS_OPEN

    return ServiceReport(
        target=target,
        dns_functional=dns_open and dns_rtt is not None,
        dns_rtt_hint_ms=dns_rtt,
        probed_ports=statuses,
    )
