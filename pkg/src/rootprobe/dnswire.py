"""Minimal DNS wire codec: enough to issue PTR queries and recognize responses.

Message header layout (all multi-byte fields big-endian):

    +--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+
    |                      ID                       |
    +--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+
    |QR|   Opcode  |AA|TC|RD|RA|   Z    |   RCODE   |
    +--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+
    |                    QDCOUNT                    |
    +--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+
    |                    ANCOUNT                    |
    +--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+
    |                    NSCOUNT                    |
    +--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+
    |                    ARCOUNT                    |
    +--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+--+

Answer records are counted and skipped, never parsed for content: the
timing of the response is the signal, not its payload.  Name compression
pointers are understood on decode and never emitted on encode.
"""

import struct
from dataclasses import dataclass, field

from .errors import MalformedMessageError, ValidationError
from .validation import check_ipv4

QTYPE_PTR = 12
QCLASS_IN = 1

MAX_LABEL_LEN = 63
MAX_NAME_LEN = 255

_HEADER = struct.Struct("!HHHHHH")

_FLAG_QR = 0x8000
_FLAG_RD = 0x0100
_FLAG_RA = 0x0080


def _label_bytes(label: str) -> bytes:
    # latin-1 keeps the str <-> wire mapping byte-transparent
    try:
        raw = label.encode("latin-1")
    except UnicodeEncodeError as exc:
        raise ValidationError(f"label contains non-byte characters: {label!r}") from exc
    return raw


@dataclass(frozen=True)
class DnsQuestion:
    """One question entry: a domain name plus record type and class codes."""

    qname: tuple[str, ...]
    qtype: int = QTYPE_PTR
    qclass: int = QCLASS_IN

    def __post_init__(self):
        object.__setattr__(self, "qname", tuple(self.qname))
        if not self.qname:
            raise ValidationError("qname must have at least one label")
        total = 1  # terminating zero byte
        for label in self.qname:
            raw = _label_bytes(label)
            if not raw:
                raise ValidationError("empty label in qname")
            if b"." in raw:
                raise ValidationError(f"label may not contain a dot: {label!r}")
            if len(raw) > MAX_LABEL_LEN:
                raise ValidationError(
                    f"label exceeds {MAX_LABEL_LEN} bytes: {label!r}"
                )
            total += 1 + len(raw)
        if total > MAX_NAME_LEN:
            raise ValidationError(f"encoded name is {total} bytes, limit {MAX_NAME_LEN}")
        for code, name in ((self.qtype, "qtype"), (self.qclass, "qclass")):
            if not 0 <= code <= 0xFFFF:
                raise ValidationError(f"{name} must fit in 16 bits, got {code}")

    @property
    def name(self) -> str:
        """Dotted presentation form with trailing dot."""
        return ".".join(self.qname) + "."


@dataclass(frozen=True)
class DnsMessage:
    """Decoded header plus question section; answers are counted, not parsed."""

    id: int
    is_response: bool
    recursion_desired: bool
    response_code: int
    questions: tuple[DnsQuestion, ...] = field(default_factory=tuple)
    answer_count: int = 0


def name_to_labels(name: str) -> tuple[str, ...]:
    """Split a dotted domain name (trailing dot optional) into labels."""
    return tuple(name.rstrip(".").split("."))


def ptr_name_for_ipv4(addr: str) -> str:
    """Reverse-mapping name for an IPv4 address, e.g. 8.8.8.8 -> 8.8.8.8.in-addr.arpa."""
    canonical = check_ipv4(addr)
    octets = canonical.split(".")
    return ".".join(reversed(octets)) + ".in-addr.arpa."


def ptr_question_for_ipv4(addr: str) -> DnsQuestion:
    """The PTR question probing campaigns send by default."""
    return DnsQuestion(qname=name_to_labels(ptr_name_for_ipv4(addr)))


def encode_name(labels: tuple[str, ...]) -> bytes:
    out = bytearray()
    for label in labels:
        raw = _label_bytes(label)
        out.append(len(raw))
        out += raw
    out.append(0)
    return bytes(out)


def encode_query(question: DnsQuestion, txn_id: int, recursion_desired: bool = True) -> bytes:
    """Encode a single-question query; qdcount=1, all other counts zero."""
    if not 0 <= txn_id <= 0xFFFF:
        raise ValidationError(f"transaction id must fit in 16 bits, got {txn_id}")
    flags = _FLAG_RD if recursion_desired else 0
    header = _HEADER.pack(txn_id, flags, 1, 0, 0, 0)
    body = encode_name(question.qname) + struct.pack("!HH", question.qtype, question.qclass)
    return header + body


def encode_ptr_response(
    txn_id: int,
    question: DnsQuestion,
    answer_name: str,
    recursion_desired: bool = True,
    ttl: int = 60,
) -> bytes:
    """Encode a response echoing the question with one PTR answer record.

    Names are written uncompressed.  Used by the device simulator; real
    responders compress, which only the decoder needs to understand.
    """
    if not 0 <= txn_id <= 0xFFFF:
        raise ValidationError(f"transaction id must fit in 16 bits, got {txn_id}")
    flags = _FLAG_QR | _FLAG_RA | (_FLAG_RD if recursion_desired else 0)
    header = _HEADER.pack(txn_id, flags, 1, 1, 0, 0)
    qsection = encode_name(question.qname) + struct.pack("!HH", question.qtype, question.qclass)
    rdata = encode_name(name_to_labels(answer_name))
    answer = (
        encode_name(question.qname)
        + struct.pack("!HHIH", question.qtype, question.qclass, ttl, len(rdata))
        + rdata
    )
    return header + qsection + answer


def _parse_name(data: bytes, offset: int) -> tuple[tuple[str, ...], int]:
    """Parse a possibly-compressed name; returns (labels, offset after name).

    Pointer targets must point strictly backwards, which both matches real
    encoders and rules out pointer loops.
    """
    labels: list[str] = []
    total = 1
    pos = offset
    end = -1  # offset just past the name at the outermost level
    while True:
        if pos >= len(data):
            raise MalformedMessageError("name runs past end of message")
        length = data[pos]
        if length & 0xC0 == 0xC0:
            if pos + 1 >= len(data):
                raise MalformedMessageError("truncated compression pointer")
            target = ((length & 0x3F) << 8) | data[pos + 1]
            if target >= pos:
                raise MalformedMessageError("compression pointer does not point backwards")
            if end < 0:
                end = pos + 2
            pos = target
            continue
        if length & 0xC0:
            raise MalformedMessageError(f"unsupported label type 0x{length:02x}")
        if length == 0:
            if end < 0:
                end = pos + 1
            return tuple(labels), end
        if pos + 1 + length > len(data):
            raise MalformedMessageError("label runs past end of message")
        total += 1 + length
        if total > MAX_NAME_LEN:
            raise MalformedMessageError("name exceeds 255 bytes")
        labels.append(data[pos + 1 : pos + 1 + length].decode("latin-1"))
        pos += 1 + length


def decode_message(data: bytes) -> DnsMessage:
    """Decode header and question section; skip over any answer records.

    Raises MalformedMessageError on anything that cannot be parsed; never
    raises anything else for arbitrary input bytes.
    """
    if len(data) < _HEADER.size:
        raise MalformedMessageError(f"message too short for header: {len(data)} bytes")
    txn_id, flags, qdcount, ancount, _nscount, _arcount = _HEADER.unpack_from(data)

    offset = _HEADER.size
    questions = []
    for _ in range(qdcount):
        labels, offset = _parse_name(data, offset)
        if offset + 4 > len(data):
            raise MalformedMessageError("truncated question entry")
        qtype, qclass = struct.unpack_from("!HH", data, offset)
        offset += 4
        try:
            questions.append(DnsQuestion(qname=labels, qtype=qtype, qclass=qclass))
        except ValidationError as exc:
            raise MalformedMessageError(f"invalid question name: {exc}") from exc

    for _ in range(ancount):
        _, offset = _parse_name(data, offset)
        if offset + 10 > len(data):
            raise MalformedMessageError("truncated answer record")
        (rdlength,) = struct.unpack_from("!H", data, offset + 8)
        offset += 10 + rdlength
        if offset > len(data):
            raise MalformedMessageError("answer rdata runs past end of message")

    return DnsMessage(
        id=txn_id,
        is_response=bool(flags & _FLAG_QR),
        recursion_desired=bool(flags & _FLAG_RD),
        response_code=flags & 0x000F,
        questions=tuple(questions),
        answer_count=ancount,
    )
