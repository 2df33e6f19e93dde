"""Shared generators and frozen reference bytes for wire-format tests."""

import random
import string

from rootprobe.dnswire import DnsQuestion

# Hand-assembled reference messages, written out field by field from the
# standard wire layout before the codec existed.  A PTR query for
# 8.8.8.8.in-addr.arpa. with id=0 and RD set:
REFERENCE_QUERY = bytes.fromhex(
    "0000"  # id = 0
    "0100"  # flags: RD only
    "0001" "0000" "0000" "0000"  # qdcount=1, an/ns/ar = 0
    "0138" "0138" "0138" "0138"  # 1 '8' x4
    "07" + b"in-addr".hex() + "04" + b"arpa".hex() + "00"
    "000c"  # qtype = PTR
    "0001"  # qclass = IN
)

# The matching response a forwarder would send: QR|RD|RA, one answer whose
# name is a compression pointer back to the question (offset 12), PTR data
# "dns.google.", TTL 21600.
REFERENCE_RESPONSE = bytes.fromhex(
    "1234"  # id
    "8180"  # QR, RD, RA, rcode 0
    "0001" "0001" "0000" "0000"
    "0138" "0138" "0138" "0138"
    "07" + b"in-addr".hex() + "04" + b"arpa".hex() + "00"
    "000c" "0001"
    "c00c"  # answer name: pointer to offset 12
    "000c" "0001"  # PTR, IN
    "00005460"  # ttl
    "000c"  # rdlength = 12
    "03" + b"dns".hex() + "06" + b"google".hex() + "00"
)

_LABEL_CHARS = string.ascii_lowercase + string.digits + "-_"


def random_label(rng: random.Random, max_len: int = 20) -> str:
    n = rng.randint(1, max_len)
    return "".join(rng.choice(_LABEL_CHARS) for _ in range(n))


def random_question(rng: random.Random) -> DnsQuestion:
    """A random valid question, biased toward short PTR-like names."""
    n_labels = rng.randint(1, 6)
    labels = tuple(random_label(rng) for _ in range(n_labels))
    qtype = rng.choice([1, 12, 28, rng.randint(0, 0xFFFF)])
    qclass = rng.choice([1, rng.randint(0, 0xFFFF)])
    return DnsQuestion(qname=labels, qtype=qtype, qclass=qclass)
