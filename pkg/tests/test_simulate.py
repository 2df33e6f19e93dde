"""Tests for the latency model and the simulated device."""

import math
import random
import socket
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rootprobe.dnswire import decode_message, encode_ptr_response, encode_query, ptr_question_for_ipv4
from rootprobe.errors import InfeasibleModelError, ValidationError
from rootprobe.simulate import (
    FAMILY_FIXED,
    FAMILY_LOGNORMAL,
    LatencyModel,
    SimDeviceConfig,
    SimulatedDevice,
    analytic_moments,
    fit_latency_model,
    sample_delay,
    serve,
)

# (mean, stddev) pairs the simulator must reproduce, ms.
PROFILE_MOMENTS = [
    (258.01, 131.28),
    (404.02, 520.37),
    (318.38, 32.17),
    (16.13, 43.61),
    (13.40, 38.99),
    (14.47, 45.21),
    (5.90, 1.64),
    (6.15, 2.11),
    (5.58, 0.86),
]


# -- model fitting -----------------------------------------------------------


@pytest.mark.parametrize("mean,stddev", PROFILE_MOMENTS)
def test_fit_reproduces_moments_exactly(mean, stddev):
    model = fit_latency_model(mean, stddev)
    got_mean, got_sd = analytic_moments(model)
    assert math.isclose(got_mean, mean, rel_tol=1e-9)
    assert math.isclose(got_sd, stddev, rel_tol=1e-9)


def test_fit_zero_stddev_degenerates_to_fixed():
    model = fit_latency_model(10.0, 0.0)
    assert model.family == FAMILY_FIXED
    assert analytic_moments(model) == (10.0, 0.0)
    rng = random.Random(1)
    assert all(sample_delay(model, rng) == 10.0 for _ in range(20))


def test_fit_rejects_mean_at_or_below_floor():
    with pytest.raises(InfeasibleModelError):
        fit_latency_model(0.2, 1.0, floor=0.2)
    with pytest.raises(InfeasibleModelError):
        fit_latency_model(0.1, 1.0, floor=0.2)
    with pytest.raises(InfeasibleModelError):
        fit_latency_model(0.0, 0.0)


def test_model_validation():
    with pytest.raises(ValidationError):
        LatencyModel(family="weibull", target_mean=5.0, target_stddev=1.0)
    with pytest.raises(ValidationError):
        fit_latency_model(5.0, -1.0)
    with pytest.raises(ValidationError):
        fit_latency_model(5.0, 1.0, drop_probability=1.5)


def test_sample_delay_deterministic_per_seed():
    model = fit_latency_model(5.90, 1.64)
    rng1, rng2 = random.Random(42), random.Random(42)
    seq1 = [sample_delay(model, rng1) for _ in range(50)]
    seq2 = [sample_delay(model, rng2) for _ in range(50)]
    assert seq1 == seq2


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_draws_never_below_floor(seed):
    model = fit_latency_model(16.13, 43.61, floor=0.2)
    rng = random.Random(seed)
    assert sample_delay(model, rng) >= 0.2


def test_empirical_mean_matches_target():
    # 10k draws; 3 standard errors of the mean is the usual acceptance band
    model = fit_latency_model(5.90, 1.64)
    rng = random.Random(2024)
    n = 10_000
    draws = [sample_delay(model, rng) for _ in range(n)]
    tol = 3 * 1.64 / math.sqrt(n)
    assert abs(sum(draws) / n - 5.90) < tol


# -- simulated device --------------------------------------------------------


def _client():
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.settimeout(2.0)
    return sock


def _query_bytes(txn_id):
    return encode_query(ptr_question_for_ipv4("192.168.1.1"), txn_id)


def test_device_answers_with_matching_id_and_question():
    model = fit_latency_model(1.0, 0.0)
    with serve(SimDeviceConfig(model=model)) as device:
        with _client() as sock:
            sock.sendto(_query_bytes(0xBEEF), device.address)
            data, _ = sock.recvfrom(2048)
    msg = decode_message(data)
    assert msg.id == 0xBEEF
    assert msg.is_response
    assert msg.answer_count == 1
    assert msg.questions[0].name == "1.1.168.192.in-addr.arpa."
    assert device.queries_seen == 1
    assert device.responses_sent == 1


def test_device_applies_configured_delay():
    model = fit_latency_model(40.0, 0.0)
    with serve(SimDeviceConfig(model=model)) as device:
        with _client() as sock:
            start = time.perf_counter()
            sock.sendto(_query_bytes(1), device.address)
            sock.recvfrom(2048)
            elapsed_ms = (time.perf_counter() - start) * 1000.0
    # scheduler may wake a fraction of a ms early by design (bias correction)
    assert 38.0 <= elapsed_ms <= 90.0


def test_device_overlapping_delays_do_not_serialize():
    model = fit_latency_model(60.0, 0.0)
    with serve(SimDeviceConfig(model=model)) as device:
        with _client() as sock:
            start = time.perf_counter()
            for txn in (1, 2, 3):
                sock.sendto(_query_bytes(txn), device.address)
            ids = set()
            for _ in range(3):
                data, _ = sock.recvfrom(2048)
                ids.add(decode_message(data).id)
            elapsed_ms = (time.perf_counter() - start) * 1000.0
    assert ids == {1, 2, 3}
    # three 60 ms delays overlapping, not queued back to back (>= 180 ms)
    assert elapsed_ms < 150.0


def test_device_drop_probability_one_sends_nothing():
    model = fit_latency_model(1.0, 0.0, drop_probability=1.0)
    with serve(SimDeviceConfig(model=model)) as device:
        with _client() as sock:
            sock.settimeout(0.25)
            sock.sendto(_query_bytes(7), device.address)
            with pytest.raises(socket.timeout):
                sock.recvfrom(2048)
        assert device.queries_seen == 1
        assert device.responses_sent == 0


def test_device_ignores_garbage_and_responses_but_stays_up():
    model = fit_latency_model(1.0, 0.0)
    with serve(SimDeviceConfig(model=model)) as device:
        with _client() as sock:
            sock.sendto(b"\x00", device.address)
            sock.sendto(b"not dns at all", device.address)
            reflected = encode_ptr_response(5, ptr_question_for_ipv4("8.8.8.8"), "dns.google.")
            sock.sendto(reflected, device.address)
            sock.sendto(_query_bytes(9), device.address)
            data, _ = sock.recvfrom(2048)
    assert decode_message(data).id == 9
    assert device.responses_sent == 1


def test_device_port_is_ephemeral_and_queryable():
    model = fit_latency_model(1.0, 0.0)
    device = SimulatedDevice(SimDeviceConfig(model=model))
    with pytest.raises(RuntimeError):
        device.address
    device.start()
    try:
        assert device.port > 0
        assert device.address[0] == "127.0.0.1"
    finally:
        device.stop()
