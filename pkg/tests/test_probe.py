"""Tests for the probe engine, run against the in-process simulator."""

import math
import socket
import threading
import time

import pytest

from rootprobe.dnswire import decode_message, encode_ptr_response, ptr_question_for_ipv4
from rootprobe.errors import EmptyInputError, ValidationError
from rootprobe.probe import (
    OUTCOME_ANSWERED,
    OUTCOME_ID_MISMATCH,
    OUTCOME_MALFORMED,
    OUTCOME_TIMEOUT,
    Campaign,
    ProbeConfig,
    Sample,
    measure_tool_overhead,
    probe_once,
    run_campaign,
)
from rootprobe.simulate import SimDeviceConfig, fit_latency_model, serve
from rootprobe.stats import summarize

QUESTION = ptr_question_for_ipv4("8.8.8.8")


def _device(mean=1.0, stddev=0.0, drop=0.0):
    model = fit_latency_model(mean, stddev, drop_probability=drop)
    return serve(SimDeviceConfig(model=model))


class _ScriptedResponder:
    """Replies to each query with a scripted list of datagram builders.

    Each builder is called with the decoded query and must return bytes
    to send back; multiple datagrams per query are allowed.
    """

    def __init__(self, script):
        self._script = script

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
            try:
                query = decode_message(data)
            except Exception:
                continue
            for build in self._script:
                self._sock.sendto(build(query), addr)

    def __exit__(self, *exc):
        self._running = False
        self._thread.join(timeout=1.0)
        self._sock.close()


# -- config and sample invariants --------------------------------------------


def test_config_validation():
    with pytest.raises(ValidationError):
        ProbeConfig(target_host="not-an-ip")
    with pytest.raises(ValidationError):
        ProbeConfig(target_host="127.0.0.1", target_port=70000)
    with pytest.raises(ValueError):
        ProbeConfig(target_host="127.0.0.1", runs=0)
    with pytest.raises(ValueError):
        ProbeConfig(target_host="127.0.0.1", queries_per_run=0)
    with pytest.raises(ValueError):
        ProbeConfig(target_host="127.0.0.1", inter_query_gap_ms=-1.0)
    with pytest.raises(ValidationError):
        ProbeConfig(target_host="127.0.0.1", timeout_ms=0.0)
    with pytest.raises(ValidationError):
        ProbeConfig(target_host="127.0.0.1", thermal_state="tepid")
    with pytest.raises(ValueError):
        ProbeConfig(target_host="127.0.0.1", discard_first=-1)


def test_config_defaults_match_protocol():
    cfg = ProbeConfig(target_host="10.0.0.1")
    assert (cfg.runs, cfg.queries_per_run) == (3, 100)
    assert cfg.inter_query_gap_ms == 100.0
    assert cfg.timeout_ms == 2000.0
    assert cfg.question.name == "8.8.8.8.in-addr.arpa."
    assert cfg.source_port is None


def test_sample_rtt_outcome_coupling():
    Sample(0, 0, 5.0, OUTCOME_ANSWERED)
    Sample(0, 0, None, OUTCOME_TIMEOUT)
    with pytest.raises(ValueError):
        Sample(0, 0, None, OUTCOME_ANSWERED)
    with pytest.raises(ValueError):
        Sample(0, 0, 5.0, OUTCOME_TIMEOUT)
    with pytest.raises(ValueError):
        Sample(0, 0, -1.0, OUTCOME_ANSWERED)
    with pytest.raises(ValueError):
        Sample(0, 0, None, "lost")


# -- probe_once ---------------------------------------------------------------


def test_probe_once_answered():
    with _device(mean=5.0) as device:
        sample = probe_once(device.address, QUESTION, txn_id=77, timeout_ms=2000.0)
    assert sample.outcome == OUTCOME_ANSWERED
    assert 3.0 <= sample.rtt_ms <= 100.0


def test_probe_once_timeout_elapses_full_window():
    # bound but silent: nothing will ever answer
    silent = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    silent.bind(("127.0.0.1", 0))
    try:
        start = time.perf_counter()
        sample = probe_once(silent.getsockname()[:2], QUESTION, txn_id=1, timeout_ms=100.0)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
    finally:
        silent.close()
    assert sample.outcome == OUTCOME_TIMEOUT
    assert sample.rtt_ms is None
    assert elapsed_ms >= 100.0


def test_probe_once_discards_mismatched_id_then_accepts():
    def wrong(query):
        return encode_ptr_response((query.id + 1) & 0xFFFF, query.questions[0], "dns.google.")

    def right(query):
        return encode_ptr_response(query.id, query.questions[0], "dns.google.")

    with _ScriptedResponder([wrong, right]) as responder:
        sample = probe_once(responder.address, QUESTION, txn_id=300, timeout_ms=2000.0)
    assert sample.outcome == OUTCOME_ANSWERED


def test_probe_once_reports_id_mismatch_at_deadline():
    def wrong(query):
        return encode_ptr_response((query.id ^ 0x1) & 0xFFFF, query.questions[0], "dns.google.")

    with _ScriptedResponder([wrong]) as responder:
        sample = probe_once(responder.address, QUESTION, txn_id=300, timeout_ms=150.0)
    assert sample.outcome == OUTCOME_ID_MISMATCH
    assert sample.rtt_ms is None


def test_probe_once_reports_malformed_at_deadline():
    with _ScriptedResponder([lambda q: b"\xff\xfe"]) as responder:
        sample = probe_once(responder.address, QUESTION, txn_id=12, timeout_ms=150.0)
    assert sample.outcome == OUTCOME_MALFORMED


def test_probe_once_ignores_non_response_with_matching_id():
    # echo the query itself back (QR still 0): must not count as an answer
    def echo_query(query):
        from rootprobe.dnswire import encode_query

        return encode_query(query.questions[0], query.id)

    with _ScriptedResponder([echo_query]) as responder:
        sample = probe_once(responder.address, QUESTION, txn_id=55, timeout_ms=150.0)
    assert sample.outcome == OUTCOME_ID_MISMATCH


# -- campaigns ----------------------------------------------------------------


def test_run_campaign_counts_and_order():
    with _device(mean=1.0) as device:
        cfg = ProbeConfig(
            target_host=device.address[0],
            target_port=device.port,
            runs=3,
            queries_per_run=4,
            inter_query_gap_ms=0.0,
            timeout_ms=500.0,
        )
        campaign = run_campaign(cfg)
    assert campaign.complete
    assert len(campaign.samples) == 12
    assert campaign.loss_rate == 0.0
    assert [len(r) for r in campaign.rtts_by_run()] == [4, 4, 4]
    assert campaign.outcome_counts()[OUTCOME_ANSWERED] == 12
    indices = [(s.run_index, s.query_index) for s in campaign.samples]
    assert indices == [(r, q) for r in range(3) for q in range(4)]
    assert campaign.started_at > 0
    assert math.isfinite(campaign.tool_overhead_ms) and campaign.tool_overhead_ms > 0


def test_run_campaign_all_dropped_reports_loss():
    with _device(mean=1.0, drop=1.0) as device:
        cfg = ProbeConfig(
            target_host=device.address[0],
            target_port=device.port,
            runs=1,
            queries_per_run=5,
            inter_query_gap_ms=0.0,
            timeout_ms=60.0,
        )
        campaign = run_campaign(cfg)
    assert campaign.complete
    assert campaign.loss_rate == 1.0
    assert campaign.answered_rtts() == []
    with pytest.raises(EmptyInputError):
        summarize(campaign.answered_rtts())


def test_run_campaign_aborts_on_transport_error():
    # occupy the requested source port so every bind fails
    blocker = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    blocker.bind(("0.0.0.0", 0))
    port = blocker.getsockname()[1]
    try:
        with _device(mean=1.0) as device:
            cfg = ProbeConfig(
                target_host=device.address[0],
                target_port=device.port,
                runs=1,
                queries_per_run=3,
                inter_query_gap_ms=0.0,
                timeout_ms=100.0,
                source_port=port,
            )
            campaign = run_campaign(cfg)
    finally:
        blocker.close()
    assert not campaign.complete
    assert campaign.aborted_reason is not None
    assert "bind" in campaign.aborted_reason
    assert campaign.samples == []


def test_run_campaign_warmup_queries_not_recorded():
    with _device(mean=1.0) as device:
        cfg = ProbeConfig(
            target_host=device.address[0],
            target_port=device.port,
            runs=1,
            queries_per_run=3,
            inter_query_gap_ms=0.0,
            timeout_ms=500.0,
            discard_first=2,
        )
        campaign = run_campaign(cfg)
        assert device.queries_seen == 5
    assert len(campaign.samples) == 3


def test_run_campaign_progress_callback():
    seen = []
    with _device(mean=1.0) as device:
        cfg = ProbeConfig(
            target_host=device.address[0],
            target_port=device.port,
            runs=2,
            queries_per_run=2,
            inter_query_gap_ms=0.0,
            timeout_ms=500.0,
        )
        run_campaign(cfg, progress=seen.append)
    assert len(seen) == 4
    assert all(isinstance(s, Sample) for s in seen)


def test_measure_tool_overhead_small_and_positive():
    overhead = measure_tool_overhead()
    assert 0.0 < overhead < 50.0
