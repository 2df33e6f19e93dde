"""Persistence for device profiles and campaign exports.

Profile files are versioned JSON; the schema is the DeviceProfile shape
verbatim, with order statistics serialized as null when the underlying
samples were never recorded.  Campaign exports are plain CSV so the raw
samples can be pulled straight into a spreadsheet or plotting tool.
"""

import csv
import io
import json
import os

from .classify import DeviceProfile
from .errors import ProfileFormatError
from .probe import OUTCOME_ANSWERED, Campaign, Sample
from .stats import SummaryStats

FORMAT_VERSION = 1

CSV_HEADER = ("run", "index", "rtt_ms", "outcome")

_RUN_FIELDS = ("n", "mean", "stddev", "min", "max", "median", "p95")


def _profile_to_dict(profile: DeviceProfile) -> dict:
    return {
        "device_label": profile.device_label,
        "configuration": profile.configuration,
        "thermal_state": profile.thermal_state,
        "runs": [{f: getattr(run, f) for f in _RUN_FIELDS} for run in profile.runs],
    }


def save_profiles(path, profiles) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "profiles": [_profile_to_dict(p) for p in profiles],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _require(mapping, key, context):
    if not isinstance(mapping, dict):
        raise ProfileFormatError(f"{context} must be an object, got {type(mapping).__name__}")
    if key not in mapping:
        raise ProfileFormatError(f"{context} is missing field {key!r}")
    return mapping[key]


def load_profiles(path) -> list[DeviceProfile]:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProfileFormatError(
                f"{os.fspath(path)}: not valid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    version = _require(payload, "format_version", "profile file")
    if version != FORMAT_VERSION:
        raise ProfileFormatError(
            f"unsupported format_version {version!r} (this reader handles {FORMAT_VERSION})"
        )
    raw_profiles = _require(payload, "profiles", "profile file")
    if not isinstance(raw_profiles, list):
        raise ProfileFormatError("field 'profiles' must be a list")
    profiles = []
    for i, raw in enumerate(raw_profiles):
        context = f"profiles[{i}]"
        raw_runs = _require(raw, "runs", context)
        if not isinstance(raw_runs, list):
            raise ProfileFormatError(f"{context}.runs must be a list")
        runs = []
        for j, raw_run in enumerate(raw_runs):
            run_context = f"{context}.runs[{j}]"
            kwargs = {f: _require(raw_run, f, run_context) for f in _RUN_FIELDS}
            try:
                runs.append(SummaryStats(**kwargs))
            except (ValueError, TypeError) as exc:
                raise ProfileFormatError(f"{run_context}: {exc}") from exc
        try:
            profiles.append(
                DeviceProfile(
                    device_label=_require(raw, "device_label", context),
                    configuration=_require(raw, "configuration", context),
                    thermal_state=_require(raw, "thermal_state", context),
                    runs=tuple(runs),
                )
            )
        except ValueError as exc:
            raise ProfileFormatError(f"{context}: {exc}") from exc
    return profiles


def export_campaign_csv(campaign: Campaign) -> bytes:
    """Render a campaign as CSV bytes: header, then one row per sample.

    rtt_ms is blank for non-answered samples and carries exactly three
    decimals otherwise; rows keep the campaign's sample order.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in campaign.samples:
        rtt = f"{s.rtt_ms:.3f}" if s.rtt_ms is not None else ""
        writer.writerow((s.run_index, s.query_index, rtt, s.outcome))
    return out.getvalue().encode("utf-8")


def import_campaign_csv(data: bytes) -> list[Sample]:
    """Parse CSV produced by export_campaign_csv back into samples."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProfileFormatError(f"campaign CSV is not UTF-8: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ProfileFormatError(f"campaign CSV must start with header {','.join(CSV_HEADER)}")
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ProfileFormatError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        run_s, index_s, rtt_s, outcome = row
        try:
            sample = Sample(
                run_index=int(run_s),
                query_index=int(index_s),
                rtt_ms=float(rtt_s) if rtt_s else None,
                outcome=outcome,
            )
        except ValueError as exc:
            raise ProfileFormatError(f"line {lineno}: {exc}") from exc
        samples.append(sample)
    return samples


def answered_rtts(samples) -> list[float]:
    return [s.rtt_ms for s in samples if s.outcome == OUTCOME_ANSWERED]
