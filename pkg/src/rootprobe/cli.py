"""Command-line surface for the toolkit.

Data goes to stdout, diagnostics to stderr.  Exit codes: 0 success,
1 operational error, 2 usage error, 3 verdict is rooted-leaning (only
the classify subcommand emits 3, so shell pipelines can gate on it).

ROOTPROBE_PROFILES overrides the default profile source for subcommands
that take --profiles.
"""

import argparse
import dataclasses
import json
import os
import sys
import time

from . import localdetect
from .classify import (
    LABEL_ROOTED_LEANING,
    ClassifierThresholds,
    builtin_profiles,
    classify,
    profile_by_label,
)
from .errors import EmptyInputError, RootProbeError, ValidationError
from .probe import ProbeConfig, run_campaign
from .profiles_io import (
    answered_rtts,
    export_campaign_csv,
    import_campaign_csv,
    load_profiles,
    save_profiles,
)
from .servicescan import scan_services
from .simulate import SimDeviceConfig, fit_latency_model, serve
from .stats import summarize
from .validation import THERMAL_STATES

PROFILE_ENV_VAR = "ROOTPROBE_PROFILES"

EXIT_OK = 0
EXIT_OPERATIONAL = 1
EXIT_USAGE = 2
EXIT_ROOTED_LEANING = 3


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _non_negative_float(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _probability(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _emit(args, payload: dict, plain: str) -> None:
    if args.format == "structured":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(plain)


def _stats_line(stats) -> str:
    parts = [f"n={stats.n}", f"mean={stats.mean:.3f} ms", f"stddev={stats.stddev:.3f} ms"]
    if stats.median is not None:
        parts.append(f"median={stats.median:.3f}")
    if stats.p95 is not None:
        parts.append(f"p95={stats.p95:.3f}")
    if stats.min is not None and stats.max is not None:
        parts.append(f"range=[{stats.min:.3f}, {stats.max:.3f}]")
    return " ".join(parts)


def _load_reference_profiles(source: str):
    if source == "builtin":
        return builtin_profiles()
    return load_profiles(source)


# -- subcommand handlers --------------------------------------------------------


def _cmd_scan(args) -> int:
    ports = []
    for entry in args.ports.split(","):
        entry = entry.strip()
        if not entry:
            continue
        try:
            port_text, transport = entry.split("/", 1)
            ports.append((int(port_text), transport))
        except ValueError:
            raise ValidationError(f"ports entries look like 53/udp, got {entry!r}")
    report = scan_services(args.target, ports=ports, timeout_ms=args.timeout, dns_port=args.dns_port)
    lines = [f"target {report.target}"]
    if report.dns_functional:
        lines.append(f"dns functional: yes (rtt {report.dns_rtt_hint_ms:.3f} ms)")
    else:
        lines.append("dns functional: no")
    for p in report.probed_ports:
        lines.append(f"  {p.port}/{p.transport}: {p.status}")
    _emit(args, dataclasses.asdict(report), "\n".join(lines))
    return EXIT_OK


def _campaign_config(args) -> ProbeConfig:
    return ProbeConfig(
        target_host=args.target,
        target_port=args.port,
        runs=args.runs,
        queries_per_run=args.queries,
        inter_query_gap_ms=args.gap,
        timeout_ms=args.timeout,
        thermal_state=args.thermal,
    )


def _cmd_probe(args) -> int:
    campaign = run_campaign(_campaign_config(args))
    if args.out is not None:
        with open(args.out, "wb") as fh:
            fh.write(export_campaign_csv(campaign))
        print(f"wrote {len(campaign.samples)} samples to {args.out}", file=sys.stderr)
    if campaign.aborted_reason is not None:
        print(f"campaign aborted: {campaign.aborted_reason}", file=sys.stderr)

    run_summaries = []
    lines = [f"target {campaign.config.target_host}:{campaign.config.target_port} "
             f"(thermal {campaign.config.thermal_state})"]
    for idx, rtts in enumerate(campaign.rtts_by_run()):
        if rtts:
            stats = summarize(rtts)
            run_summaries.append(dataclasses.asdict(stats))
            lines.append(f"run {idx}: {_stats_line(stats)}")
        else:
            run_summaries.append(None)
            lines.append(f"run {idx}: no answered samples")
    pooled_rtts = campaign.answered_rtts()
    pooled = summarize(pooled_rtts) if pooled_rtts else None
    if pooled is not None:
        lines.append(f"pooled: {_stats_line(pooled)}")
    counts = campaign.outcome_counts()
    lost = len(campaign.samples) - counts["answered"]
    lines.append(f"loss rate: {campaign.loss_rate * 100.0:.1f}% ({lost}/{len(campaign.samples)} unanswered)")
    lines.append(f"tool overhead: ~{campaign.tool_overhead_ms:.3f} ms per query (reported, never subtracted)")
    payload = {
        "target": campaign.config.target_host,
        "port": campaign.config.target_port,
        "thermal": campaign.config.thermal_state,
        "runs": run_summaries,
        "pooled": dataclasses.asdict(pooled) if pooled is not None else None,
        "outcome_counts": counts,
        "loss_rate": campaign.loss_rate,
        "tool_overhead_ms": campaign.tool_overhead_ms,
        "aborted_reason": campaign.aborted_reason,
    }
    _emit(args, payload, "\n".join(lines))
    if pooled is None:
        print("no answered samples to summarize", file=sys.stderr)
        return EXIT_OPERATIONAL
    if campaign.aborted_reason is not None:
        return EXIT_OPERATIONAL
    return EXIT_OK


def _cmd_classify(args) -> int:
    if (args.input is None) == (args.target is None):
        raise ValidationError("classify needs exactly one of --input or --target")
    if args.input is not None:
        with open(args.input, "rb") as fh:
            samples = import_campaign_csv(fh.read())
        rtts = answered_rtts(samples)
        if not rtts:
            raise EmptyInputError(f"{args.input} contains no answered samples")
        observed = summarize(rtts)
        observed_thermal = args.thermal
    else:
        campaign = run_campaign(_campaign_config(args))
        rtts = campaign.answered_rtts()
        if not rtts:
            raise EmptyInputError("campaign produced no answered samples")
        observed = summarize(rtts)
        observed_thermal = campaign.config.thermal_state

    profiles = _load_reference_profiles(args.profiles)
    rooted_ref = profile_by_label(profiles, args.rooted)
    stock_ref = profile_by_label(profiles, args.stock)
    thresholds = ClassifierThresholds(
        margin=args.margin, separability_ratio=args.separability
    )
    verdict = classify(
        observed, rooted_ref, stock_ref, thresholds, observed_thermal=observed_thermal
    )

    lines = [
        f"observed: {_stats_line(verdict.observed)}",
        f"score: {verdict.score:.3f} (1.0 = rooted-leaning)",
        f"label: {verdict.label}",
        f"z to rooted ({args.rooted}): {verdict.z_to_rooted:.3f}",
        f"z to stock ({args.stock}): {verdict.z_to_stock:.3f}",
    ]
    for role, comparison in verdict.comparisons.items():
        if comparison is None:
            lines.append(f"{role} comparison: unavailable")
        else:
            lines.append(
                f"{role} comparison: t={comparison.t_statistic:.3f} "
                f"df={comparison.degrees_of_freedom:.1f} mean ratio x{comparison.mean_ratio:.3f}"
            )
    for warning in verdict.warnings:
        lines.append(f"warning: {warning}")
    payload = {
        "observed": dataclasses.asdict(verdict.observed),
        "score": verdict.score,
        "label": verdict.label,
        "z_to_rooted": verdict.z_to_rooted,
        "z_to_stock": verdict.z_to_stock,
        "comparisons": {
            role: dataclasses.asdict(c) if c is not None else None
            for role, c in verdict.comparisons.items()
        },
        "warnings": list(verdict.warnings),
        "references": {"rooted": args.rooted, "stock": args.stock},
    }
    _emit(args, payload, "\n".join(lines))
    if verdict.label == LABEL_ROOTED_LEANING:
        return EXIT_ROOTED_LEANING
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.profile is not None:
        profiles = _load_reference_profiles(args.profiles)
        pooled = profile_by_label(profiles, args.profile).pooled()
        mean, stddev = pooled.mean, pooled.stddev
    else:
        if args.mean is None:
            raise ValidationError("simulate needs --profile or --mean/--stddev")
        mean, stddev = args.mean, args.stddev
    model = fit_latency_model(
        mean, stddev, floor=args.floor, drop_probability=args.drop, seed=args.seed
    )
    device = serve(SimDeviceConfig(model=model, listen_host=args.host, listen_port=args.port))
    try:
        host, port = device.address
        payload = {
            "listening": {"host": host, "port": port},
            "model": dataclasses.asdict(model),
        }
        _emit(
            args,
            payload,
            f"listening on {host}:{port} "
            f"(model {model.family} mean={model.target_mean:.3f} "
            f"stddev={model.target_stddev:.3f} drop={model.drop_probability} seed={model.seed})",
        )
        sys.stdout.flush()
        try:
            if args.duration is not None:
                time.sleep(args.duration)
            else:
                while True:
                    time.sleep(3600)
        except KeyboardInterrupt:
            print("interrupted; shutting down", file=sys.stderr)
    finally:
        device.stop()
    return EXIT_OK


def _cmd_local_check(args) -> int:
    overrides = {}
    package_source = args.package_source
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{args.config}: not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError(f"{args.config}: config must be a JSON object")
        package_source = loaded.pop("package_source", package_source)
        allowed = set(localdetect.ScanConfig.__dataclass_fields__)
        unknown = set(loaded) - allowed
        if unknown:
            raise ValidationError(f"{args.config}: unknown config keys {sorted(unknown)}")
        overrides.update({k: tuple(v) if isinstance(v, list) else v for k, v in loaded.items()})
    if args.fs_root is not None:
        overrides["fs_root"] = args.fs_root
    cfg = localdetect.ScanConfig(**overrides)
    report = localdetect.run_all(cfg, package_source=package_source)
    lines = [f"fs root: {cfg.fs_root}"]
    for check in report.checks:
        lines.append(f"{check.id} [{check.category}]: {check.result} - {check.detail}")
    lines.append(f"found indicators: {report.found_count}/{len(report.checks)}")
    lines.append(f"tendency: {report.tendency}")
    _emit(args, dataclasses.asdict(report), "\n".join(lines))
    return EXIT_OK


def _cmd_profiles(args) -> int:
    profiles = _load_reference_profiles(args.profiles)
    if args.action == "list":
        lines = [
            f"{p.device_label} ({p.configuration}, {p.thermal_state}, {len(p.runs)} runs)"
            for p in profiles
        ]
        payload = {
            "profiles": [
                {
                    "device_label": p.device_label,
                    "configuration": p.configuration,
                    "thermal_state": p.thermal_state,
                    "runs": len(p.runs),
                }
                for p in profiles
            ]
        }
        _emit(args, payload, "\n".join(lines))
        return EXIT_OK
    if args.action == "show":
        if args.label is None:
            raise ValidationError("profiles show needs a LABEL argument")
        profile = profile_by_label(profiles, args.label)
        lines = [f"{profile.device_label} ({profile.configuration}, {profile.thermal_state})"]
        for idx, run in enumerate(profile.runs):
            lines.append(f"run {idx}: {_stats_line(run)}")
        lines.append(f"pooled: {_stats_line(profile.pooled())}")
        payload = dataclasses.asdict(profile)
        _emit(args, payload, "\n".join(lines))
        return EXIT_OK
    # action == "export"
    if args.label is None:
        raise ValidationError("profiles export needs a destination FILE argument")
    save_profiles(args.label, profiles)
    _emit(
        args,
        {"exported": args.label, "count": len(profiles)},
        f"exported {len(profiles)} profiles to {args.label}",
    )
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format",
        choices=("plain", "structured"),
        default="plain",
        help="output style; structured prints JSON",
    )
    profile_source = argparse.ArgumentParser(add_help=False)
    profile_source.add_argument(
        "--profiles",
        default=os.environ.get(PROFILE_ENV_VAR, "builtin"),
        help=f"profile file path or 'builtin' (env {PROFILE_ENV_VAR} overrides the default)",
    )
    campaign = argparse.ArgumentParser(add_help=False)
    campaign.add_argument("--port", type=int, default=53, help="target UDP port")
    campaign.add_argument("--runs", type=_positive_int, default=3)
    campaign.add_argument("--queries", type=_positive_int, default=100, help="queries per run")
    campaign.add_argument("--gap", type=_non_negative_float, default=100.0, help="inter-query gap, ms")
    campaign.add_argument("--timeout", type=_positive_float, default=2000.0, help="per-query timeout, ms")
    campaign.add_argument("--thermal", choices=THERMAL_STATES, default="unknown")

    parser = argparse.ArgumentParser(
        prog="rootprobe",
        description="DNS timing side-channel toolkit for rooted/stock tendency analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", parents=[common], help="pre-check services on a target")
    p_scan.add_argument("target")
    p_scan.add_argument("--ports", default="53/udp,67/udp,80/tcp,443/tcp")
    p_scan.add_argument("--timeout", type=_positive_float, default=1000.0, help="per-port timeout, ms")
    p_scan.add_argument("--dns-port", type=int, default=53, help="UDP port for the functional DNS check")
    p_scan.set_defaults(handler=_cmd_scan)

    p_probe = sub.add_parser("probe", parents=[common, campaign], help="run a timing campaign")
    p_probe.add_argument("target")
    p_probe.add_argument("--out", default=None, help="write raw samples to FILE.csv")
    p_probe.set_defaults(handler=_cmd_probe)

    p_classify = sub.add_parser(
        "classify", parents=[common, campaign, profile_source], help="score a campaign"
    )
    p_classify.add_argument("--input", default=None, help="campaign CSV to classify")
    p_classify.add_argument("--target", default=None, help="probe this address instead of reading a file")
    p_classify.add_argument("--rooted", default="S5 rooted", help="rooted reference label")
    p_classify.add_argument("--stock", default="S5 stock", help="stock reference label")
    p_classify.add_argument("--margin", type=float, default=0.15)
    p_classify.add_argument("--separability", type=float, default=1.5)
    p_classify.set_defaults(handler=_cmd_classify)

    p_sim = sub.add_parser(
        "simulate", parents=[common, profile_source], help="serve a simulated device"
    )
    p_sim.add_argument("--profile", default=None, help="simulate this profile's pooled moments")
    p_sim.add_argument("--mean", type=_positive_float, default=None, help="target mean delay, ms")
    p_sim.add_argument("--stddev", type=_non_negative_float, default=0.0, help="target stddev, ms")
    p_sim.add_argument("--floor", type=_non_negative_float, default=0.2, help="minimum delay, ms")
    p_sim.add_argument("--drop", type=_probability, default=0.0, help="response drop probability")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--host", default="127.0.0.1")
    p_sim.add_argument("--port", type=int, default=0, help="listen port; 0 picks one")
    p_sim.add_argument("--duration", type=_positive_float, default=None, help="stop after SECONDS")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_local = sub.add_parser("local-check", parents=[common], help="scan this host for indicators")
    p_local.add_argument("--fs-root", default=None)
    p_local.add_argument("--config", default=None, help="JSON file of ScanConfig overrides")
    p_local.add_argument("--package-source", default=None, help="package dir or manifest, relative to fs root")
    p_local.set_defaults(handler=_cmd_local_check)

    p_profiles = sub.add_parser(
        "profiles", parents=[common, profile_source], help="inspect or export reference profiles"
    )
    p_profiles.add_argument("action", choices=("list", "show", "export"))
    p_profiles.add_argument("label", nargs="?", default=None, help="profile label or export file")
    p_profiles.set_defaults(handler=_cmd_profiles)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RootProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL


if __name__ == "__main__":
    sys.exit(main())
