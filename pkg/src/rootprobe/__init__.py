"""DNS timing side-channel toolkit for rooted/stock tendency analysis.

The probing path (encode query, time the exchange, summarize, compare
against reference profiles) lives in dnswire/probe/stats/classify.  A
simulator stands in for real handsets, servicescan pre-checks a target,
and localdetect covers the on-device indicator checks.
"""

from .classify import (
    LABEL_INCONCLUSIVE,
    LABEL_ROOTED_LEANING,
    LABEL_STOCK_LEANING,
    ClassifierThresholds,
    DeviceProfile,
    TendencyVerdict,
    builtin_profiles,
    classify,
    profile_by_label,
)
from .errors import (
    EmptyInputError,
    InfeasibleModelError,
    ProfileFormatError,
    RootProbeError,
    TransportError,
    ValidationError,
    MalformedMessageError,
    InsufficientSamplesError,
)
from .estimator import RootTendencyClassifier
from .localdetect import IndicatorCheck, RootReport, ScanConfig, run_all
from .probe import (
    Campaign,
    ProbeConfig,
    Sample,
    measure_tool_overhead,
    probe_once,
    run_campaign,
)
from .profiles_io import (
    export_campaign_csv,
    import_campaign_csv,
    load_profiles,
    save_profiles,
)
from .servicescan import PortStatus, ServiceReport, scan_services
from .simulate import (
    LatencyModel,
    SimDeviceConfig,
    SimulatedDevice,
    analytic_moments,
    fit_latency_model,
    sample_delay,
    serve,
)
from .stats import ComparisonResult, SummaryStats, mean_ratio, pool, summarize, welch_t

__version__ = "0.1.0"

__all__ = [
    "Campaign",
    "ClassifierThresholds",
    "ComparisonResult",
    "DeviceProfile",
    "EmptyInputError",
    "IndicatorCheck",
    "InfeasibleModelError",
    "InsufficientSamplesError",
    "LABEL_INCONCLUSIVE",
    "LABEL_ROOTED_LEANING",
    "LABEL_STOCK_LEANING",
    "LatencyModel",
    "PortStatus",
    "ProbeConfig",
    "ProfileFormatError",
    "RootProbeError",
    "RootReport",
    "RootTendencyClassifier",
    "Sample",
    "ScanConfig",
    "ServiceReport",
    "SimDeviceConfig",
    "SimulatedDevice",
    "SummaryStats",
    "TendencyVerdict",
    "TransportError",
    "ValidationError",
    "MalformedMessageError",
    "analytic_moments",
    "builtin_profiles",
    "classify",
    "export_campaign_csv",
    "fit_latency_model",
    "import_campaign_csv",
    "load_profiles",
    "measure_tool_overhead",
    "mean_ratio",
    "pool",
    "probe_once",
    "profile_by_label",
    "run_all",
    "run_campaign",
    "sample_delay",
    "save_profiles",
    "scan_services",
    "serve",
    "summarize",
    "welch_t",
]
