"""Host-side root-indicator scanner, parameterized by a filesystem root.

Every filesystem probe stays under fs_root so the whole scanner can run
against a fixture tree.  Permission and executability decisions are made
from mode bits against the effective uid/gid, with no special case for
uid 0: the question is what an unprivileged app in this position could
do, not what the scanning user happens to get away with.

None of these checks proves anything on its own.  Indicators found are
evidence; indicators absent are not evidence of absence.
"""

import ctypes
import os
from dataclasses import dataclass

from .errors import EmptyInputError, ValidationError

CATEGORY_PACKAGE = "package"
CATEGORY_BINARY = "binary"
CATEGORY_PERMISSION = "permission"
CATEGORY_TRACER = "tracer"
CATEGORY_PRELOAD = "preload"

CATEGORIES = (
    CATEGORY_PACKAGE,
    CATEGORY_BINARY,
    CATEGORY_PERMISSION,
    CATEGORY_TRACER,
    CATEGORY_PRELOAD,
)

RESULT_FOUND = "found"
RESULT_NOT_FOUND = "not_found"
RESULT_ERROR = "error"
RESULT_SKIPPED = "skipped"

RESULTS = (RESULT_FOUND, RESULT_NOT_FOUND, RESULT_ERROR, RESULT_SKIPPED)

# Conventional locations, not authoritative: configure to taste.
DEFAULT_SU_PATHS = (
    "system/bin/su",
    "system/xbin/su",
    "sbin/su",
    "su/bin/su",
    "data/local/bin/su",
    "data/local/xbin/su",
)

DEFAULT_KNOWN_PACKAGES = ("com.topjohnwu.magisk",)

DEFAULT_SYSTEM_DIRS = ("system", "system/bin", "system/xbin", "sbin")


def _check_relative(path: str, name: str) -> str:
    if not path:
        raise ValidationError(f"{name} must not be empty")
    if os.path.isabs(path):
        raise ValidationError(f"{name} must be relative to fs_root, got {path!r}")
    if ".." in path.split(os.sep):
        raise ValidationError(f"{name} must not traverse upward, got {path!r}")
    return path


@dataclass
class ScanConfig:
    fs_root: str = "/"
    su_paths: tuple[str, ...] = DEFAULT_SU_PATHS
    known_packages: tuple[str, ...] = DEFAULT_KNOWN_PACKAGES
    system_dirs: tuple[str, ...] = DEFAULT_SYSTEM_DIRS
    canary_path: str = "tmp/rootprobe_canary"
    preload_env_var: str = "LD_PRELOAD"
    preload_config_file: str = "etc/ld.so.preload"

    def __post_init__(self):
        if not self.fs_root:
            raise ValidationError("fs_root must not be empty")
        for seq, name in (
            (self.su_paths, "su_paths"),
            (self.known_packages, "known_packages"),
            (self.system_dirs, "system_dirs"),
        ):
            if not seq:
                raise ValidationError(f"{name} must not be empty")
        for p in self.su_paths:
            _check_relative(p, "su_paths entry")
        for d in self.system_dirs:
            _check_relative(d, "system_dirs entry")
        _check_relative(self.canary_path, "canary_path")
        _check_relative(self.preload_config_file, "preload_config_file")
        if not self.preload_env_var:
            raise ValidationError("preload_env_var must not be empty")

    def resolve(self, relative: str) -> str:
        return os.path.join(self.fs_root, relative)


@dataclass(frozen=True)
class IndicatorCheck:
    id: str
    category: str
    result: str
    detail: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValidationError(f"unknown category {self.category!r}")
        if self.result not in RESULTS:
            raise ValidationError(f"unknown result {self.result!r}")
        if self.result == RESULT_ERROR and not self.detail:
            raise ValidationError("error results must carry a detail")


@dataclass(frozen=True)
class RootReport:
    checks: tuple[IndicatorCheck, ...]
    found_count: int
    tendency: str

    def __post_init__(self):
        ids = [c.id for c in self.checks]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"check ids must be unique, got {ids}")
        actual = sum(1 for c in self.checks if c.result == RESULT_FOUND)
        if actual != self.found_count:
            raise ValidationError(f"found_count {self.found_count} != counted {actual}")


# -- mode-bit evaluation -------------------------------------------------------

_READ, _WRITE, _EXECUTE = 4, 2, 1


def _mode_allows(st: os.stat_result, bit: int) -> bool:
    """Classic owner/group/other class check; deliberately no uid-0 override."""
    euid, egid = os.geteuid(), os.getegid()
    if st.st_uid == euid:
        return bool(st.st_mode & (bit << 6))
    if st.st_gid == egid or st.st_gid in os.getgroups():
        return bool(st.st_mode & (bit << 3))
    return bool(st.st_mode & bit)


# -- individual checks ---------------------------------------------------------


def check_su_binaries(cfg: ScanConfig) -> IndicatorCheck:
    """found when any configured su candidate exists and is executable."""
    executable, present_only, skipped = [], [], []
    for rel in cfg.su_paths:
        full = cfg.resolve(rel)
        try:
            st = os.stat(full)
        except FileNotFoundError:
            continue
        except OSError as exc:
            skipped.append(f"{rel} ({exc.strerror or exc})")
            continue
        if _mode_allows(st, _EXECUTE):
            executable.append(rel)
        else:
            present_only.append(rel)
    parts = []
    if executable:
        parts.append("executable su at: " + ", ".join(executable))
    if present_only:
        parts.append("present but not executable: " + ", ".join(present_only))
    if skipped:
        parts.append("unprobeable: " + ", ".join(skipped))
    result = RESULT_FOUND if executable else RESULT_NOT_FOUND
    detail = "; ".join(parts) if parts else "no su candidates present"
    return IndicatorCheck("su-binaries", CATEGORY_BINARY, result, detail)


def _manifest_identifiers(path: str) -> list[str]:
    identifiers = []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            token = line.split()[0]
            if token.startswith("package:"):
                token = token[len("package:"):]
            identifiers.append(token)
    return identifiers


def check_known_packages(cfg: ScanConfig, package_source: str) -> IndicatorCheck:
    """found when a configured package id is installed per the source.

    The source is either a directory of per-package entries (an entry
    matches a package id exactly or as "<id>-<suffix>") or a manifest
    file of one identifier per line.  Matching is case-sensitive.
    """
    _check_relative(package_source, "package_source")
    source = cfg.resolve(package_source)
    if not os.path.exists(source):
        return IndicatorCheck(
            "known-packages",
            CATEGORY_PACKAGE,
            RESULT_SKIPPED,
            f"package source {package_source!r} not present",
        )
    try:
        if os.path.isdir(source):
            entries = os.listdir(source)
            matches = [
                pkg
                for pkg in cfg.known_packages
                if any(e == pkg or e.startswith(pkg + "-") for e in entries)
            ]
        else:
            identifiers = _manifest_identifiers(source)
            matches = [pkg for pkg in cfg.known_packages if pkg in identifiers]
    except OSError as exc:
        return IndicatorCheck(
            "known-packages",
            CATEGORY_PACKAGE,
            RESULT_ERROR,
            f"cannot read package source {package_source!r}: {exc.strerror or exc}",
        )
    if matches:
        detail = "installed rooting packages: " + ", ".join(matches)
        return IndicatorCheck("known-packages", CATEGORY_PACKAGE, RESULT_FOUND, detail)
    return IndicatorCheck(
        "known-packages",
        CATEGORY_PACKAGE,
        RESULT_NOT_FOUND,
        "no configured package identifiers installed",
    )


def check_directory_permissions(cfg: ScanConfig) -> IndicatorCheck:
    """found when a system directory is writable to us or world-writable."""
    writable, skipped, missing = [], [], []
    for rel in cfg.system_dirs:
        full = cfg.resolve(rel)
        try:
            st = os.stat(full)
        except FileNotFoundError:
            missing.append(rel)
            continue
        except OSError as exc:
            skipped.append(f"{rel} ({exc.strerror or exc})")
            continue
        if _mode_allows(st, _WRITE) or st.st_mode & 0o002:
            writable.append(f"{rel} (mode {st.st_mode & 0o7777:04o})")
    if len(skipped) + len(missing) == len(cfg.system_dirs):
        return IndicatorCheck(
            "directory-permissions",
            CATEGORY_PERMISSION,
            RESULT_SKIPPED,
            "no configured system directory could be inspected",
        )
    parts = []
    if writable:
        parts.append("writable system directories: " + ", ".join(writable))
    if skipped:
        parts.append("unprobeable: " + ", ".join(skipped))
    if missing:
        parts.append("absent: " + ", ".join(missing))
    result = RESULT_FOUND if writable else RESULT_NOT_FOUND
    detail = "; ".join(parts) if parts else "all system directories read-only"
    return IndicatorCheck("directory-permissions", CATEGORY_PERMISSION, result, detail)


def _tracer_pid() -> int | None:
    try:
        with open("/proc/self/status", encoding="ascii", errors="replace") as fh:
            for line in fh:
                if line.startswith("TracerPid:"):
                    return int(line.split()[1])
    except (OSError, ValueError, IndexError):
        return None
    return None


def _self_attach_denied() -> bool | None:
    """Fork and try PTRACE_TRACEME in the child; None when unprobeable.

    A supervisor that follows forks (strace -f and friends) attaches to
    the child before it runs, so its TRACEME fails; an untraced child
    succeeds and simply exits, dropping the trace relationship.
    """
    try:
        libc = ctypes.CDLL(None, use_errno=True)
        libc.ptrace.restype = ctypes.c_long
    except (OSError, AttributeError):
        return None
    try:
        pid = os.fork()
    except OSError:
        return None
    if pid == 0:
        rc = libc.ptrace(0, 0, 0, 0)  # 0 == PTRACE_TRACEME
        os._exit(0 if rc == 0 else 1)
    _, status = os.waitpid(pid, 0)
    if not os.WIFEXITED(status):
        return None
    return os.WEXITSTATUS(status) != 0


def check_tracer() -> IndicatorCheck:
    """found when something is tracing this process.

    Two routes, either suffices: the kernel's per-process status names a
    tracer pid, or a forked child is denied PTRACE_TRACEME because a
    fork-following tracer claimed it first.
    """
    tracer = _tracer_pid()
    denied = _self_attach_denied()
    if tracer is None and denied is None:
        return IndicatorCheck(
            "tracer", CATEGORY_TRACER, RESULT_SKIPPED, "tracing facility unavailable here"
        )
    if tracer:
        return IndicatorCheck(
            "tracer", CATEGORY_TRACER, RESULT_FOUND, f"status reports tracer pid {tracer}"
        )
    if denied:
        return IndicatorCheck(
            "tracer", CATEGORY_TRACER, RESULT_FOUND, "self-attach denied: a tracer is attached"
        )
    return IndicatorCheck(
        "tracer", CATEGORY_TRACER, RESULT_NOT_FOUND, "no tracer attached; self-attach possible"
    )


def _dynamic_read(path: bytes) -> bytes | None:
    """Read a file through the dynamically resolved C fopen/fread path."""
    try:
        libc = ctypes.CDLL(None, use_errno=True)
    except OSError:
        return None
    libc.fopen.restype = ctypes.c_void_p
    libc.fopen.argtypes = [ctypes.c_char_p, ctypes.c_char_p]
    handle = libc.fopen(path, b"rb")
    # NULL or an error-sentinel pointer both mean the dynamic route failed
    if not handle or handle == ctypes.c_void_p(-1).value:
        return None
    try:
        buf = ctypes.create_string_buffer(256)
        libc.fread.restype = ctypes.c_size_t
        libc.fread.argtypes = [ctypes.c_void_p, ctypes.c_size_t, ctypes.c_size_t, ctypes.c_void_p]
        count = libc.fread(buf, 1, 256, handle)
        return buf.raw[:count]
    finally:
        libc.fclose.argtypes = [ctypes.c_void_p]
        libc.fclose(handle)


def _direct_read(path: bytes) -> bytes | None:
    """Read a file through raw kernel calls, bypassing the dynamic linker."""
    try:
        fd = os.open(path, os.O_RDONLY)
    except OSError:
        return None
    try:
        return os.read(fd, 256)
    finally:
        os.close(fd)


def check_preload_discrepancy(cfg: ScanConfig) -> IndicatorCheck:
    """found when library interposition is evident.

    Three sub-signals, any one fires the check: (1) a canary file reads
    differently through the dynamic C library route than through raw
    kernel calls, (2) the preload environment variable is set, (3) the
    system preload configuration file exists with content.  Both read
    routes always run; agreement between them is the whole point.
    """
    signals = []
    canary = cfg.resolve(cfg.canary_path)
    payload = b"rootprobe canary\n"
    try:
        fd = os.open(canary, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        try:
            os.write(fd, payload)
        finally:
            os.close(fd)
    except OSError as exc:
        return IndicatorCheck(
            "preload-discrepancy",
            CATEGORY_PRELOAD,
            RESULT_ERROR,
            f"cannot create canary {cfg.canary_path!r}: {exc.strerror or exc}",
        )
    try:
        canary_bytes = os.fsencode(canary)
        dynamic = _dynamic_read(canary_bytes)
        direct = _direct_read(canary_bytes)
        if dynamic is None and direct is not None:
            signals.append("dynamic path failed, direct path succeeded")
        elif dynamic is not None and direct is None:
            signals.append("direct path failed, dynamic path succeeded")
        elif dynamic is None and direct is None:
            return IndicatorCheck(
                "preload-discrepancy",
                CATEGORY_PRELOAD,
                RESULT_ERROR,
                "canary created but unreadable through both routes",
            )
        elif dynamic != direct:
            signals.append("contents differ between dynamic and direct paths")
    finally:
        try:
            os.unlink(canary)
        except OSError:
            pass

    if os.environ.get(cfg.preload_env_var):
        signals.append(f"preload variable present ({cfg.preload_env_var})")
    config_file = cfg.resolve(cfg.preload_config_file)
    try:
        with open(config_file, encoding="utf-8", errors="replace") as fh:
            content = fh.read()
    except OSError:
        content = None
    if content is not None:
        if content.strip():
            signals.append(f"preload configuration file present ({cfg.preload_config_file})")
        # an empty preload file loads nothing; presence alone is not a signal

    if signals:
        return IndicatorCheck(
            "preload-discrepancy", CATEGORY_PRELOAD, RESULT_FOUND, "; ".join(signals)
        )
    return IndicatorCheck(
        "preload-discrepancy",
        CATEGORY_PRELOAD,
        RESULT_NOT_FOUND,
        "dynamic and direct routes agree; no preload configuration",
    )


def aggregate_report(checks) -> RootReport:
    checks = tuple(checks)
    if not checks:
        raise EmptyInputError("cannot aggregate zero checks")
    found = sum(1 for c in checks if c.result == RESULT_FOUND)
    if found >= 1:
        tendency = "rooted indicators present"
    else:
        tendency = "no indicators found; absence is not proof"
    return RootReport(checks=checks, found_count=found, tendency=tendency)


def run_all(cfg: ScanConfig, package_source: str | None = None) -> RootReport:
    """Run every check and aggregate.  Without a package source the
    package check is reported skipped rather than omitted, so report
    shape is stable across configurations."""
    checks = [check_su_binaries(cfg)]
    if package_source is not None:
        checks.append(check_known_packages(cfg, package_source))
    else:
        checks.append(
            IndicatorCheck(
                "known-packages",
                CATEGORY_PACKAGE,
                RESULT_SKIPPED,
                "no package source configured",
            )
        )
    checks.append(check_directory_permissions(cfg))
    checks.append(check_tracer())
    checks.append(check_preload_discrepancy(cfg))
    return aggregate_report(checks)
