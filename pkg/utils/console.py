"""
Console status output
Human-readable progress lines go to stderr so stdout stays machine-readable
"""

import sys
from datetime import datetime

_quiet = False


def set_quiet(quiet: bool) -> None:
    """Suppress progress and success lines (warnings and errors still print)"""
    global _quiet
    _quiet = quiet


def _emit(message: str) -> None:
    print(message, file=sys.stderr)


def progress(message: str) -> None:
    if not _quiet:
        _emit(f"🔄 {message}")


def success(message: str) -> None:
    if not _quiet:
        _emit(f"✅ {message}")


def saved(path: str) -> None:
    if not _quiet:
        _emit(f"💾 Saved: {path}")


def warn(message: str) -> None:
    _emit(f"⚠️  {message}")


def error(message: str) -> None:
    _emit(f"❌ {message}")


def banner(title: str) -> None:
    if not _quiet:
        _emit("=" * 60)
        _emit(title)
        _emit("=" * 60)


def log_operation(stage: str, operation: str, details: str = "") -> None:
    """Log an analysis operation with timestamp"""
    if _quiet:
        return
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    log_message = f"[{timestamp}] {stage}: {operation}"
    if details:
        log_message += f" - {details}"
    _emit(f"📝 {log_message}")
