"""
Logging setup for the CLI and the experiment runners.

Records can carry experiment context (case, method, SNR, run, stage). The
JSON formatter emits it as top-level keys, the text formatter appends it as
``key=value`` pairs, and ``bind`` attaches it to a logger once instead of
passing ``extra=`` at every call.
"""

import functools
import json
import logging
import math
import time
from collections.abc import Callable, MutableMapping
from datetime import UTC, datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, TypeVar

from structured_pca.config.settings import Settings

F = TypeVar("F", bound=Callable[..., Any])

CONTEXT_FIELDS = ("case", "method", "snr", "run", "stage")


def _context(record: logging.LogRecord) -> dict[str, Any]:
    ctx = {}
    for name in CONTEXT_FIELDS:
        value = getattr(record, name, None)
        if value is None:
            continue
        if isinstance(value, float) and math.isinf(value):
            value = "inf"
        ctx[name] = value
    return ctx


class JsonFormatter(logging.Formatter):
    """One JSON object per record, experiment context as top-level keys."""

    def __init__(self, service_name: str = "structured-pca") -> None:
        super().__init__()
        self.service_name = service_name

    def format(self, record: logging.LogRecord) -> str:
        log_obj: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, UTC).isoformat(),
            "service": self.service_name,
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
            "process": record.process,
        }
        log_obj.update(_context(record))
        if record.exc_info:
            log_obj["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_obj, default=str)


class TextFormatter(logging.Formatter):
    """Human-readable lines with the experiment context appended."""

    def __init__(self) -> None:
        super().__init__(
            fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        ctx = _context(record)
        if not ctx:
            return line
        head, sep, tail = line.partition("\n")
        pairs = " ".join(f"{k}={v}" for k, v in ctx.items())
        return f"{head} [{pairs}]{sep}{tail}"


class ContextAdapter(logging.LoggerAdapter):
    """Logger adapter that merges bound context into every record's extras."""

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> tuple[Any, MutableMapping[str, Any]]:
        kwargs["extra"] = {**(self.extra or {}), **kwargs.get("extra", {})}
        return msg, kwargs


def bind(logger: logging.Logger, **context: Any) -> ContextAdapter:
    """Logger that tags every record with ``context`` (see CONTEXT_FIELDS)."""
    unknown = set(context) - set(CONTEXT_FIELDS)
    if unknown:
        raise ValueError(f"unknown log context fields: {sorted(unknown)}")
    return ContextAdapter(logger, context)


def setup_logging(
    settings: Settings, use_json: bool | None = None, service_name: str = "structured-pca"
) -> logging.Logger:
    """
    Configure the root logger from LOG_* settings.

    Installs a standard-error handler, plus a rotating file handler when
    LOG_FILE is set. Previously installed handlers are replaced, and
    ``warnings`` (e.g. scipy's LinAlgWarning) are routed into logging.

    Args:
        settings: Application settings
        use_json: Force JSON (True) or text (False); None defers to LOG_JSON
        service_name: Value of the JSON ``service`` key

    Returns:
        The root logger
    """
    level = getattr(logging, settings.logging.log_level)
    if use_json is None:
        use_json = settings.logging.log_json
    formatter = JsonFormatter(service_name) if use_json else TextFormatter()

    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if settings.logging.log_file:
        log_path = Path(settings.logging.log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            RotatingFileHandler(
                filename=str(log_path),
                maxBytes=settings.logging.log_max_bytes,
                backupCount=settings.logging.log_backup_count,
            )
        )

    root = logging.getLogger()
    for old in list(root.handlers):
        root.removeHandler(old)
        if isinstance(old.formatter, JsonFormatter | TextFormatter):
            old.close()
    for handler in handlers:
        handler.setFormatter(formatter)
        handler.setLevel(level)
        root.addHandler(handler)
    root.setLevel(level)
    logging.captureWarnings(True)
    return root


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def log_execution_time(func: F) -> F:
    """Log the wall time of ``func`` at DEBUG on its module's logger."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        start = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            elapsed = time.perf_counter() - start
            logging.getLogger(func.__module__).debug(f"{func.__name__} executed in {elapsed:.2f}s")

    return wrapper  # type: ignore[return-value]
