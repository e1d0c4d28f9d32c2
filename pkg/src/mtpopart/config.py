"""Process-level settings loaded from environment variables."""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL: str = os.environ.get("MTPOPART_LOG_LEVEL", "INFO").upper()


def out_root() -> Path:
    """Root that relative output directories resolve under. Read on each call so tests can override it."""
    return Path(os.environ.get("MTPOPART_OUT_ROOT") or ".")


def resolve_out_dir(raw: str | Path) -> Path:
    path = Path(raw)
    return path if path.is_absolute() else out_root() / path


def setup_logging() -> None:
    level = getattr(logging, LOG_LEVEL, None)
    if not isinstance(level, int):
        level = logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
