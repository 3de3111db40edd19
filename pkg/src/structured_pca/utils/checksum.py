"""
SHA-256 digests for artifact provenance.

Generated data sets and sweep tables record their digest in a JSON
document next to them; ``identify`` checks a data file against it.
"""

import hashlib
import logging
from collections.abc import Iterable
from pathlib import Path

logger = logging.getLogger(__name__)


def calculate_sha256(file_path: Path) -> str:
    """
    Hex SHA-256 digest of a file's bytes.

    Raises:
        OSError: If the file cannot be opened or read
    """
    try:
        with Path(file_path).open("rb") as f:
            digest = hashlib.file_digest(f, "sha256").hexdigest()
    except OSError as e:
        logger.error(f"Cannot hash {file_path}: {e}")
        raise
    logger.debug(f"SHA-256 of {file_path}: {digest}")
    return digest


def checksum_map(paths: Iterable[Path]) -> dict[str, str]:
    """File name -> digest, for a JSON envelope."""
    return {p.name: calculate_sha256(p) for p in paths}


def verify_checksum(file_path: Path, expected_checksum: str) -> bool:
    """True when the file's digest equals ``expected_checksum`` (any case); unreadable files fail."""
    try:
        actual = calculate_sha256(file_path)
    except OSError:
        return False
    if actual == expected_checksum.lower():
        return True
    logger.warning(f"{file_path}: digest {actual} differs from recorded {expected_checksum}")
    return False
