# src/common/fileio.py

import json
import logging
import os
from typing import Any, Dict

import pandas as pd

from src.common.exceptions import ParseError

FORMAT_VERSION = 1

logger = logging.getLogger(__name__)


def ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_json(path: str, payload: Dict[str, Any]) -> str:
    """
    Writes a JSON document with a format_version key. Keys are sorted so two
    runs with identical inputs give byte-identical files.
    """
    ensure_parent(path)
    document = {"format_version": FORMAT_VERSION, **payload}
    with open(path, "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"Wrote JSON document {path}")
    return path


def read_json(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"File not found: {path}")
    try:
        with open(path, "r") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"Malformed JSON in {path}: {e}") from e
    if not isinstance(document, dict):
        raise ParseError(f"Expected a JSON object at the top level of {path}")
    version = document.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(
            f"{path} has format_version={version}, this build reads {FORMAT_VERSION}"
        )
    return document


def write_csv(path: str, df: pd.DataFrame) -> str:
    """Writes a table with a leading format_version column."""
    ensure_parent(path)
    out = df.copy()
    out.insert(0, "format_version", FORMAT_VERSION)
    out.to_csv(path, index=False)
    logger.debug(f"Wrote {len(out)} rows to {path}")
    return path


def read_csv(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"File not found: {path}")
    try:
        df = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"Malformed CSV in {path}: {e}") from e
    if "format_version" in df.columns:
        versions = set(df["format_version"].unique())
        if versions and versions != {FORMAT_VERSION}:
            raise ParseError(f"{path} has unsupported format_version {versions}")
        df = df.drop(columns=["format_version"])
    return df
