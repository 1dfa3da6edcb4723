"""
Artifact writing for analysis runs
Files are staged in a hidden directory and moved into the output directory
only when the run succeeds, then listed with checksums in manifest.json
"""

import hashlib
import json
import math
import os
import shutil
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from utils import console

MANIFEST_NAME = "manifest.json"
OUTPUT_FORMATS = ("csv", "json", "both")


def _clean(value: Any) -> Any:
    """Make a value JSON-safe: NaN/inf become null, numpy scalars become Python"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dump_json(data: Any) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, trailing newline"""
    return json.dumps(_clean(data), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def sha256_of(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactWriter:
    """Write CSV, JSON and DOT results for one run"""

    def __init__(self, output_dir: str, output_format: str = "both"):
        if output_format not in OUTPUT_FORMATS:
            raise ValueError(
                f"❌ Error: output format must be one of {OUTPUT_FORMATS}, got {output_format!r}"
            )
        self.output_dir = output_dir
        self.output_format = output_format
        self.staging_dir = os.path.join(output_dir, f".staging-{os.getpid()}")
        self._written: Dict[str, str] = {}
        os.makedirs(self.staging_dir, exist_ok=True)

    def _stage(self, name: str) -> str:
        path = os.path.join(self.staging_dir, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        self._written[name] = path
        return path

    def write_text(self, name: str, text: str) -> str:
        path = self._stage(name)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return name

    def write_json(self, name: str, data: Any) -> str:
        return self.write_text(name, dump_json(data))

    def write_table(self, stem: str, frame: pd.DataFrame, index: bool = False) -> List[str]:
        """Write ``stem.csv`` and/or ``stem.json`` according to the output format"""
        names = []
        if self.output_format in ("csv", "both"):
            path = self._stage(f"{stem}.csv")
            frame.to_csv(path, index=index, lineterminator="\n")
            names.append(f"{stem}.csv")
        if self.output_format in ("json", "both"):
            table = frame.reset_index() if index else frame
            records = table.astype(object).where(table.notna(), None).to_dict("records")
            names.append(self.write_json(f"{stem}.json", records))
        return names

    @property
    def artifact_names(self) -> List[str]:
        return sorted(self._written)

    def discard(self) -> None:
        """Drop everything staged; the output directory is left as it was"""
        shutil.rmtree(self.staging_dir, ignore_errors=True)
        self._written.clear()

    def commit(
        self,
        subcommand: str,
        config: Dict[str, Any],
        config_hash: str,
        seed: int,
        inputs: Sequence[Dict[str, Any]],
        version: str,
        extra: Optional[Dict[str, Any]] = None,
    ) -> str:
        """
        Move staged files into the output directory and write the manifest

        The manifest lists every artifact with its SHA-256 and size; the
        only run-dependent field is ``generated_at``.

        Returns:
            Path of the manifest
        """
        artifacts = []
        for name in self.artifact_names:
            final_path = os.path.join(self.output_dir, name)
            os.makedirs(os.path.dirname(final_path), exist_ok=True)
            os.replace(self._written[name], final_path)
            artifacts.append(
                {"path": name, "sha256": sha256_of(final_path), "bytes": os.path.getsize(final_path)}
            )
            console.saved(final_path)
        shutil.rmtree(self.staging_dir, ignore_errors=True)

        manifest: Dict[str, Any] = {
            "tool": "carbon-market-analysis",
            "version": version,
            "subcommand": subcommand,
            "config": config,
            "config_hash": config_hash,
            "seed": seed,
            "inputs": list(inputs),
            "artifacts": artifacts,
            "generated_at": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        }
        if extra:
            manifest.update(extra)
        manifest_path = os.path.join(self.output_dir, MANIFEST_NAME)
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(dump_json(manifest))
        console.saved(manifest_path)
        return manifest_path


def load_manifest(output_dir: str) -> Dict[str, Any]:
    with open(os.path.join(output_dir, MANIFEST_NAME), "r", encoding="utf-8") as f:
        return json.load(f)
