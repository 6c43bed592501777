"""
Run directory: every artifact is written atomically and indexed in
manifest.json with its SHA-256 digest.

Layout:
    manifest.json
    snapshots/snapshot_NNNN.json, snapshots/probe_NN.json
    frames/frame_NNNN.json
    ledgers/*.csv
    report.json, report.md
"""

import hashlib
import io
import json
import logging
import os
import shutil
from datetime import datetime
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from src.errors import ArtifactExists, MissingArtifacts


logger = logging.getLogger(__name__)


MANIFEST = "manifest.json"
SUBDIRS = ("snapshots", "frames", "ledgers")


def dumps(data: Any) -> str:
    """Canonical JSON text: sorted keys, indent 2, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def table_text(header: Sequence[str], rows) -> str:
    """CSV with a header line; values through numpy.savetxt with 17 digits."""
    buffer = io.StringIO()
    data = np.asarray(rows, dtype=float).reshape(-1, len(header))
    np.savetxt(buffer, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    return buffer.getvalue()


class ArtifactStore:
    """
    One run's output directory.

    Writes go through a temporary file and os.replace, so a crash never
    leaves a half-written artifact behind.
    """

    def __init__(self, root: str):
        self.root = root
        self.entries: Dict[str, str] = {}

    def path(self, relpath: str) -> str:
        return os.path.join(self.root, relpath)

    def exists(self, relpath: str = MANIFEST) -> bool:
        return os.path.exists(self.path(relpath))

    def prepare(self, force: bool = False):
        """
        Create the directory tree for a fresh run.

        Raises:
            ArtifactExists: a manifest is already present and force is False
        """
        if self.exists() and not force:
            raise ArtifactExists(f"{self.root} already holds a run; pass --force to overwrite")
        if force:
            for sub in SUBDIRS:
                shutil.rmtree(self.path(sub), ignore_errors=True)
            for name in (MANIFEST, "report.json", "report.md"):
                if self.exists(name):
                    os.remove(self.path(name))
        for sub in SUBDIRS:
            os.makedirs(self.path(sub), exist_ok=True)
        self.entries = {}

    def clear(self, subdir: str, prefix: str = ""):
        """Remove earlier outputs of one stage so a rerun leaves no stale files."""
        directory = self.path(subdir)
        if not os.path.isdir(directory):
            os.makedirs(directory, exist_ok=True)
            return
        for name in os.listdir(directory):
            if name.startswith(prefix):
                os.remove(os.path.join(directory, name))
                self.entries.pop(f"{subdir}/{name}", None)

    def write_text(self, relpath: str, text: str) -> str:
        target = self.path(relpath)
        os.makedirs(os.path.dirname(target) or ".", exist_ok=True)
        tmp = target + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, target)
        self.entries[relpath] = sha256_text(text)
        logger.debug(f"wrote {target}")
        return target

    def write_json(self, relpath: str, data: Any) -> str:
        return self.write_text(relpath, dumps(data))

    def write_table(self, relpath: str, header: Sequence[str], rows) -> str:
        return self.write_text(relpath, table_text(header, rows))

    def read_json(self, relpath: str) -> Any:
        with open(self.path(relpath), "r", encoding="utf-8") as f:
            return json.load(f)

    def read_table(self, relpath: str) -> np.ndarray:
        with open(self.path(relpath), "r", encoding="utf-8") as f:
            header = f.readline().strip().split(",")
        data = np.loadtxt(self.path(relpath), delimiter=",", skiprows=1, ndmin=2)
        return data.reshape(-1, len(header))

    def list(self, subdir: str, prefix: str) -> List[str]:
        directory = self.path(subdir)
        if not os.path.isdir(directory):
            return []
        return sorted(f"{subdir}/{name}" for name in os.listdir(directory)
                      if name.startswith(prefix) and name.endswith(".json"))

    def require(self, needed: Dict[str, Iterable[str]]):
        """
        Raises:
            MissingArtifacts: naming every input in needed with no file behind it
        """
        missing = [name for name, paths in needed.items() if not list(paths)]
        if missing:
            raise MissingArtifacts(missing)

    # Manifest

    def load_manifest(self) -> Dict[str, Any]:
        if not self.exists():
            return {}
        try:
            return self.read_json(MANIFEST)
        except json.JSONDecodeError:
            logger.warning(f"{self.path(MANIFEST)} is corrupted; starting a new manifest")
            return {}

    def save_manifest(self, fields: Optional[Dict[str, Any]] = None) -> str:
        """
        Merge this session's artifact digests and fields into manifest.json.

        created_at is the only timestamp anywhere in the run directory.
        """
        manifest = self.load_manifest()
        artifacts = manifest.get("artifacts", {})
        artifacts.update(self.entries)
        manifest["artifacts"] = {k: artifacts[k] for k in sorted(artifacts) if self.exists(k)}
        manifest.update(fields or {})
        manifest["created_at"] = datetime.now().strftime("%Y-%m-%dT%H:%M:%S.%f")[:-3]
        target = self.path(MANIFEST)
        tmp = target + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            f.write(dumps(manifest))
        os.replace(tmp, target)
        return target

    def verify(self) -> Dict[str, bool]:
        """Recompute the digest of every indexed artifact."""
        result = {}
        for relpath, digest in self.load_manifest().get("artifacts", {}).items():
            if not self.exists(relpath):
                result[relpath] = False
                continue
            with open(self.path(relpath), "r", encoding="utf-8") as f:
                result[relpath] = sha256_text(f.read()) == digest
        return result
