"""Run manifests: the record that makes every run replayable.

A manifest captures the tool version, the resolved command
configuration, the seed, wall-clock bounds, and a digest inventory of
every emitted file.  Re-running the same configuration must reproduce
the digests bit for bit; `replay` automates that check.
"""

from __future__ import annotations

import dataclasses
import datetime as _dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

MANIFEST_NAME = "manifest.json"


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(
        timespec="seconds")


@dataclass
class RunManifest:
    """Everything needed to reproduce and verify one command run."""

    command: str                     # subcommand name
    experiment: str                  # experiment name or engine
    config: dict                     # resolved flag values, flat strings
    seed: int
    version: str = __version__
    started: str = field(default_factory=_utcnow)
    finished: str = ""
    outputs: dict = field(default_factory=dict)  # filename -> sha256
    summary: dict = field(default_factory=dict)

    def add_output(self, run_dir: Path, name: str) -> None:
        self.outputs[name] = sha256_file(run_dir / name)

    def finalize(self) -> None:
        self.finished = _utcnow()

    def write(self, run_dir: Path) -> Path:
        path = Path(run_dir) / MANIFEST_NAME
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2,
                      sort_keys=True)
            fh.write("\n")
        return path


def load_manifest(path) -> RunManifest:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    known = {f.name for f in dataclasses.fields(RunManifest)}
    return RunManifest(**{k: v for k, v in data.items() if k in known})


def make_run_dir(out_root, experiment: str, seed: int) -> Path:
    """`<out>/<experiment>/<timestamp>-<seed>/`, created fresh.

    A counter suffix keeps directories unique when two runs share a
    second and a seed.
    """
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S")
    base = Path(out_root) / experiment
    run_dir = base / f"{stamp}-{seed}"
    n = 1
    while run_dir.exists():
        run_dir = base / f"{stamp}-{seed}.{n}"
        n += 1
    run_dir.mkdir(parents=True)
    return run_dir


def verify_outputs(manifest: RunManifest, run_dir) -> list[str]:
    """Names whose current digest differs from the manifest (or that
    are missing)."""
    bad = []
    for name, digest in manifest.outputs.items():
        path = Path(run_dir) / name
        if not path.is_file() or sha256_file(path) != digest:
            bad.append(name)
    return bad
