"""Result cache keyed by the content hash of (config minus output paths, version).

A cache hit replays the stored output files byte for byte without touching
any solver, which is what makes repeated identical invocations idempotent.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from pathlib import Path

from . import __version__

# Keys that do not affect the numerical result.
_EXCLUDED_KEYS = {"out", "cache", "threads", "config", "plots"}


def config_hash(config: dict) -> str:
    reduced = {k: v for k, v in sorted(config.items()) if k not in _EXCLUDED_KEYS}
    payload = json.dumps({"version": __version__, "config": reduced}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


class ResultCache:
    def __init__(self, out_dir, mode: str = "reuse"):
        if mode not in ("reuse", "recompute"):
            raise ValueError(f"cache mode must be reuse or recompute, got {mode!r}")
        self.out_dir = Path(out_dir)
        self.root = self.out_dir / ".cache"
        self.mode = mode

    def entry(self, key: str) -> Path:
        return self.root / key

    def replay(self, key: str) -> bool:
        """Copy cached outputs back into the output directory; True on a hit."""
        if self.mode != "reuse":
            return False
        entry = self.entry(key)
        manifest = entry / "manifest.json"
        if not manifest.exists():
            return False
        names = json.loads(manifest.read_text())["files"]
        for name in names:
            src = entry / "files" / name
            if not src.exists():
                return False
        for name in names:
            dst = self.out_dir / name
            dst.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(entry / "files" / name, dst)
        return True

    def store(self, key: str, names) -> None:
        entry = self.entry(key)
        files_dir = entry / "files"
        if files_dir.exists():
            shutil.rmtree(files_dir)
        files_dir.mkdir(parents=True, exist_ok=True)
        kept = []
        for name in names:
            src = self.out_dir / name
            if not src.exists():
                continue
            dst = files_dir / name
            dst.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(src, dst)
            kept.append(name)
        (entry / "manifest.json").write_text(json.dumps({"files": kept}, indent=2))
