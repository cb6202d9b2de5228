"""Content-addressed artifact cache.

Layout: ``<root>/{features,models,scores}/<key[:2]>/<key>.<ext>``. Writes go to
a temporary file in the same directory and are renamed into place, so
concurrent readers only ever see complete files and two writers of the same
key leave one complete copy.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

ENV_VAR = "SPOOFBENCH_CACHE"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "spoofbench"


def content_key(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\x00")
    return h.hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Cache:
    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_cache_dir()
        self.hits = 0
        self.misses = 0

    def path(self, kind: str, key: str, ext: str) -> Path:
        return self.root / kind / key[:2] / f"{key}.{ext}"

    def lookup(self, kind, key, ext):
        p = self.path(kind, key, ext)
        if p.exists():
            self.hits += 1
            return p
        self.misses += 1
        return None

    def store(self, kind, key, ext, writer) -> Path:
        """Call ``writer(tmp_path)`` and atomically move the result into place."""
        dest = self.path(kind, key, ext)
        dest.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=dest.parent, prefix=".tmp-", suffix=f".{ext}")
        os.close(fd)
        try:
            writer(tmp)
            os.replace(tmp, dest)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return dest
