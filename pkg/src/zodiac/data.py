"""Bundled data files: transcriptions, keys, plans, cribs and corpora."""
from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path

DATA_DIR = Path(str(resources.files("zodiac") / "data"))


def path(name: str, data_dir: str | Path | None = None) -> Path:
    p = Path(data_dir or DATA_DIR) / name
    if not p.exists():
        raise FileNotFoundError(f"bundled data file {name!r} not found in {p.parent}")
    return p


def read_text(name: str, data_dir: str | Path | None = None) -> str:
    return path(name, data_dir).read_text(encoding="utf-8")


def sha256(p: str | Path) -> str:
    return hashlib.sha256(Path(p).read_bytes()).hexdigest()


def z340(data_dir=None):
    from .cipher import parse_cipher
    return parse_cipher(read_text("z340.cipher", data_dir))


def z408(data_dir=None):
    from .cipher import parse_cipher
    return parse_cipher(read_text("z408.cipher", data_dir))


def key(name: str, data_dir=None):
    from .cipher import parse_key
    return parse_key(read_text(name, data_dir))


def spec(name: str, data_dir=None):
    from .transposition import parse_spec
    return parse_spec(read_text(name, data_dir))
