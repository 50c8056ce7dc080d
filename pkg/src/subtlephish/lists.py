"""Line-oriented list files: one entry per line, '#' starts a comment."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def parse_list(text: str) -> list[str]:
    entries = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            entries.append(line)
    return entries


def read_list(path) -> list[str]:
    return parse_list(Path(path).read_text(encoding="utf-8"))


def default_list(name: str) -> list[str]:
    """Load one of the lists shipped in ``subtlephish/data``."""
    text = resources.files("subtlephish").joinpath("data").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return parse_list(text)
