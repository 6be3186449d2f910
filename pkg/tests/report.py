"""Collects one verdict line per acceptance criterion for the run summary."""
from __future__ import annotations

LINES: dict[str, str] = {}


def record(key: str, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}"
    LINES[key] = line
    print(line)
    return line
