"""key=value 形式のレポート出力."""

from collections.abc import Mapping
from typing import TextIO

__all__ = ["format_report", "format_value", "print_report"]


def format_value(value: object) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        items: list[object] = list(value)  # pyright: ignore[reportUnknownArgumentType]
        return ",".join(format_value(v) for v in items)
    return str(value)


def format_report(report: Mapping[str, object]) -> str:
    """1 行 1 項目. 並び順は report のキー順."""
    return "".join(f"{key}={format_value(value)}\n" for key, value in report.items())


def print_report(report: Mapping[str, object], stream: TextIO) -> None:
    stream.write(format_report(report))
    stream.flush()
