"""Structured report serialization: deterministic JSON plus a Markdown rendering.

Every float is serialized rounded to 6 significant digits together with a
``*_hex`` sibling holding ``float.hex()`` of the exact value, so reports can
be regression-tested bit-exactly while staying human-readable. Volatile data
(wall-clock timings) lives in a separate run file, keeping report bytes
reproducible for identical inputs and config.
"""

from __future__ import annotations

import json
from pathlib import Path


def _sig6(value: float) -> float:
    return float(f"{value:.6g}")


def _is_float(value) -> bool:
    return isinstance(value, float) and not isinstance(value, bool)


def encode_floats(obj):
    """Recursively round floats to 6 significant digits and add hex siblings."""
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            if _is_float(value):
                out[key] = _sig6(value)
                out[f"{key}_hex"] = value.hex()
            elif (
                isinstance(value, (list, tuple))
                and value
                and all(_is_float(v) for v in value)
            ):
                out[key] = [_sig6(v) for v in value]
                out[f"{key}_hex"] = [v.hex() for v in value]
            else:
                out[key] = encode_floats(value)
        return out
    if isinstance(obj, (list, tuple)):
        return [_sig6(v) if _is_float(v) else encode_floats(v) for v in obj]
    if _is_float(obj):
        return _sig6(obj)
    return obj


def report_to_json_bytes(report: dict) -> bytes:
    encoded = encode_floats(report)
    return (json.dumps(encoded, sort_keys=True, indent=2) + "\n").encode("utf-8")


def write_report_json(report: dict, path) -> None:
    Path(path).write_bytes(report_to_json_bytes(report))


def _md_scalar(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def _md_lines(obj, depth: int, lines: list[str]) -> None:
    indent = "  " * depth
    if isinstance(obj, dict):
        for key in sorted(obj):
            value = obj[key]
            if isinstance(value, (dict, list)):
                lines.append(f"{indent}- **{key}**:")
                _md_lines(value, depth + 1, lines)
            else:
                lines.append(f"{indent}- **{key}**: {_md_scalar(value)}")
    elif isinstance(obj, list):
        for i, value in enumerate(obj):
            if isinstance(value, (dict, list)):
                lines.append(f"{indent}- [{i}]:")
                _md_lines(value, depth + 1, lines)
            else:
                lines.append(f"{indent}- {_md_scalar(value)}")
    else:
        lines.append(f"{indent}- {_md_scalar(obj)}")


def render_markdown(report: dict, title: str = "WB-DWI analysis report") -> str:
    """Lossless Markdown rendering of the (already encoded) report JSON tree."""
    encoded = encode_floats(report)
    lines = [f"# {title}", ""]
    top_order = [k for k in (
        "tool", "schema_version", "config_hash", "inputs", "timepoints",
        "deltas", "response", "lesions",
    ) if k in encoded]
    top_order += [k for k in sorted(encoded) if k not in top_order]
    for key in top_order:
        lines.append(f"## {key}")
        value = encoded[key]
        if isinstance(value, (dict, list)):
            _md_lines(value, 0, lines)
        else:
            lines.append(_md_scalar(value))
        lines.append("")
    return "\n".join(lines)


def write_report_markdown(report: dict, path, title: str = "WB-DWI analysis report") -> None:
    Path(path).write_text(render_markdown(report, title), encoding="utf-8")
