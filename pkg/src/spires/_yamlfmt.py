from __future__ import annotations

import json
import math
from functools import lru_cache

import yaml

# Characters YAML reads as line breaks even inside quotes.
_YAML_BREAKS = frozenset("\x85\u2028\u2029")


@lru_cache(maxsize=4096)
def _plain_ok(text: str) -> bool:
    if not text or text != text.strip() or "\n" in text or " #" in text:
        return False
    try:
        return yaml.safe_load(f"k: {text}") == {"k": text}
    except yaml.YAMLError:
        return False


def scalar(value: object) -> str:
    """Render a scalar so that ``yaml.safe_load`` gives back the same value."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and not math.isfinite(value):
        return ".nan" if value != value else (".inf" if value > 0 else "-.inf")
    if isinstance(value, int):
        return str(int(value))
    if isinstance(value, float):
        # YAML 1.1 floats need a dot in the mantissa: "1e-05" would load as a string.
        text = repr(value)
        mantissa, e, exp = text.partition("e")
        return mantissa + ("" if "." in mantissa else ".0") + e + exp if e else text
    text = str(value)
    if _plain_ok(text):
        return text
    return quoted(text)


def _escape(ch: str) -> str:
    if ch.isprintable() and ch not in _YAML_BREAKS:
        return ch
    code = ord(ch)
    return f"\\u{code:04x}" if code <= 0xFFFF else f"\\U{code:08x}"


def quoted(text: str) -> str:
    """A YAML double-quoted scalar; JSON escaping plus escapes for YAML line breaks."""
    return "".join(_escape(ch) for ch in json.dumps(text, ensure_ascii=False))
