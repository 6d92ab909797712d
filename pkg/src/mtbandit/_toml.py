"""Minimal parser/writer for the TOML subset used by experiment configs.

Supported: ``[section]`` and ``[section.sub]`` headers, ``key = value``
pairs with string / integer / float / boolean / flat-list values, and
``#`` comments.  Values round-trip losslessly through dumps/loads.
(The runtime targets Python 3.10, which lacks stdlib tomllib.)
"""

import re

__all__ = ["ConfigError", "loads", "dumps"]

_KEY_RE = re.compile(r"^[A-Za-z0-9_-]+$")
_INT_RE = re.compile(r"^[+-]?\d+$")


class ConfigError(ValueError):
    """Config syntax or schema problem, with a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == '"' and (i == 0 or line[i - 1] != "\\"):
            in_string = not in_string
        if ch == "#" and not in_string:
            break
        out.append(ch)
        i += 1
    return "".join(out).strip()


def _parse_scalar(token: str, lineno: int):
    token = token.strip()
    if not token:
        raise ConfigError("empty value", lineno)
    if token.startswith('"'):
        if len(token) < 2 or not token.endswith('"'):
            raise ConfigError(f"unterminated string {token!r}", lineno)
        body = token[1:-1]
        return body.replace('\\"', '"').replace("\\\\", "\\")
    if token == "true":
        return True
    if token == "false":
        return False
    if _INT_RE.match(token):
        return int(token)
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"cannot parse value {token!r}", lineno) from None


def _split_list_items(body: str, lineno: int) -> list[str]:
    items, depth, in_string, start = [], 0, False, 0
    for i, ch in enumerate(body):
        if ch == '"' and (i == 0 or body[i - 1] != "\\"):
            in_string = not in_string
        elif not in_string:
            if ch == "[":
                depth += 1
            elif ch == "]":
                depth -= 1
            elif ch == "," and depth == 0:
                items.append(body[start:i])
                start = i + 1
    if in_string or depth != 0:
        raise ConfigError("unbalanced list or string", lineno)
    tail = body[start:]
    if tail.strip():
        items.append(tail)
    return items


def _parse_value(token: str, lineno: int):
    token = token.strip()
    if token.startswith("["):
        if not token.endswith("]"):
            raise ConfigError("unterminated list (lists must be single-line)", lineno)
        return [_parse_scalar(item, lineno) for item in _split_list_items(token[1:-1], lineno)]
    return _parse_scalar(token, lineno)


def loads(text: str) -> dict:
    """Parse config text into nested dicts keyed by section path."""
    root: dict = {}
    current = root
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            path = line[1:-1].strip()
            if not path:
                raise ConfigError("empty section name", lineno)
            current = root
            for part in path.split("."):
                if not _KEY_RE.match(part):
                    raise ConfigError(f"bad section name part {part!r}", lineno)
                nxt = current.setdefault(part, {})
                if not isinstance(nxt, dict):
                    raise ConfigError(f"section {path!r} collides with a key", lineno)
                current = nxt
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"bad key {key!r}", lineno)
        if key in current:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        current[key] = _parse_value(value, lineno)
    return root


def _format_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"unsupported config value type {type(value).__name__}")


def _format_value(value) -> str:
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_scalar(v) for v in value) + "]"
    return _format_scalar(value)


def dumps(data: dict) -> str:
    """Serialize nested dicts back to config text (inverse of loads)."""
    lines: list[str] = []

    def emit(section: dict, path: list[str]):
        scalars = {k: v for k, v in section.items() if not isinstance(v, dict)}
        subs = {k: v for k, v in section.items() if isinstance(v, dict)}
        if path and (scalars or not subs):
            lines.append(f"[{'.'.join(path)}]")
        for k, v in scalars.items():
            lines.append(f"{k} = {_format_value(v)}")
        if scalars or (path and not subs):
            lines.append("")
        for k, v in subs.items():
            emit(v, path + [k])

    emit(data, [])
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"
