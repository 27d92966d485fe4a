"""Canonical string rendering of structured (tuple) labels."""

from __future__ import annotations

import itertools


def render(parts) -> str:
    """Render nested tuples as ``(a,b,(c,d))``; strings pass through."""
    if isinstance(parts, (tuple, list)):
        return "(" + ",".join(render(p) for p in parts) + ")"
    return str(parts)


def parse(label: str):
    """Inverse of :func:`render` for labels without embedded commas or parentheses."""
    label = label.strip()
    if not label.startswith("("):
        return label
    out, depth, start = [], 0, 1
    for i, ch in enumerate(label):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                if i > start:
                    out.append(parse(label[start:i]))
                break
        elif ch == "," and depth == 1:
            out.append(parse(label[start:i]))
            start = i + 1
    return tuple(out)


def bitstrings(k: int) -> list[str]:
    """All k-bit strings in lexicographic order."""
    return ["".join(bits) for bits in itertools.product("01", repeat=k)]
