"""Lexical SQL skeleton extraction.

A skeleton is the query text with every literal masked, so that queries
differing only in their values collapse to one identity:

* ``--`` line comments and ``/* ... */`` block comments are dropped
* single- and double-quoted strings become one ``?`` token
  (handles ``''`` doubling and backslash escapes; an unterminated
  string is masked to the end of the input)
* any token starting with a digit (or ``.`` followed by a digit)
  becomes ``?`` -- covers ints, decimals, hex (``0xFF``), ``1e5``
* word tokens are ASCII-lowercased, all whitespace collapses, and
  tokens are re-joined with single spaces

This is lexical, not grammatical: fragments that are not valid SQL pass
through token by token. The transform is a fixpoint on its own output.

The hot entry point is :func:`skeleton`. When the compiled extension
(``crosstier._sqlnorm``) is importable it is used automatically; set
``CROSSTIER_PURE=1`` to force the pure-Python lexer. Both implement the
exact same token rules and are cross-checked in the test suite.
"""

from __future__ import annotations

import os

_TWO_CHAR_OPS = ("<=", ">=", "<>", "!=", "||", ":=")

# str.lower() can expand some non-ASCII chars to two codepoints, which would
# break re-lexing stability; keywords are ASCII, so fold ASCII only.
_ASCII_LOWER = str.maketrans(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz"
)


def _scan_string(text: str, i: int) -> int:
    """Return the index just past the quoted string opening at ``i``."""
    quote = text[i]
    n = len(text)
    j = i + 1
    while j < n:
        c = text[j]
        if c == "\\":
            j += 2
            continue
        if c == quote:
            if j + 1 < n and text[j + 1] == quote:  # '' escape
                j += 2
                continue
            return j + 1
        j += 1
    return n  # unterminated: mask the rest


def skeleton_py(text: str) -> str:
    """Pure-Python skeleton lexer (reference implementation)."""
    tokens: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        nxt = text[i + 1] if i + 1 < n else ""
        if c == "-" and nxt == "-":
            stop = text.find("\n", i + 2)
            i = n if stop < 0 else stop + 1
            continue
        if c == "/" and nxt == "*":
            stop = text.find("*/", i + 2)
            i = n if stop < 0 else stop + 2
            continue
        if c == "'" or c == '"':
            i = _scan_string(text, i)
            tokens.append("?")
            continue
        if c.isdigit() or (c == "." and nxt.isdigit()):
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "_."):
                j += 1
            tokens.append("?")
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(text[i:j].translate(_ASCII_LOWER))
            i = j
            continue
        pair = c + nxt
        if pair in _TWO_CHAR_OPS:
            tokens.append(pair)
            i += 2
            continue
        tokens.append(c)
        i += 1
    return " ".join(tokens)


try:
    from crosstier._sqlnorm import skeleton_c
except ImportError:  # extension not built
    skeleton_c = None

_force_pure = os.environ.get("CROSSTIER_PURE", "") not in ("", "0")

if skeleton_c is not None and not _force_pure:
    skeleton = skeleton_c
    BACKEND = "compiled"
else:
    skeleton = skeleton_py
    BACKEND = "python"
