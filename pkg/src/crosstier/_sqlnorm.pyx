# cython: language_level=3, boundscheck=False
"""Compiled SQL skeleton lexer.

Token rules mirror ``crosstier.sqlnorm.skeleton_py`` exactly; the two are
cross-checked by the test suite on fuzzed inputs.
"""

_ASCII_LOWER = str.maketrans(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz"
)


cdef Py_ssize_t _scan_string(str text, Py_ssize_t i, Py_ssize_t n):
    cdef Py_UCS4 quote = text[i]
    cdef Py_UCS4 c
    cdef Py_ssize_t j = i + 1
    while j < n:
        c = text[j]
        if c == u'\\':
            j += 2
            continue
        if c == quote:
            if j + 1 < n and text[j + 1] == quote:  # '' escape
                j += 2
                continue
            return j + 1
        j += 1
    return n  # unterminated: mask the rest


def skeleton_c(str text):
    """Return the literal-masked skeleton of ``text``."""
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t j, stop
    cdef Py_ssize_t n = len(text)
    cdef Py_UCS4 c, nxt, ch
    cdef bint has_upper
    cdef list tokens = []
    cdef str tok

    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        nxt = text[i + 1] if i + 1 < n else 0
        if c == u'-' and nxt == u'-':
            stop = text.find('\n', i + 2)
            i = n if stop < 0 else stop + 1
            continue
        if c == u'/' and nxt == u'*':
            stop = text.find('*/', i + 2)
            i = n if stop < 0 else stop + 2
            continue
        if c == u"'" or c == u'"':
            i = _scan_string(text, i, n)
            tokens.append("?")
            continue
        if c.isdigit() or (c == u'.' and nxt.isdigit()):
            j = i + 1
            while j < n:
                ch = text[j]
                if ch.isalnum() or ch == u'_' or ch == u'.':
                    j += 1
                else:
                    break
            tokens.append("?")
            i = j
            continue
        if c.isalpha() or c == u'_':
            has_upper = u'A' <= c <= u'Z'
            j = i + 1
            while j < n:
                ch = text[j]
                if ch.isalnum() or ch == u'_':
                    if u'A' <= ch <= u'Z':
                        has_upper = True
                    j += 1
                else:
                    break
            tok = text[i:j]
            if has_upper:
                tok = tok.translate(_ASCII_LOWER)
            tokens.append(tok)
            i = j
            continue
        if ((c == u'<' and (nxt == u'=' or nxt == u'>'))
                or (c == u'>' and nxt == u'=')
                or (c == u'!' and nxt == u'=')
                or (c == u'|' and nxt == u'|')
                or (c == u':' and nxt == u'=')):
            tokens.append(text[i:i + 2])
            i += 2
            continue
        tokens.append(text[i:i + 1])
        i += 1

    return " ".join(tokens)
