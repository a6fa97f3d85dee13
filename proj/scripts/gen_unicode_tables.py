#!/usr/bin/env python3
"""Regenerates src/unicode_tables.inc from the Python unicodedata database.

The C++ tokenizer needs two locale-free tables:
  * codepoint ranges whose general category is P* (punctuation), S* (symbol)
    or Z* (separator) -- these are mapped to a space before splitting;
  * a simple lowercase map for codepoints outside ASCII.

Run from the repository root:  python3 scripts/gen_unicode_tables.py
"""

import sys
import unicodedata

MAX_CP = 0x10FFFF


def is_space_class(cp: int) -> bool:
    cat = unicodedata.category(chr(cp))
    return cat[0] in ("P", "S", "Z")


def main() -> None:
    ranges = []
    start = None
    for cp in range(MAX_CP + 1):
        if 0xD800 <= cp <= 0xDFFF:
            spacey = False
        else:
            spacey = is_space_class(cp)
        if spacey and start is None:
            start = cp
        elif not spacey and start is not None:
            ranges.append((start, cp - 1))
            start = None
    if start is not None:
        ranges.append((start, MAX_CP))

    lower = []
    for cp in range(0x80, MAX_CP + 1):
        if 0xD800 <= cp <= 0xDFFF:
            continue
        lo = chr(cp).lower()
        if len(lo) == 1 and ord(lo) != cp:
            lower.append((cp, ord(lo)))

    out = sys.stdout
    out.write("// Generated by scripts/gen_unicode_tables.py -- do not edit.\n")
    out.write("// Unicode %s via Python unicodedata.\n\n" % unicodedata.unidata_version)
    out.write("static constexpr CpRange kSpaceClassRanges[] = {\n")
    for a, b in ranges:
        out.write("    {0x%X, 0x%X},\n" % (a, b))
    out.write("};\n\n")
    out.write("static constexpr CpPair kLowerMap[] = {\n")
    for a, b in lower:
        out.write("    {0x%X, 0x%X},\n" % (a, b))
    out.write("};\n")


if __name__ == "__main__":
    main()
