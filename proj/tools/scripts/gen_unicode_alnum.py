#!/usr/bin/env python3
# Copyright 2026 The shrinkcast Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes the code point ranges that count as alphanumeric for the cleaner
(general category L* or Nd) as a C++ include file."""

import sys
import unicodedata


def ranges():
    start = None
    for cp in range(0x110000):
        cat = unicodedata.category(chr(cp))
        hit = cat.startswith("L") or cat == "Nd"
        if hit and start is None:
            start = cp
        elif not hit and start is not None:
            yield start, cp - 1
            start = None
    if start is not None:
        yield start, 0x10FFFF


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "unicode_alnum.inc"
    rs = list(ranges())
    with open(out, "w", encoding="ascii") as f:
        f.write("// Copyright 2026 The shrinkcast Authors\n// SPDX-License-Identifier: Apache-2.0\n//\n")
        f.write("// Generated by tools/scripts/gen_unicode_alnum.py from Unicode %s.\n"
                % unicodedata.unidata_version)
        f.write("// Inclusive ranges of letters (L*) and decimal digits (Nd).\n")
        for lo, hi in rs:
            f.write("{0x%04X, 0x%04X},\n" % (lo, hi))
    print(f"{len(rs)} ranges -> {out}")


if __name__ == "__main__":
    main()
