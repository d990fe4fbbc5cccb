#!/usr/bin/env python3
"""Emits core/src/dex_opcodes.inc from dexread's opcode/format table.

Keeping a single source of truth means the C++ decoder and the python
reference reader can never disagree about mnemonics or widths.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import dexread  # noqa: E402

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                   "..", "..", "core", "src", "dex_opcodes.inc")


def main():
    lines = [
        "// Generated by tests/tools/gen_opcode_table.py — do not edit.",
        "// One entry per opcode byte: {mnemonic, format}.",
    ]
    for op in range(256):
        if op in dexread.FORMATS:
            name, fmt = dexread.FORMATS[op]
            fmt_token = "Fmt::f" + fmt
            lines.append('{"%s", %s},' % (name, fmt_token))
        else:
            lines.append('{nullptr, Fmt::funused},')
    with open(OUT, "w") as f:
        f.write("\n".join(lines) + "\n")
    print("wrote %s" % os.path.normpath(OUT))


if __name__ == "__main__":
    main()
