#!/usr/bin/env python3
"""Regenerate src/preprocess/emoji_table.inc from the `emoji` package.

Usage: python3 tools/gen_emoji_table.py > src/preprocess/emoji_table.inc
"""
import re
import sys

import emoji


def describe(name: str) -> str:
    text = name.strip(":").replace("_", " ").lower()
    text = text.replace("#", " number sign ").replace("*", " asterisk ")
    text = re.sub(r"[^a-z0-9' -]", " ", text)
    return " ".join(text.split())


def c_escape(seq: str) -> str:
    return "".join(f"\\x{b:02X}" for b in seq.encode("utf-8"))


def main() -> None:
    rows = []
    for seq, data in emoji.EMOJI_DATA.items():
        desc = describe(data["en"])
        if desc:
            rows.append((seq.encode("utf-8"), c_escape(seq), desc))
    rows.sort()
    out = sys.stdout
    out.write(f"// Generated by tools/gen_emoji_table.py from emoji {emoji.__version__}. Do not edit.\n")
    for _, esc, desc in rows:
        out.write(f'{{"{esc}", "{desc}"}},\n')


if __name__ == "__main__":
    main()
