#!/usr/bin/env python3
"""Regenerates the bundled phonology data under core/data/.

Sources (both MIT licensed):
  pypinyin  - character readings (most common first) and word readings
  jieba     - word frequency dictionary used for the segmenter word list

Usage: python3 tools/data/build_lexicon.py [--out core/data] [--seg-words 80000]
"""
import argparse
import os
import unicodedata

from pypinyin import pinyin_dict, phrases_dict
import jieba

INITIALS = ["zh", "ch", "sh", "b", "p", "m", "f", "d", "t", "n", "l", "g", "k",
            "h", "j", "q", "x", "r", "z", "c", "s"]
FINALS = {"a", "o", "e", "i", "u", "v", "ai", "ei", "ao", "ou", "an", "en", "ang",
          "eng", "ong", "er", "ia", "ie", "iao", "iu", "ian", "in", "iang", "ing",
          "iong", "ua", "uo", "uai", "ui", "uan", "un", "uang", "ueng", "ve",
          "van", "vn"}
TONE_MARKS = {"̄": "1", "́": "2", "̌": "3", "̀": "4"}


def to_numbered(marked):
    """tiān -> tian1, lǜ -> lv4, le -> le5."""
    tone = "5"
    out = []
    for ch in unicodedata.normalize("NFD", marked.lower()):
        if ch in TONE_MARKS:
            tone = TONE_MARKS[ch]
        elif ch == "̈":
            out[-1] = "v"
        elif ch.isascii() and ch.isalpha():
            out.append(ch)
        else:
            return None
    return "".join(out) + tone


def split_syllable(numbered):
    body = numbered[:-1]
    initial = ""
    for cand in INITIALS:
        if body.startswith(cand):
            initial = cand
            break
    rest = body[len(initial):]
    if not initial and rest[:1] == "y":
        special = {"yi": "i", "yin": "in", "ying": "ing", "yu": "v", "yue": "ve",
                   "yuan": "van", "yun": "vn", "you": "iu"}
        rest = special.get(rest, "i" + rest[1:])
    elif not initial and rest[:1] == "w":
        special = {"wu": "u", "wei": "ui", "wen": "un", "weng": "ueng"}
        rest = special.get(rest, "u" + rest[1:])
    elif initial in ("j", "q", "x") and rest[:1] == "u":
        rest = "v" + rest[1:]
    rest = {"iou": "iu", "uei": "ui", "uen": "un"}.get(rest, rest)
    return (initial, rest) if rest in FINALS else None


def valid(numbered):
    return numbered is not None and split_syllable(numbered) is not None


def is_cjk(ch):
    return 0x4E00 <= ord(ch) <= 0x9FFF


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "..", "core", "data"))
    ap.add_argument("--seg-words", type=int, default=80000)
    args = ap.parse_args()

    primary = {}
    with open(os.path.join(args.out, "lexicon.tsv"), "w", encoding="utf-8") as f:
        for cp in sorted(pinyin_dict.pinyin_dict):
            ch = chr(cp)
            if not is_cjk(ch):
                continue
            readings = []
            for r in pinyin_dict.pinyin_dict[cp].split(","):
                n = to_numbered(r)
                if valid(n) and n not in readings:
                    readings.append(n)
            if readings:
                primary[ch] = readings[0]
                f.write(f"{ch}\t{','.join(readings)}\n")

    with open(os.path.join(args.out, "words.tsv"), "w", encoding="utf-8") as f:
        for word in sorted(phrases_dict.phrases_dict):
            if not 2 <= len(word) <= 4 or not all(c in primary for c in word):
                continue
            syls = [to_numbered(p[0]) for p in phrases_dict.phrases_dict[word]]
            if len(syls) != len(word) or not all(valid(s) for s in syls):
                continue
            # Only words that override some character default carry information.
            if any(primary[c] != s for c, s in zip(word, syls)):
                f.write(f"{word}\t{' '.join(syls)}\n")

    entries = []
    with open(os.path.join(os.path.dirname(jieba.__file__), "dict.txt"), encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if len(parts) >= 2 and all(c in primary for c in parts[0]):
                entries.append((-int(parts[1]), parts[0]))
    entries.sort()
    keep = sorted({w for _, w in entries[: args.seg_words]})
    with open(os.path.join(args.out, "segdict.txt"), "w", encoding="utf-8") as f:
        for w in keep:
            f.write(w + "\n")


if __name__ == "__main__":
    main()
