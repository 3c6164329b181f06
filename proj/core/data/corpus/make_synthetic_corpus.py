#!/usr/bin/env python3
"""Builds the synthetic aligned corpus and its answer sheet.

The answer sheet is computed here, without the C++ library: a literal copy of
the tone transition table, a plain forward maximum match over the fixture
dictionary, and integer tallies. Re-running the script is deterministic.

Outputs (next to this script):
  synthetic.jsonl   one record per line
  segdict.txt       segmentation dictionary used for the word-level mode
  answers.json      per-mode, per-flat-policy integer counts and exact rates
"""

import json
import random
from fractions import Fraction
from pathlib import Path

HERE = Path(__file__).resolve().parent

# (previous tone, next tone) -> expected pitch direction
TABLE = {
    1: {1: "D", 2: "D", 3: "D", 4: "D"},
    2: {1: "A", 2: "D", 3: "D", 4: "A"},
    3: {1: "A", 2: "A", 3: "D", 4: "A"},
    4: {1: "A", 2: "D", 3: "D", 4: "D"},
}

# word, tones (0 = neutral). Hand-picked; overlapping entries such as
# 天气 / 气球 / 天气球 exercise greedy segmentation.
VOCAB = [
    ("天", [1]), ("气", [4]), ("天气", [1, 4]), ("气球", [4, 2]),
    ("我", [3]), ("你", [3]), ("他", [1]), ("的", [0]), ("了", [0]),
    ("爱", [4]), ("想", [3]), ("唱", [4]), ("歌", [1]), ("唱歌", [4, 1]),
    ("月", [4]), ("亮", [4]), ("月亮", [4, 0]), ("星", [1]), ("星星", [1, 0]),
    ("山", [1]), ("水", [3]), ("山水", [1, 3]), ("花", [1]), ("开", [1]),
    ("花开", [1, 1]), ("风", [1]), ("雨", [3]), ("风雨", [1, 3]),
    ("回", [2]), ("家", [1]), ("回家", [2, 1]), ("明", [2]), ("天明", [1, 2]),
    ("明天", [2, 1]), ("中", [1]), ("国", [2]), ("中国", [1, 2]),
    ("人", [2]), ("中国人", [1, 2, 2]), ("美", [3]), ("丽", [4]),
    ("美丽", [3, 4]), ("梦", [4]), ("想", [3]), ("梦想", [4, 3]),
    ("春", [1]), ("天", [1]), ("春天", [1, 1]), ("海", [3]), ("洋", [2]),
    ("海洋", [3, 2]), ("远", [3]), ("方", [1]), ("远方", [3, 1]),
    ("走", [3]), ("过", [4]), ("走过", [3, 4]), ("一", [1]), ("路", [4]),
    ("一路", [1, 4]), ("光", [1]), ("阳", [2]), ("阳光", [2, 1]),
    ("心", [1]), ("里", [3]), ("心里", [1, 3]), ("笑", [4]), ("着", [0]),
]

DICT_WORDS = sorted({w for w, t in VOCAB if len(w) > 1} | {"天气球"})
TONES = {}
for w, t in VOCAB:
    for ch, tone in zip(w, t):
        TONES.setdefault(ch, tone)


def fmm(text, words, max_len):
    out, i = [], 0
    while i < len(text):
        for n in range(min(max_len, len(text) - i), 0, -1):
            if n == 1 or text[i:i + n] in words:
                out.append(text[i:i + n])
                i += n
                break
    return out


def tally(pitches, tones, word_starts, policy):
    """Returns dict(total, forced, checked, matched, skipped)."""
    c = dict(total=len(pitches), forced=0, checked=0, matched=0, skipped=0)
    for i in range(len(pitches)):
        if i in word_starts:
            c["forced"] += 1
            continue
        a, b = tones[i - 1], tones[i]
        if a == 0 or b == 0:
            c["skipped"] += 1
            continue
        step = pitches[i] - pitches[i - 1]
        if step == 0:
            if policy == "skip":
                c["skipped"] += 1
            else:
                c["checked"] += 1
                c["matched"] += policy == "match"
            continue
        c["checked"] += 1
        c["matched"] += ("A" if step > 0 else "D") == TABLE[a][b]
    return c


def make_records(rng):
    singles = [w for w, _ in VOCAB]
    records = []
    for r in range(60):
        if r < 4:
            # single-character phrases: one forced character each
            lyric = rng.choice([w for w in singles if len(w) == 1])
        else:
            target = rng.randint(3, 12)
            lyric = ""
            while len(lyric) < target:
                lyric += rng.choice(singles)
        tones = [TONES[ch] for ch in lyric]
        pitches = [rng.randint(55, 72)]
        for _ in lyric[1:]:
            move = rng.choice([-5, -3, -2, -1, 0, 0, 1, 2, 3, 4])
            pitches.append(min(84, max(48, pitches[-1] + move)))
        if r % 7 == 3:
            # every pair ascending where the table says descending: all mismatches
            pitches = [60]
            for i in range(1, len(lyric)):
                a, b = tones[i - 1], tones[i]
                want = TABLE[a][b] if a and b else "A"
                pitches.append(pitches[-1] + (-2 if want == "A" else 2))
        notes = []
        for i, p in enumerate(pitches):
            notes.append({"pitch": p, "duration": rng.choice([0.5, 1, 1, 2])})
            if i < len(pitches) - 1 and rng.random() < 0.12:
                notes.append({"pitch": 0, "duration": 0.5})
        records.append({
            "phrase": {"notes": notes},
            "lyric": lyric,
            "tones": ["N" if t == 0 else f"T{t}" for t in tones],
            "pitches": pitches,
        })
    return records


def main():
    rng = random.Random(20240607)
    records = make_records(rng)
    words = set(DICT_WORDS)
    max_len = max(len(w) for w in words)

    answers = {"records": len(records), "modes": {}}
    for mode in ("nsm", "sm"):
        answers["modes"][mode] = {}
        for policy in ("skip", "match", "mismatch"):
            tot = dict(total=0, forced=0, checked=0, matched=0, skipped=0)
            for rec in records:
                lyric = rec["lyric"]
                tones = [0 if t == "N" else int(t[1]) for t in rec["tones"]]
                if mode == "nsm":
                    starts = {0}
                else:
                    starts, pos = set(), 0
                    for w in fmm(lyric, words, max_len):
                        starts.add(pos)
                        pos += len(w)
                c = tally(rec["pitches"], tones, starts, policy)
                for k in tot:
                    tot[k] += c[k]
            den = tot["total"] - tot["skipped"]
            rate = Fraction(tot["forced"] + tot["matched"], den)
            floor = Fraction(tot["forced"], den)
            answers["modes"][mode][policy] = {
                **tot,
                "rate": [rate.numerator, rate.denominator],
                "theoretical_min": [floor.numerator, floor.denominator],
            }

    with open(HERE / "synthetic.jsonl", "w", encoding="utf-8") as f:
        for rec in records:
            rec = {k: v for k, v in rec.items() if k != "pitches"}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    (HERE / "segdict.txt").write_text("\n".join(DICT_WORDS) + "\n", encoding="utf-8")
    (HERE / "answers.json").write_text(json.dumps(answers, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
