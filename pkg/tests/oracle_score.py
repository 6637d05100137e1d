#!/usr/bin/env python3
"""Standalone content-preservation oracle.

Recomputes content_preservation_token for a pipeline run from first
principles: its own resume flattening, its own tokenizer, its own overlap
count. Imports nothing from the package under test.

Usage: oracle_score.py <original_resume.txt> <tailored.json>
Prints the score as repr(float) on stdout.
"""

import json
import sys
import unicodedata


def flatten_resume(doc: dict) -> str:
    lines = []

    def add(value):
        if isinstance(value, str) and value:
            lines.append(value)

    personal = doc.get("personal") or {}
    add(personal.get("full_name"))
    add(personal.get("email"))
    add(personal.get("phone"))
    add(personal.get("location"))
    for link in personal.get("links") or []:
        add(link.get("label"))
        add(link.get("url"))
    add(doc.get("summary"))
    for e in doc.get("education") or []:
        for key in ("institution", "degree", "field_of_study", "start_date",
                    "end_date", "gpa"):
            add(e.get(key))
        for item in e.get("coursework") or []:
            add(item)
    for e in doc.get("work_experience") or []:
        for key in ("employer", "role", "location", "start_date", "end_date"):
            add(e.get(key))
        for item in e.get("bullets") or []:
            add(item)
    for p in doc.get("projects") or []:
        add(p.get("name"))
        add(p.get("link"))
        for item in p.get("technologies") or []:
            add(item)
        add(p.get("date_range"))
        for item in p.get("bullets") or []:
            add(item)
    for g in doc.get("skill_groups") or []:
        add(g.get("category"))
        for item in g.get("skills") or []:
            add(item)
    for item in doc.get("achievements") or []:
        add(item)
    for c in doc.get("certifications") or []:
        for key in ("name", "issuer", "date"):
            add(c.get(key))
    for s in doc.get("extra_sections") or []:
        add(s.get("title"))
        for item in s.get("bullets") or []:
            add(item)
    return "\n".join(unicodedata.normalize("NFC", line) for line in lines)


def unique_words(text: str) -> list:
    normalized = unicodedata.normalize("NFC", text).lower()
    words = []
    current = []
    for ch in normalized:
        if ch.isalnum() and ch != "_":
            current.append(ch)
        else:
            if current:
                words.append("".join(current))
                current = []
    if current:
        words.append("".join(current))
    unique = []
    for word in words:
        if word not in unique:
            unique.append(word)
    return unique


def main() -> int:
    original_path, tailored_path = sys.argv[1], sys.argv[2]
    with open(original_path, encoding="utf-8") as handle:
        user_text = handle.read()
    with open(tailored_path, encoding="utf-8") as handle:
        tailored = json.load(handle)
    doc = tailored["resume"] if "resume" in tailored else tailored

    gen_words = unique_words(flatten_resume(doc))
    user_words = unique_words(user_text)
    if not gen_words or not user_words:
        print("error: empty word set", file=sys.stderr)
        return 1
    in_both = 0
    for word in gen_words:
        if word in user_words:
            in_both += 1
    smaller = len(gen_words) if len(gen_words) < len(user_words) else len(user_words)
    print(repr(in_both / smaller))
    return 0


if __name__ == "__main__":
    sys.exit(main())
