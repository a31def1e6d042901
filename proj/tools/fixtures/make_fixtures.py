#!/usr/bin/env python3
"""Regenerate the checked-in test fixtures from the UDHR translations.

The Universal Declaration of Human Rights is published by the UN in several
hundred languages and is free of copyright. The `udhr` npm package bundles a
Unicode edition as one HTML file per translation:

    npm pack udhr && tar xzf udhr-*.tgz
    python3 tools/fixtures/make_fixtures.py --udhr package --out tests/fixtures

Outputs:
    langid/train.jsonl     {"language", "text"} training paragraphs (articles 0-20)
    langid/heldout.jsonl   {"language", "text"} held-out paragraphs >= 200 chars
    corpus/shard-*.jsonl   synthetic web pages (RawDocument records) in 6 languages
    badwords/<lang>        tiny per-language word lists
    vocab/test.vocab       1,000-piece greedy vocabulary
"""

import argparse
import collections
import json
import os
import random
from html.parser import HTMLParser

LANGID = {
    "en": "eng", "de": "deu_1996", "fr": "fra", "es": "spa", "it": "ita",
    "pt": "por_PT", "nl": "nld", "pl": "pol", "cs": "ces", "ru": "rus",
    "uk": "ukr", "bg": "bul", "el": "ell_monotonic", "tr": "tur", "fi": "fin",
    "hu": "hun", "sv": "swe", "ro": "ron_2006", "id": "ind", "vi": "vie",
    "ar": "arb", "he": "heb", "hi": "hin", "ja": "jpn", "zh": "cmn_hans",
    "ko": "kor", "th": "tha",
}
CORPUS_LANGS = ["en", "de", "fr", "es", "ru", "ja"]
HELDOUT_FROM_ARTICLE = 21
MIN_HELDOUT_CHARS = 200


class _Declaration(HTMLParser):
    def __init__(self):
        super().__init__()
        self.paras = []
        self._cur = None
        self._article = 0

    def handle_starttag(self, tag, attrs):
        if tag == "article":
            self._article = int(dict(attrs).get("data-number", "0"))
        elif tag == "p":
            self._cur = ""

    def handle_endtag(self, tag):
        if tag == "p" and self._cur is not None:
            text = " ".join(self._cur.split())
            if text:
                self.paras.append((self._article, text))
            self._cur = None

    def handle_data(self, data):
        if self._cur is not None:
            self._cur += data


def load(udhr_dir, code):
    parser = _Declaration()
    with open(os.path.join(udhr_dir, "declaration", code + ".html"), encoding="utf-8") as f:
        parser.feed(f.read())
    return parser.paras


def join_paras(parts, lang):
    sep = "" if lang in ("ja", "zh", "th") else " "
    return sep.join(parts)


def merge_to_min(paras, lang, min_chars):
    out, cur = [], []
    for p in paras:
        cur.append(p)
        if len(join_paras(cur, lang)) >= min_chars:
            out.append(join_paras(cur, lang))
            cur = []
    if cur:
        if out:
            out[-1] = join_paras([out[-1]] + cur, lang)
        else:
            out.append(join_paras(cur, lang))
    return out


def write_jsonl(path, rows):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def make_langid(udhr_dir, out):
    train, heldout = [], []
    for lang, code in LANGID.items():
        paras = load(udhr_dir, code)
        tr = [t for a, t in paras if a < HELDOUT_FROM_ARTICLE]
        ho = [t for a, t in paras if a >= HELDOUT_FROM_ARTICLE]
        train += [{"language": lang, "text": t} for t in tr]
        heldout += [{"language": lang, "text": t} for t in merge_to_min(ho, lang, MIN_HELDOUT_CHARS)]
    write_jsonl(os.path.join(out, "langid", "train.jsonl"), train)
    write_jsonl(os.path.join(out, "langid", "heldout.jsonl"), heldout)
    return train


NAV = {
    "en": "Home | About | Contact", "de": "Startseite | Impressum | Kontakt",
    "fr": "Accueil | Mentions légales | Contact", "es": "Inicio | Aviso legal | Contacto",
    "ru": "Главная | О сайте | Контакты", "ja": "ホーム | 概要 | お問い合わせ",
}
BADWORDS = {
    "en": ["damn", "bloody hell"],
    "de": ["verdammt"],
    "fr": ["merde"],
    "ja": ["くそ"],
}


def make_corpus(udhr_dir, out, rng):
    docs = []
    for lang in CORPUS_LANGS:
        paras = [t for _, t in load(udhr_dir, LANGID[lang])]
        long_lines = merge_to_min(paras, lang, 220)
        short_lines = [t for t in paras if len(t) < 120]
        n = len(long_lines)
        for i in range(10):
            start = rng.randrange(n)
            take = rng.choice([1, 2, 3, 3, 4, 5])
            body = [long_lines[(start + j) % n] for j in range(take)]
            lines = [NAV[lang]] + body
            if short_lines:
                lines.insert(1 + rng.randrange(len(body) + 1), rng.choice(short_lines))
            docs.append({"lang": lang, "lines": lines})
        # a verbatim repost of an earlier page, removed entirely by dedup
        docs.append({"lang": lang, "lines": list(docs[-10]["lines"])})
    bad = [
        ("en", "Well damn, this page ends with a word from the list."),
        ("en", "Damnation is a longer word and must not trigger the whole-word rule."),
        ("de", "Das ist verdammt noch mal ein Satz mit einem gelisteten Wort darin."),
        ("ja", "この行にはくそという語が含まれています。"),
    ]
    for lang, extra in bad:
        paras = [t for _, t in load(udhr_dir, LANGID[lang])]
        long_lines = merge_to_min(paras[-12:], lang, 220)
        docs.append({"lang": lang, "lines": long_lines[:3] + [extra]})
    rng.shuffle(docs)
    shards = [[], [], []]
    for i, d in enumerate(docs):
        shards[i % 3].append({
            "url": "https://example.%s/page/%03d" % (d["lang"], i),
            "timestamp": "2020-%02d-%02dT12:00:00Z" % (1 + i % 12, 1 + i % 28),
            "text": "\n".join(d["lines"]) + "\n",
        })
    for k, rows in enumerate(shards):
        write_jsonl(os.path.join(out, "corpus", "shard-%02d.jsonl" % k), rows)
    bw = os.path.join(out, "badwords")
    os.makedirs(bw, exist_ok=True)
    for lang, words in BADWORDS.items():
        with open(os.path.join(bw, lang), "w", encoding="utf-8") as f:
            f.write("\n".join(words) + "\n")
    return docs


def make_vocab(docs, out, size=1000):
    meta = "▁"
    specials = ["<pad>", "</s>", "<unk>"]
    byte_pieces = ["<0x%02X>" % b for b in range(256)]
    chars = collections.Counter()
    words = collections.Counter()
    for d in docs:
        for line in d["lines"]:
            chars.update(line)
            for w in line.split(" "):
                if w:
                    words[meta + w] += 1
                    words[w] += 1
    budget = size - len(specials) - len(byte_pieces)
    pieces = [meta]
    for c, _ in sorted(chars.items(), key=lambda kv: (-kv[1], kv[0])):
        if c != " " and len(pieces) < 300:
            pieces.append(c)
    for w, _ in sorted(words.items(), key=lambda kv: (-kv[1], kv[0])):
        if len(pieces) >= budget:
            break
        if len(w) > 1 and w not in pieces:
            pieces.append(w)
    path = os.path.join(out, "vocab", "test.vocab")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("#forge-vocab 1\n")
        f.write("#special pad=<pad> eos=</s> unk=<unk>\n")
        f.write("#sentinels 100\n")
        for p in specials + byte_pieces + pieces:
            f.write(p + "\t0\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--udhr", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=17)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    make_langid(args.udhr, args.out)
    docs = make_corpus(args.udhr, args.out, rng)
    make_vocab(docs, args.out)


if __name__ == "__main__":
    main()
