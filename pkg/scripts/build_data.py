"""Regenerate the bundled English corpora and word list.

Sources (both fetched through pip, nothing else is downloaded):

* ``gensim`` wheel test data: a shortened English Wikipedia dump
  (``enwiki-latest-pages-articles1...-shortened.bz2``) and the Lee news
  corpus (``lee_background.cor``).
* ``wordfreq``: English word frequencies (Zipf scale).

Outputs in ``src/zodiac/data``:

* ``english_train.txt.gz``   Wikipedia prose, uppercase words, one paragraph per line.
                             Used to build the n-gram models.
* ``english_heldout.txt.gz`` Lee news prose plus every tenth Wikipedia paragraph
                             (those are left out of the training file), same
                             normalization. The cipher generator samples from it.
* ``english_words.tsv.gz``   ``WORD<TAB>zipf`` for the segmentation word model.

Usage::

    pip download gensim --no-deps -d /tmp/dl
    pip install wordfreq
    python scripts/build_data.py /tmp/dl/gensim-*.whl
"""
from __future__ import annotations

import bz2
import gzip
import html
import re
import sys
import zipfile
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "zodiac" / "data"
WIKI = "gensim/test/test_data/enwiki-latest-pages-articles1.xml-p000000010p000030302-shortened.bz2"
LEE = "gensim/test/test_data/lee_background.cor"
HOLDOUT_STRIDE = 10  # every tenth Wikipedia paragraph goes to the held-out file


def strip_wiki(markup: str) -> list[str]:
    t = html.unescape(markup)
    if t.startswith("#REDIRECT"):
        return []
    for _ in range(3):
        t = re.sub(r"\{\{[^{}]*\}\}", "", t)
    t = re.sub(r"<ref[^>]*/>", "", t)
    t = re.sub(r"<ref.*?</ref>", "", t, flags=re.S)
    t = re.sub(r"<[^>]+>", "", t)
    t = re.sub(r"\[\[(?:File|Image|Category):[^\]]*\]\]", "", t)
    t = re.sub(r"\[\[(?:[^\]|]*\|)?([^\]]*)\]\]", r"\1", t)
    t = re.sub(r"\[https?://\S+ ?([^\]]*)\]", r"\1", t)
    t = re.sub(r"\{\|.*?\|\}", "", t, flags=re.S)
    t = re.sub(r"'{2,}", "", t)
    return [ln for ln in t.split("\n") if ln and ln[0] not in "*|!{}=:;#" and len(ln) > 80]


def normalize(line: str) -> str:
    words = re.findall(r"[A-Z]+", line.upper().replace("'", ""))
    return " ".join(words)


def write_lines(path: Path, lines: list[str]) -> None:
    with gzip.GzipFile(path, "wb", mtime=0) as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
    print(f"{path.name}: {len(lines)} lines")


def main(wheel: str) -> None:
    z = zipfile.ZipFile(wheel)
    raw = bz2.decompress(z.read(WIKI)).decode("utf8", "ignore")
    paras: list[str] = []
    for body in re.findall(r"<text[^>]*>(.*?)</text>", raw, re.S):
        paras.extend(strip_wiki(body))
    wiki = [n for n in (normalize(p) for p in paras) if len(n) > 60]
    train = [n for i, n in enumerate(wiki) if i % HOLDOUT_STRIDE]
    write_lines(OUT / "english_train.txt.gz", train)

    lee = z.read(LEE).decode("utf8", "ignore").splitlines()
    held = [n for n in (normalize(p) for p in lee) if n]
    held += wiki[::HOLDOUT_STRIDE]
    write_lines(OUT / "english_heldout.txt.gz", held)

    import wordfreq

    rows = []
    for w in wordfreq.top_n_list("en", 60000):
        if not w.isascii() or not w.isalpha():
            continue
        # one-letter tokens other than A and I are mostly noise in the list
        if len(w) == 1 and w not in ("a", "i"):
            continue
        rows.append(f"{w.upper()}\t{wordfreq.zipf_frequency(w, 'en'):.2f}")
    write_lines(OUT / "english_words.tsv.gz", rows)


if __name__ == "__main__":
    main(sys.argv[1])
