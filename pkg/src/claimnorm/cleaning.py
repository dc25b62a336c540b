"""Intra-post sentence deduplication and recall-based pair filtering.

Repeated sentences inside a single post are detected by MD5 fingerprints of
normalized segments and dropped, keeping first occurrences. Post-claim pairs
are then filtered by token-level recall: the fraction of the claim's unique
tokens that also appear in the post. Pairs at or below the threshold are
removed from the training set.
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .corpus import PostClaimPair
from .errors import DataError

# Sentence-final punctuation across the task's scripts (Latin, Ethiopic,
# CJK, Arabic, Devanagari).
_TERMINATORS = ".!?።。؟।"
_SENTENCE_RE = re.compile(rf"[^{re.escape(_TERMINATORS)}]*[{re.escape(_TERMINATORS)}]+")


def segment_sentences(text: str) -> list[str]:
    """Split text into sentence segments on terminator punctuation and newlines."""
    segments = []
    for line in text.split("\n"):
        pos = 0
        for m in _SENTENCE_RE.finditer(line):
            # terminator only closes a sentence at whitespace or end of line
            end = m.end()
            if end < len(line) and not line[end].isspace():
                continue
            seg = line[pos:end].strip()
            if seg:
                segments.append(seg)
            pos = end
        tail = line[pos:].strip()
        if tail:
            segments.append(tail)
    return segments


def _normalize_segment(segment: str) -> str:
    norm = unicodedata.normalize("NFC", segment).lower()
    return re.sub(r"\s+", " ", norm).strip()


def fingerprint(segment: str) -> str:
    """MD5 hex digest of the normalized segment."""
    return hashlib.md5(_normalize_segment(segment).encode("utf-8")).hexdigest()


def dedup_post(text: str) -> str:
    """Drop repeated sentences within one post, keeping first occurrences."""
    seen = set()
    kept = []
    for seg in segment_sentences(text):
        fp = fingerprint(seg)
        if fp in seen:
            continue
        seen.add(fp)
        kept.append(seg)
    return " ".join(kept)


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> set[str]:
    """Unique lowercase tokens with edge punctuation stripped.

    Internal punctuation (hyphens, digits' separators) is kept, so "PK-320"
    stays one token. No stemming, no stopword removal.
    """
    tokens = set()
    for raw in text.lower().split():
        tok = _strip_edge_punct(raw)
        if tok:
            tokens.add(tok)
    return tokens


def token_recall(post_text: str, claim_text: str) -> float:
    """Fraction of the claim's unique tokens present in the post."""
    claim_tokens = tokenize(claim_text)
    if not claim_tokens:
        raise DataError("token_recall: claim has no tokens, recall undefined")
    post_tokens = tokenize(post_text)
    return len(claim_tokens & post_tokens) / len(claim_tokens)


@dataclass(frozen=True)
class FilterDecision:
    pair: PostClaimPair
    recall: float
    retained: bool
    threshold: float


def filter_pairs(
    pairs: list[PostClaimPair], threshold: float = 0.4
) -> tuple[list[PostClaimPair], list[FilterDecision]]:
    """Partition pairs by token recall of claim against the deduplicated post.

    Retention requires recall strictly above the threshold. Every returned
    pair carries its recall score; order is preserved in both partitions.
    """
    retained = []
    removed = []
    for pair in pairs:
        try:
            recall = token_recall(dedup_post(pair.post.text), pair.claim)
        except DataError as e:
            raise DataError(f"pair {pair.post.id!r}: {e}") from e
        scored = pair.with_recall(recall)
        if recall > threshold:
            retained.append(scored)
        else:
            removed.append(
                FilterDecision(pair=scored, recall=recall, retained=False, threshold=threshold)
            )
    return retained, removed


def write_filter_report(
    retained: list[PostClaimPair],
    removed: list[FilterDecision],
    threshold: float,
    path,
) -> None:
    """JSONL report of every filter decision, recalls to 4 decimals."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for pair in retained:
            f.write(json.dumps({
                "id": pair.post.id,
                "recall": round(pair.recall_score, 4),
                "retained": True,
                "threshold": threshold,
            }) + "\n")
        for dec in removed:
            f.write(json.dumps({
                "id": dec.pair.post.id,
                "recall": round(dec.recall, 4),
                "retained": False,
                "threshold": dec.threshold,
            }) + "\n")
