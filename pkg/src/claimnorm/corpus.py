"""Loading, validation, and summary statistics for post/claim datasets.

Datasets arrive either as CSV with columns "post" and "normalized claim"
(the shared-task layout) or as JSONL with fields "post" and "claim".
Re-serialization always emits JSONL with the full record schema.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

from .errors import DataError

SPLITS = ("train", "dev", "test")

# The 13 monolingual + 7 zero-shot task languages; users may register more.
TASK_LANGUAGES = {
    "ara", "deu", "eng", "fra", "hi", "mr", "ind", "pa", "pol", "por",
    "spa", "ta", "tha", "bn", "ces", "ell", "kor", "nld", "ron", "te",
}

_extra_languages: set[str] = set()


def register_language(code: str) -> None:
    """Allow an additional ISO-639 code to pass Post validation."""
    _extra_languages.add(code)


def known_language(code: str) -> bool:
    return code in TASK_LANGUAGES or code in _extra_languages


@dataclass(frozen=True)
class Post:
    id: str
    language: str
    text: str
    split: str

    def __post_init__(self):
        if not self.text.strip():
            raise DataError(f"post {self.id!r}: empty text")
        if self.split not in SPLITS:
            raise DataError(f"post {self.id!r}: invalid split {self.split!r}")
        if not known_language(self.language):
            raise DataError(
                f"post {self.id!r}: unknown language {self.language!r} "
                "(use register_language to add codes)"
            )


@dataclass(frozen=True)
class PostClaimPair:
    post: Post
    claim: str
    recall_score: Optional[float] = None

    def __post_init__(self):
        if self.post.split != "test" and not self.claim.strip():
            raise DataError(
                f"pair {self.post.id!r}: claim required for split {self.post.split!r}"
            )
        if self.recall_score is not None and not 0.0 <= self.recall_score <= 1.0:
            raise DataError(f"pair {self.post.id!r}: recall_score out of [0,1]")

    def with_recall(self, recall: float) -> "PostClaimPair":
        return replace(self, recall_score=recall)


@dataclass(frozen=True)
class CorpusStats:
    n_records: int
    avg_post_len: float
    avg_claim_len: Optional[float]  # None when no claims exist (zero-shot rows)


def _whitespace_len(text: str) -> int:
    return len(text.split())


def load_dataset(path, format: str, language: str, split: str) -> list[PostClaimPair]:
    """Load a dataset file into an ordered list of PostClaimPair.

    Missing ids are assigned as ``<language>-<split>-<row index>`` (0-based).
    Raises DataError naming the offending row on any malformed record.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"{path}: not valid UTF-8: {e}") from e

    if format == "csv":
        records = _parse_csv(text, path)
    elif format == "jsonl":
        records = _parse_jsonl(text, path)
    else:
        raise DataError(f"unknown format {format!r} (expected csv or jsonl)")

    if not records:
        raise DataError(f"{path}: empty dataset")

    pairs = []
    for idx, rec in records:
        rec_id = rec.get("id") or f"{language}-{split}-{idx}"
        rec_lang = rec.get("language") or language
        rec_split = rec.get("split") or split
        try:
            post = Post(id=rec_id, language=rec_lang, text=rec["post"], split=rec_split)
            pair = PostClaimPair(
                post=post,
                claim=rec.get("claim", ""),
                recall_score=rec.get("recall_score"),
            )
        except DataError as e:
            raise DataError(f"{path}: row {idx}: {e}") from e
        pairs.append(pair)
    return pairs


def _parse_csv(text: str, path) -> list[tuple[int, dict]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    if "post" not in reader.fieldnames:
        raise DataError(f"{path}: missing required CSV column 'post'")
    records = []
    for idx, row in enumerate(reader):
        if row.get("post") is None:
            raise DataError(f"{path}: row {idx}: missing column 'post'")
        rec = {"post": row["post"], "claim": row.get("normalized claim", "") or ""}
        if row.get("id"):
            rec["id"] = row["id"]
        records.append((idx, rec))
    return records


def _parse_jsonl(text: str, path) -> list[tuple[int, dict]]:
    records = []
    idx = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: line {lineno}: invalid JSON: {e}") from e
        if not isinstance(obj, dict) or "post" not in obj:
            raise DataError(f"{path}: line {lineno}: missing field 'post'")
        rec = {"post": obj["post"], "claim": obj.get("claim", "") or ""}
        for key in ("id", "language", "split", "recall_score"):
            if obj.get(key) is not None:
                rec[key] = obj[key]
        records.append((idx, rec))
        idx += 1
    return records


def save_jsonl(pairs: Iterable[PostClaimPair], path) -> None:
    """Serialize pairs as JSONL with the full record schema."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for p in pairs:
            f.write(json.dumps(pair_to_record(p), ensure_ascii=False) + "\n")


def pair_to_record(pair: PostClaimPair) -> dict:
    return {
        "id": pair.post.id,
        "language": pair.post.language,
        "split": pair.post.split,
        "post": pair.post.text,
        "claim": pair.claim,
        "recall_score": pair.recall_score,
    }


def dataset_stats(pairs: list[PostClaimPair]) -> CorpusStats:
    """Mean whitespace-token lengths over posts and claims.

    Claims absent from every record (test-only data) yield avg_claim_len None,
    matching the "-" entries in zero-shot summary rows.
    """
    if not pairs:
        raise DataError("dataset_stats: empty pair list")
    post_lens = [_whitespace_len(p.post.text) for p in pairs]
    claim_lens = [_whitespace_len(p.claim) for p in pairs if p.claim.strip()]
    avg_claim = sum(claim_lens) / len(claim_lens) if claim_lens else None
    return CorpusStats(
        n_records=len(pairs),
        avg_post_len=sum(post_lens) / len(post_lens),
        avg_claim_len=avg_claim,
    )
