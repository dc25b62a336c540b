"""Self-contained BLEU-4, ROUGE-1/2/L, and METEOR for claim scoring.

All metrics share one tokenizer (lowercase, punctuation split off as
standalone tokens) so scores are reproducible across platforms. Scores are
sentence-level against a single reference and aggregated by arithmetic mean,
matching how ROUGE and METEOR aggregate; this diverges from corpus-level
BLEU and is deliberate.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .errors import DataError
from .stemmer import stem_token

BLEU_EPSILON = 1e-9  # floor for zero n-gram precisions; claims are short
EXACT_ALIGNMENT_MAX_TOKENS = 30

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def metric_tokenize(text: str) -> list[str]:
    """Lowercase tokens with punctuation separated out."""
    return _TOKEN_RE.findall(text.lower())


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _prf(overlap: float, n_cand: float, n_ref: float) -> tuple[float, float, float]:
    p = overlap / n_cand if n_cand else 0.0
    r = overlap / n_ref if n_ref else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def rouge_n(candidate: str, reference: str, n: int) -> tuple[float, float, float]:
    """Clipped n-gram overlap precision/recall/F1 for n in {1, 2}."""
    if n not in (1, 2):
        raise ValueError(f"rouge_n: n must be 1 or 2, got {n}")
    cand = _ngrams(metric_tokenize(candidate), n)
    ref = _ngrams(metric_tokenize(reference), n)
    overlap = sum((cand & ref).values())
    return _prf(overlap, sum(cand.values()), sum(ref.values()))


def _lcs_length(a: list[str], b: list[str]) -> int:
    # single-row DP
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b):
            curr.append(prev[j] + 1 if x == y else max(prev[j + 1], curr[j]))
        prev = curr
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> tuple[float, float, float]:
    """LCS-based precision/recall/F1 over tokens."""
    cand = metric_tokenize(candidate)
    ref = metric_tokenize(reference)
    lcs = _lcs_length(cand, ref) if cand and ref else 0
    return _prf(lcs, len(cand), len(ref))


def bleu4(candidate: str, reference: str) -> float:
    """Sentence BLEU-4 with clipping, brevity penalty, and epsilon smoothing."""
    cand = metric_tokenize(candidate)
    ref = metric_tokenize(reference)
    if not cand:
        return 0.0
    # orders the candidate is too short to populate are skipped entirely so
    # identical short strings still score 1.0; the epsilon floor only covers
    # genuine zero-overlap precisions
    logs = []
    for n in range(1, 5):
        cand_grams = _ngrams(cand, n)
        total = sum(cand_grams.values())
        if total == 0:
            continue
        clipped = sum((cand_grams & _ngrams(ref, n)).values())
        p_n = clipped / total
        logs.append(math.log(p_n if p_n > 0 else BLEU_EPSILON))
    c, r = len(cand), len(ref)
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return bp * math.exp(sum(logs) / len(logs))


@dataclass(frozen=True)
class Alignment:
    """Matched (candidate, reference) position pairs and their chunk count."""

    pairs: tuple[tuple[int, int], ...]
    chunk_count: int


def _match_table(cand: list[str], ref: list[str]) -> list[list[int]]:
    """Compatible reference positions per candidate position.

    A pair is compatible on exact surface match or on stem equality
    (Porter stems for Latin-script tokens, identity otherwise).
    """
    ref_stems = [stem_token(t) for t in ref]
    table = []
    for tok in cand:
        s = stem_token(tok)
        table.append([j for j in range(len(ref)) if tok == ref[j] or s == ref_stems[j]])
    return table


def _count_chunks(pairs: tuple[tuple[int, int], ...]) -> int:
    if not pairs:
        return 0
    chunks = 1
    for (c0, r0), (c1, r1) in zip(pairs, pairs[1:]):
        if c1 != c0 + 1 or r1 != r0 + 1:
            chunks += 1
    return chunks


def _align_exact(table: list[list[int]], n_ref: int) -> Alignment:
    """Max-cardinality alignment minimizing chunk count, by pruned search."""
    n_cand = len(table)
    best: dict = {"matches": -1, "chunks": 0, "pairs": ()}
    used = [False] * n_ref

    def recurse(i, matches, chunks, prev_c, prev_r, pairs):
        remaining = n_cand - i
        if matches + remaining < best["matches"]:
            return
        if i == n_cand:
            if matches > best["matches"] or (
                matches == best["matches"] and chunks < best["chunks"]
            ):
                best.update(matches=matches, chunks=chunks, pairs=tuple(pairs))
            return
        for j in table[i]:
            if used[j]:
                continue
            used[j] = True
            new_chunks = chunks + (0 if (prev_c == i - 1 and prev_r == j - 1) else 1)
            pairs.append((i, j))
            recurse(i + 1, matches + 1, new_chunks, i, j, pairs)
            pairs.pop()
            used[j] = False
        recurse(i + 1, matches, chunks, prev_c, prev_r, pairs)

    recurse(0, 0, 0, -2, -2, [])
    return Alignment(pairs=best["pairs"], chunk_count=best["chunks"])


def _align_greedy(table: list[list[int]], n_ref: int) -> Alignment:
    """Contiguity-preferring left-to-right matching for long inputs."""
    used = [False] * n_ref
    pairs = []
    prev_r = -2
    for i, options in enumerate(table):
        free = [j for j in options if not used[j]]
        if not free:
            continue
        j = prev_r + 1 if prev_r + 1 in free else free[0]
        used[j] = True
        pairs.append((i, j))
        prev_r = j
    return Alignment(pairs=tuple(pairs), chunk_count=_count_chunks(tuple(pairs)))


def align_tokens(cand: list[str], ref: list[str]) -> Alignment:
    table = _match_table(cand, ref)
    if len(cand) <= EXACT_ALIGNMENT_MAX_TOKENS and len(ref) <= EXACT_ALIGNMENT_MAX_TOKENS:
        return _align_exact(table, len(ref))
    return _align_greedy(table, len(ref))


def meteor(candidate: str, reference: str) -> float:
    """METEOR with exact + stem match stages and fragmentation penalty.

    Fmean = 10PR / (R + 9P); penalty = 0.5 * (chunks / matches)^3.
    The synonym match stage is not implemented (no lexical database);
    see ExternalScorer hooks for plugging richer scorers into reports.
    """
    cand = metric_tokenize(candidate)
    ref = metric_tokenize(reference)
    if not cand or not ref:
        return 0.0
    alignment = align_tokens(cand, ref)
    m = len(alignment.pairs)
    if m == 0:
        return 0.0
    p = m / len(cand)
    r = m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (alignment.chunk_count / m) ** 3
    return fmean * (1 - penalty)


@dataclass(frozen=True)
class ScoredPair:
    prediction: str
    reference: str
    rouge1: tuple[float, float, float]
    rouge2: tuple[float, float, float]
    rougeL: tuple[float, float, float]
    bleu4: float
    meteor: float


def score_pair(prediction: str, reference: str) -> ScoredPair:
    return ScoredPair(
        prediction=prediction,
        reference=reference,
        rouge1=rouge_n(prediction, reference, 1),
        rouge2=rouge_n(prediction, reference, 2),
        rougeL=rouge_l(prediction, reference),
        bleu4=bleu4(prediction, reference),
        meteor=meteor(prediction, reference),
    )


@dataclass
class MetricReport:
    language: str
    n: int
    n_missing: int
    rouge1: tuple[float, float, float]
    rouge2: tuple[float, float, float]
    rougeL: tuple[float, float, float]
    bleu4: float
    meteor: float
    external: Optional[float] = None  # e.g. precomputed BERTScore mean

    def to_dict(self) -> dict:
        def block(prf):
            return {"P": _pct(prf[0]), "R": _pct(prf[1]), "F1": _pct(prf[2])}

        out = {
            "language": self.language,
            "n": self.n,
            "n_missing": self.n_missing,
            "rouge1": block(self.rouge1),
            "rouge2": block(self.rouge2),
            "rougeL": block(self.rougeL),
            "bleu4": _pct(self.bleu4),
            "meteor": _pct(self.meteor),
        }
        if self.external is not None:
            out["external"] = _pct(self.external)
        return out


def _pct(x: float) -> float:
    return round(100 * x, 2)


def evaluate_run(
    predictions,
    references,
    language: str,
    external_scores: Optional[dict[str, float]] = None,
) -> MetricReport:
    """Score predictions against gold claims and aggregate per language.

    ``predictions`` are objects with ``post_id`` and ``claim`` attributes (or
    (id, claim) tuples). Missing predictions score 0 on every metric and are
    counted in ``n_missing``; dead letters (empty claims) count as missing.
    """
    pred_map: dict[str, str] = {}
    for p in predictions:
        pid, claim = (p if isinstance(p, tuple) else (p.post_id, p.claim))
        if pid in pred_map:
            raise DataError(f"duplicate prediction id {pid!r}")
        pred_map[pid] = claim

    ref_ids = {pair.post.id for pair in references}
    unknown = set(pred_map) - ref_ids
    if unknown:
        raise DataError(f"predictions for unknown ids: {sorted(unknown)[:5]}")

    sums = {"r1": [0.0] * 3, "r2": [0.0] * 3, "rL": [0.0] * 3, "bleu": 0.0, "met": 0.0}
    n_missing = 0
    ext_sum, ext_n = 0.0, 0
    for pair in references:
        claim = pred_map.get(pair.post.id, "")
        if not claim.strip():
            n_missing += 1
            continue
        scored = score_pair(claim, pair.claim)
        for key, prf in (("r1", scored.rouge1), ("r2", scored.rouge2), ("rL", scored.rougeL)):
            for i in range(3):
                sums[key][i] += prf[i]
        sums["bleu"] += scored.bleu4
        sums["met"] += scored.meteor
        if external_scores and pair.post.id in external_scores:
            ext_sum += external_scores[pair.post.id]
            ext_n += 1

    n = len(references)
    if n == 0:
        raise DataError("evaluate_run: no references")

    def mean3(key):
        return tuple(v / n for v in sums[key])

    return MetricReport(
        language=language,
        n=n,
        n_missing=n_missing,
        rouge1=mean3("r1"),
        rouge2=mean3("r2"),
        rougeL=mean3("rL"),
        bleu4=sums["bleu"] / n,
        meteor=sums["met"] / n,
        external=(ext_sum / ext_n) if ext_n else None,
    )


_TABLE_HEADER = (
    f"{'':<24}{'ROUGE-1':>21}{'ROUGE-2':>21}{'ROUGE-L':>21}"
    f"{'BLEU-4':>8}{'METEOR':>8}{'EXT':>8}\n"
    f"{'Language':<24}" + f"{'P':>7}{'R':>7}{'F1':>7}" * 3 + f"{'':>8}{'':>8}{'':>8}"
)


def format_report_row(report: MetricReport, label: Optional[str] = None) -> str:
    cells = [f"{label or report.language:<24}"]
    for prf in (report.rouge1, report.rouge2, report.rougeL):
        cells += [f"{_pct(v):>7.2f}" for v in prf]
    cells.append(f"{_pct(report.bleu4):>8.2f}")
    cells.append(f"{_pct(report.meteor):>8.2f}")
    cells.append(f"{_pct(report.external):>8.2f}" if report.external is not None else f"{'-':>8}")
    return "".join(cells)


def format_report_table(reports: list[MetricReport], labels: Optional[list[str]] = None) -> str:
    labels = labels or [r.language for r in reports]
    rows = [format_report_row(r, lab) for r, lab in zip(reports, labels)]
    return "\n".join([_TABLE_HEADER] + rows)


def load_external_scores(path) -> dict[str, float]:
    """Read a JSONL file of {"id": ..., "score": ...} records (scores in [0,1])."""
    scores = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                scores[str(obj["id"])] = float(obj["score"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise DataError(f"{path}: line {lineno}: bad external score: {e}") from e
    return scores
