"""Retrieval-augmented few-shot claim generation for unseen posts.

For each post, the most similar training posts (by embedding cosine) are
rendered in-context as worked 5W1H examples, followed by the target post.
Shots render in descending-similarity order; ``most_similar_last`` flips
them so the closest example sits adjacent to the target.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .augment import (
    FiveW1H,
    TrainingExample,
    build_5w1h_messages,
    parse_5w1h_response,
    serialize_5w1h,
)
from .corpus import Post
from .errors import ParseError, SchemaError, ServiceError
from .prompts import (
    SYSTEM_PROMPT_5W1H,
    SYSTEM_PROMPT_PLAIN,
    USER_TEMPLATE_5W1H,
    USER_TEMPLATE_PLAIN,
    PromptBundle,
)
from .retrieval import VectorIndex, embed_texts

PARSE_RETRY_ATTEMPTS = 3
DEFAULT_FAILURE_CEILING = 0.10
MAX_SHOTS = 5


@dataclass(frozen=True)
class FewShotExample:
    post_text: str
    reasoning: FiveW1H


@dataclass(frozen=True)
class Prediction:
    post_id: str
    claim: str
    model: str
    reasoning: Optional[FiveW1H] = None
    retrieved_ids: tuple[str, ...] = ()
    dead_letter: bool = False
    error: str = ""


@dataclass
class RunReport:
    n_posts: int = 0
    n_success: int = 0
    n_dead_letters: int = 0
    n_cache_hits: int = 0
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def assemble_fewshot_prompt(
    post_text: str,
    shots: list[FewShotExample],
    most_similar_last: bool = False,
) -> PromptBundle:
    """Render shots plus the target post into one user message.

    ``shots`` arrive in descending-similarity order and render in that
    order unless ``most_similar_last`` reverses them.
    """
    if len(shots) > MAX_SHOTS:
        raise ValueError(f"at most {MAX_SHOTS} shots supported, got {len(shots)}")
    if not shots:
        return build_5w1h_messages(post_text)
    ordered = list(reversed(shots)) if most_similar_last else list(shots)
    parts = []
    for shot in ordered:
        parts.append(USER_TEMPLATE_5W1H.format(post=shot.post_text))
        parts.append(serialize_5w1h(shot.reasoning))
    parts.append(USER_TEMPLATE_5W1H.format(post=post_text))
    return PromptBundle(system=SYSTEM_PROMPT_5W1H, user="\n\n".join(parts))


def assemble_plain_prompt(post_text: str) -> PromptBundle:
    """Claim-only baseline prompt without 5W1H reasoning (ablation variant)."""
    return PromptBundle(
        system=SYSTEM_PROMPT_PLAIN,
        user=USER_TEMPLATE_PLAIN.format(post=post_text),
        expected_format="json_claim",
    )


def _parse_claim_only(raw: str) -> str:
    from .augment import extract_json_object

    obj = extract_json_object(raw)
    claim = str(obj.get("claim") or "")
    if not claim.strip():
        raise SchemaError("claim")
    return claim


def _complete_with_parse_retries(llm, bundle: PromptBundle, counters: Optional[RunReport]):
    last_error: Exception | None = None
    for attempt in range(PARSE_RETRY_ATTEMPTS):
        cached = False
        if attempt == 0 and llm.cache is not None:
            cached = llm.cache.get(llm.cache_key(bundle.system, bundle.user)) is not None
        try:
            raw = llm.complete(bundle.system, bundle.user, use_cache=(attempt == 0))
            if bundle.expected_format == "json_claim":
                result = (_parse_claim_only(raw), None)
            else:
                parsed = parse_5w1h_response(raw)
                result = (parsed.claim, parsed)
            if cached and counters is not None:
                counters.n_cache_hits += 1
            return result
        except (ParseError, SchemaError) as e:
            last_error = e
        except ServiceError as e:
            last_error = e
            break
    raise ServiceError(str(last_error))


def normalize_post(
    post: Post,
    index: Optional[VectorIndex],
    examples: dict[str, TrainingExample],
    llm,
    embedder,
    k: int = 5,
    use_reasoning: bool = True,
    use_fewshot: bool = True,
    most_similar_last: bool = False,
    report: Optional[RunReport] = None,
) -> Prediction:
    """Embed, retrieve, prompt, and parse one post into a Prediction."""
    retrieved: list[str] = []
    shots: list[FewShotExample] = []
    if use_fewshot and index is not None and len(index) > 0:
        query = embed_texts([post.text], embedder)[0]
        for res in index.top_k(query, k=k, exclude=post.id):
            ex = examples.get(res.id)
            if ex is None:
                continue
            retrieved.append(res.id)
            shots.append(FewShotExample(post_text=ex.pair.post.text, reasoning=ex.reasoning))

    if use_reasoning:
        bundle = assemble_fewshot_prompt(post.text, shots, most_similar_last)
    else:
        bundle = assemble_plain_prompt(post.text)

    try:
        claim, reasoning = _complete_with_parse_retries(llm, bundle, report)
    except ServiceError as e:
        return Prediction(
            post_id=post.id, claim="", model=llm.model,
            retrieved_ids=tuple(retrieved), dead_letter=True, error=str(e),
        )
    return Prediction(
        post_id=post.id, claim=claim, model=llm.model,
        reasoning=reasoning, retrieved_ids=tuple(retrieved),
    )


def normalize_batch(
    posts: list[Post],
    index: Optional[VectorIndex],
    examples: dict[str, TrainingExample],
    llm,
    embedder,
    k: int = 5,
    use_reasoning: bool = True,
    use_fewshot: bool = True,
    most_similar_last: bool = False,
    concurrency: int = 4,
    failure_ceiling: float = DEFAULT_FAILURE_CEILING,
) -> tuple[list[Prediction], RunReport]:
    """Normalize a batch of posts, order-preserving and cache-resumable."""
    report = RunReport(n_posts=len(posts))
    start = time.monotonic()
    results: list[Optional[Prediction]] = [None] * len(posts)

    def work(idx: int):
        results[idx] = normalize_post(
            posts[idx], index, examples, llm, embedder,
            k=k, use_reasoning=use_reasoning, use_fewshot=use_fewshot,
            most_similar_last=most_similar_last, report=report,
        )

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        list(pool.map(work, range(len(posts))))

    predictions = [p for p in results if p is not None]
    report.n_dead_letters = sum(1 for p in predictions if p.dead_letter)
    report.n_success = len(predictions) - report.n_dead_letters
    report.wall_time_s = time.monotonic() - start
    if posts and report.n_dead_letters / len(posts) > failure_ceiling:
        raise ServiceError(
            f"failure rate {report.n_dead_letters}/{len(posts)} exceeds "
            f"ceiling {failure_ceiling:.0%}"
        )
    return predictions, report


def save_predictions(predictions: list[Prediction], csv_path, jsonl_path) -> None:
    """Leaderboard-shaped CSV plus a JSONL twin with full details."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with csv_path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "normalized claim"])
        for p in predictions:
            writer.writerow([p.post_id, p.claim])
    jsonl_path = Path(jsonl_path)
    with jsonl_path.open("w", encoding="utf-8") as f:
        for p in predictions:
            f.write(json.dumps({
                "id": p.post_id,
                "claim": p.claim,
                "model": p.model,
                "reasoning": p.reasoning.to_dict() if p.reasoning else None,
                "retrieved_ids": list(p.retrieved_ids),
                "dead_letter": p.dead_letter,
                "error": p.error,
            }, ensure_ascii=False) + "\n")


def load_predictions(jsonl_path) -> list[Prediction]:
    predictions = []
    with open(jsonl_path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            reasoning = FiveW1H(**obj["reasoning"]) if obj.get("reasoning") else None
            predictions.append(Prediction(
                post_id=obj["id"], claim=obj.get("claim", ""),
                model=obj.get("model", ""), reasoning=reasoning,
                retrieved_ids=tuple(obj.get("retrieved_ids", [])),
                dead_letter=obj.get("dead_letter", False),
                error=obj.get("error", ""),
            ))
    return predictions
