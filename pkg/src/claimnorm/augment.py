"""5W1H reasoning augmentation of filtered post-claim pairs via an LLM.

Each pair gets a structured What/Who/Where/When/How/Why record generated by
the model; the gold claim stays as the supervision target while the six
reasoning fields come from the model. Failures after retries land in a
dead-letter list instead of aborting the run.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .corpus import Post, PostClaimPair
from .errors import ParseError, SchemaError, ServiceError
from .prompts import (
    FIVE_W1H_KEYS,
    SYSTEM_PROMPT_5W1H,
    USER_TEMPLATE_5W1H,
    PromptBundle,
)

logger = logging.getLogger(__name__)

PARSE_RETRY_ATTEMPTS = 3
DEAD_LETTER_CEILING = 0.10
CLAIM_WORD_RANGE = (10, 15)  # soft bound from the prompt; warning only


@dataclass(frozen=True)
class FiveW1H:
    what: str = ""
    who: str = ""
    where: str = ""
    when: str = ""
    how: str = ""
    why: str = ""
    claim: str = ""

    def __post_init__(self):
        if not self.claim.strip():
            raise SchemaError("claim", "FiveW1H: claim must be non-empty")
        n_words = len(self.claim.split())
        if not CLAIM_WORD_RANGE[0] <= n_words <= CLAIM_WORD_RANGE[1]:
            logger.warning(
                "claim length %d words outside soft %d-%d bound: %r",
                n_words, *CLAIM_WORD_RANGE, self.claim[:80],
            )

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in FIVE_W1H_KEYS}


@dataclass(frozen=True)
class TrainingExample:
    pair: PostClaimPair
    reasoning: FiveW1H
    provenance: str = "llm"  # llm | cached | manual


@dataclass(frozen=True)
class DeadLetter:
    pair: PostClaimPair
    error: str


def build_5w1h_messages(post_text: str) -> PromptBundle:
    """Render the 5W1H system/user prompt pair for one post."""
    if not post_text:
        raise ValueError("build_5w1h_messages: empty post text")
    return PromptBundle(
        system=SYSTEM_PROMPT_5W1H,
        user=USER_TEMPLATE_5W1H.format(post=post_text),
    )


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _balanced_json_objects(text: str):
    """Yield balanced top-level {...} spans, string-aware."""
    depth = 0
    start = None
    in_string = False
    escape = False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0:
                    yield text[start : i + 1]


def extract_json_object(raw: str) -> dict:
    """First parseable JSON object in the text, fence- and prose-tolerant."""
    candidates = []
    for fenced in _FENCE_RE.findall(raw):
        candidates.extend(_balanced_json_objects(fenced))
    candidates.extend(_balanced_json_objects(raw))
    for cand in candidates:
        try:
            obj = json.loads(cand)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise ParseError(f"no JSON object found in response: {raw[:120]!r}")


def parse_5w1h_response(raw: str) -> FiveW1H:
    """Extract and validate a FiveW1H record from a raw model response."""
    obj = extract_json_object(raw)
    fields = {}
    # claim first: it is the one field that can never be defaulted
    for key in ("claim",) + tuple(k for k in FIVE_W1H_KEYS if k != "claim"):
        if key not in obj:
            raise SchemaError(key)
        value = obj[key]
        fields[key] = "" if value is None else str(value)
    return FiveW1H(**fields)


def serialize_5w1h(record: FiveW1H) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False)


def _augment_one(pair: PostClaimPair, llm) -> FiveW1H:
    bundle = build_5w1h_messages(pair.post.text)
    last_error: Exception | None = None
    for attempt in range(PARSE_RETRY_ATTEMPTS):
        try:
            # first attempt may hit the cache; parse retries force a fresh
            # sample to exploit decoding nondeterminism
            raw = llm.complete(bundle.system, bundle.user, use_cache=(attempt == 0))
            return parse_5w1h_response(raw)
        except (ParseError, SchemaError) as e:
            last_error = e
        except ServiceError as e:
            last_error = e
            break  # transport retries already happened inside the client
    raise ServiceError(f"pair {pair.post.id!r}: {last_error}")


def augment_pairs(
    pairs: list[PostClaimPair],
    llm,
    concurrency: int = 4,
    keep_gold_claim: bool = True,
) -> tuple[list[TrainingExample], list[DeadLetter]]:
    """Attach 5W1H reasoning to every pair, preserving input order.

    The gold claim replaces the model's claim field for training data; the
    six reasoning fields are kept from the model. A dead-letter rate above
    10% aborts the run.
    """
    results: list[Optional[TrainingExample]] = [None] * len(pairs)
    dead: list[Optional[DeadLetter]] = [None] * len(pairs)

    def work(idx: int):
        pair = pairs[idx]
        try:
            reasoning = _augment_one(pair, llm)
        except ServiceError as e:
            dead[idx] = DeadLetter(pair=pair, error=str(e))
            return
        if keep_gold_claim and pair.claim.strip():
            reasoning = replace(reasoning, claim=pair.claim)
        results[idx] = TrainingExample(pair=pair, reasoning=reasoning)

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        list(pool.map(work, range(len(pairs))))

    examples = [ex for ex in results if ex is not None]
    dead_letters = [d for d in dead if d is not None]
    if pairs and len(dead_letters) / len(pairs) > DEAD_LETTER_CEILING:
        raise ServiceError(
            f"dead-letter rate {len(dead_letters)}/{len(pairs)} exceeds "
            f"{DEAD_LETTER_CEILING:.0%} ceiling"
        )
    return examples, dead_letters


def save_examples(examples: list[TrainingExample], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for ex in examples:
            f.write(json.dumps({
                "id": ex.pair.post.id,
                "language": ex.pair.post.language,
                "split": ex.pair.post.split,
                "post": ex.pair.post.text,
                "claim": ex.pair.claim,
                "recall_score": ex.pair.recall_score,
                "reasoning": ex.reasoning.to_dict(),
                "provenance": ex.provenance,
            }, ensure_ascii=False) + "\n")


def load_examples(path) -> list[TrainingExample]:
    examples = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            post = Post(
                id=obj["id"], language=obj["language"],
                text=obj["post"], split=obj["split"],
            )
            pair = PostClaimPair(
                post=post, claim=obj.get("claim", ""),
                recall_score=obj.get("recall_score"),
            )
            reasoning = FiveW1H(**obj["reasoning"])
            examples.append(TrainingExample(
                pair=pair, reasoning=reasoning,
                provenance=obj.get("provenance", "llm"),
            ))
    return examples
