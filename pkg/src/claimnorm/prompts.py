"""Prompt templates for 5W1H structured claim extraction.

The system prompt instructs the model to answer in the post's own language
and emit strict JSON; the user template carries the post. A minimal
claim-only variant backs the no-reasoning ablation baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

FIVE_W1H_KEYS = ("what", "who", "where", "when", "how", "why", "claim")

SYSTEM_PROMPT_5W1H = """You are an AI assistant that analyzes social media posts to extract factual claims. For each post, you will analyze it using the WH questions framework and extract the main factual claim. Make sure to reflect same language the post is mentioned in. If the post is in Hindi, respond in Hindi. Your output must be valid JSON with the following structure:

{
  "what": "Subject or topic of the post",
  "who": "Key individuals, organizations, or groups mentioned",
  "where": "Location information (if mentioned)",
  "when": "Time information (if mentioned)",
  "how": "Process information (if described)",
  "why": "Reason or motivation information (if explained)",
  "claim": "The single main factual crisp claim made in the post within 10-15 words"
}
If information for a particular field is not available, use an empty string. Also if information is not clearly written, don't assume anything from your end. Always stick to the post, don't add anything from your end. Keep things concise."""

USER_TEMPLATE_5W1H = """Carefully analyze the following social media post and answer each question thoughtfully to identify the main factual claim:

Post: {post}

Please answer each of these questions, based only on what is stated in the post:
1. What is the subject/topic of the post?
2. Who is the post talking about (key individuals, organizations, or groups)?
3. Where is this situation taking place (if mentioned)?
4. When did this situation take place (if mentioned)?
5. How did the situation take place (if described)?
6. Why did the situation take place (if explained)?

After answering these questions, extract the main factual claim being made in the post in a single, clear, concise sentence.

Provide your response in the specified JSON format:
{{
  "what": "...",
  "who": "...",
  "where": "...",
  "when": "...",
  "how": "...",
  "why": "...",
  "claim": "..."
}}"""

# Minimal baseline without structured reasoning, for the ablation harness.
SYSTEM_PROMPT_PLAIN = """You are an AI assistant that extracts factual claims from social media posts. Make sure to reflect same language the post is mentioned in. Your output must be valid JSON with the following structure:

{
  "claim": "The single main factual crisp claim made in the post within 10-15 words"
}
Always stick to the post, don't add anything from your end. Keep things concise."""

USER_TEMPLATE_PLAIN = """Extract the main factual claim being made in the following social media post in a single, clear, concise sentence.

Post: {post}

Provide your response in the specified JSON format:
{{
  "claim": "..."
}}"""


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    expected_format: str = "json_5w1h"

    def __post_init__(self):
        if not self.system or not self.user:
            raise ValueError("PromptBundle: system and user must be non-empty")

    def messages(self) -> list[dict]:
        return [
            {"role": "system", "content": self.system},
            {"role": "user", "content": self.user},
        ]
