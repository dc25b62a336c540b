"""Claim normalization toolkit: clean, filter, augment, retrieve, infer, score."""

from .augment import FiveW1H, TrainingExample, augment_pairs, build_5w1h_messages, parse_5w1h_response
from .cleaning import dedup_post, filter_pairs, token_recall, tokenize
from .corpus import CorpusStats, Post, PostClaimPair, dataset_stats, load_dataset
from .inference import Prediction, assemble_fewshot_prompt, normalize_batch, normalize_post
from .metrics import MetricReport, bleu4, evaluate_run, meteor, rouge_l, rouge_n
from .retrieval import VectorIndex, cosine, detect_superset, replace_subsets, top_k

__version__ = "0.1.0"
