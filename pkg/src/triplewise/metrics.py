"""Automatic evaluation of generated questions against references.

Implements corpus-level BLEU-1/2 (modified n-gram precision with count
clipping and a brevity penalty, reported as a fraction), the three
embedding similarity scores (Average of mean word vectors, dimension-wise
Extrema, bidirectional Greedy matching), and Dist-1/2 diversity (unique
n-grams over total n-grams). Prediction and reference files hold one
whitespace-tokenized sentence per line; embedding tables use the word2vec
text convention (token followed by space-separated floats, optional
count/dimension header line).
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

Sentence = Sequence[str]


@dataclass
class MetricReport:
    bleu1: float
    bleu2: float
    emb_average: float
    emb_extrema: float
    emb_greedy: float
    dist1: float
    dist2: float
    n_examples: int

    def to_dict(self) -> dict:
        return {
            "bleu1": self.bleu1, "bleu2": self.bleu2,
            "emb_average": self.emb_average, "emb_extrema": self.emb_extrema,
            "emb_greedy": self.emb_greedy, "dist1": self.dist1,
            "dist2": self.dist2, "n_examples": self.n_examples,
        }


def _ngrams(tokens: Sentence, n: int) -> list[tuple]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def bleu_n(candidates: Sequence[Sentence], references: Sequence[Sentence],
           n: int) -> float:
    """Corpus-level BLEU-n in [0, 1], unsmoothed (any zero precision gives 0)."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if not candidates or len(candidates) != len(references):
        raise ValueError("candidates and references must be equal-length, non-empty")
    matches = [0] * n
    totals = [0] * n
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_len += len(cand)
        ref_len += len(ref)
        for k in range(1, n + 1):
            cand_counts = Counter(_ngrams(cand, k))
            ref_counts = Counter(_ngrams(ref, k))
            matches[k - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in cand_counts.items()
            )
            totals[k - 1] += sum(cand_counts.values())
    if cand_len == 0 or any(t == 0 for t in totals):
        return 0.0
    precisions = [m / t for m, t in zip(matches, totals)]
    if any(p == 0.0 for p in precisions):
        return 0.0
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(sum(math.log(p) for p in precisions) / n)


def distinct_n(candidates: Sequence[Sentence], n: int) -> float:
    """Unique n-grams over total n-grams across all candidates."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    grams: list[tuple] = []
    for cand in candidates:
        grams.extend(_ngrams(cand, n))
    if not grams:
        raise ValueError(f"no {n}-grams in candidates")
    return len(set(grams)) / len(grams)


def load_embedding_table(path: str | Path) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split(" ")
            if line_no == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # word2vec count/dim header
                except ValueError:
                    pass
            if len(parts) < 2:
                raise ValueError(f"{path}: line {line_no}: expected token and vector")
            try:
                vector = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
            if dim is None:
                dim = vector.size
            elif vector.size != dim:
                raise ValueError(
                    f"{path}: line {line_no}: dimension {vector.size} != {dim}"
                )
            table[parts[0]] = vector
    if not table:
        raise ValueError(f"{path}: empty embedding table")
    return table


def _cosine(x: np.ndarray, y: np.ndarray) -> float:
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx < 1e-12 or ny < 1e-12:
        return 0.0
    if np.array_equal(x, y):
        return 1.0  # exact, avoids float drift on identity comparisons
    return float(np.dot(x, y) / (nx * ny))


def _known_vectors(sentence: Sentence, table: dict[str, np.ndarray]) -> list[np.ndarray]:
    vectors = []
    for token in sentence:
        vec = table.get(token)
        if vec is not None and np.linalg.norm(vec) >= 1e-12:
            vectors.append(vec)
    return vectors


def _extrema_vector(vectors: list[np.ndarray]) -> np.ndarray:
    stacked = np.stack(vectors)
    vmax = stacked.max(axis=0)
    vmin = stacked.min(axis=0)
    # per dimension keep the value of largest magnitude; on magnitude ties the
    # larger raw maximum wins
    return np.where(np.abs(vmin) > vmax, vmin, vmax)


def _greedy_direction(src: list[np.ndarray], dst: list[np.ndarray]) -> float:
    return float(np.mean([max(_cosine(s, d) for d in dst) for s in src]))


def embedding_metrics(candidates: Sequence[Sentence], references: Sequence[Sentence],
                      table: dict[str, np.ndarray]) -> tuple[float, float, float]:
    """(average, extrema, greedy), each a corpus mean clamped to [0, 1].

    Out-of-vocabulary words fall back to a zero vector, which contributes
    nothing to the mean direction and is excluded from extrema and greedy
    matching; a pair with an empty side after OOV removal scores 0.
    """
    if not candidates or len(candidates) != len(references):
        raise ValueError("candidates and references must be equal-length, non-empty")
    average_scores = []
    extrema_scores = []
    greedy_scores = []
    for cand, ref in zip(candidates, references):
        cand_vecs = _known_vectors(cand, table)
        ref_vecs = _known_vectors(ref, table)
        if not cand_vecs or not ref_vecs:
            average_scores.append(0.0)
            extrema_scores.append(0.0)
            greedy_scores.append(0.0)
            continue
        average_scores.append(_cosine(np.sum(cand_vecs, axis=0), np.sum(ref_vecs, axis=0)))
        extrema_scores.append(_cosine(_extrema_vector(cand_vecs), _extrema_vector(ref_vecs)))
        greedy_scores.append(
            0.5 * (_greedy_direction(cand_vecs, ref_vecs)
                   + _greedy_direction(ref_vecs, cand_vecs))
        )
    clamp = lambda value: min(1.0, max(0.0, value))
    return (
        clamp(float(np.mean(average_scores))),
        clamp(float(np.mean(extrema_scores))),
        clamp(float(np.mean(greedy_scores))),
    )


def read_sentence_file(path: str | Path) -> list[list[str]]:
    with open(path, encoding="utf-8") as handle:
        return [line.split() for line in handle.read().splitlines()]


def evaluate(predictions_path: str | Path, references_path: str | Path,
             embeddings_path: str | Path) -> MetricReport:
    """Score aligned prediction/reference files with the full metric battery."""
    candidates = read_sentence_file(predictions_path)
    references = read_sentence_file(references_path)
    if len(candidates) != len(references):
        raise ValueError(
            f"line count mismatch: {len(candidates)} predictions vs "
            f"{len(references)} references"
        )
    if not candidates:
        raise ValueError("empty prediction file")
    table = load_embedding_table(embeddings_path)
    emb_average, emb_extrema, emb_greedy = embedding_metrics(candidates, references, table)
    return MetricReport(
        bleu1=bleu_n(candidates, references, 1),
        bleu2=bleu_n(candidates, references, 2),
        emb_average=emb_average,
        emb_extrema=emb_extrema,
        emb_greedy=emb_greedy,
        dist1=distinct_n(candidates, 1),
        dist2=distinct_n(candidates, 2),
        n_examples=len(candidates),
    )


def write_report(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> MetricReport:
    return MetricReport(**json.loads(Path(path).read_text(encoding="utf-8")))
