"""Conversation triples, question types, vocabulary and id encoding.

A corpus is a sequence of (post, question, answer) triples stored one JSON
object per line with string fields "post", "question" and "answer". Text is
whitespace-tokenized and lowercased on load; the question type is never
stored and always recomputed from the question tokens.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

PAD_ID = 0
UNK_ID = 1
SOS_ID = 2
EOS_ID = 3
RESERVED_TOKENS = ("PAD", "UNK", "SOS", "EOS")
SPECIAL_IDS = frozenset((PAD_ID, SOS_ID, EOS_ID))


class QuestionType(Enum):
    WHAT = 0
    WHEN = 1
    WHERE = 2
    WHO = 3
    WHY = 4
    HOW = 5
    CAN = 6
    DO = 7
    BE = 8


SURFACE_FORMS: dict[QuestionType, tuple[str, ...]] = {
    QuestionType.WHAT: ("what",),
    QuestionType.WHEN: ("when",),
    QuestionType.WHERE: ("where",),
    QuestionType.WHO: ("who",),
    QuestionType.WHY: ("why",),
    QuestionType.HOW: ("how",),
    QuestionType.CAN: ("can", "could"),
    QuestionType.DO: ("do", "did", "does"),
    QuestionType.BE: ("is", "am", "are", "was", "were"),
}

_TOKEN_TO_TYPE = {
    token: qtype for qtype, tokens in SURFACE_FORMS.items() for token in tokens
}


class CorpusFormatError(ValueError):
    """Malformed corpus file; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def classify_question_type(question: Iterable[str]) -> QuestionType:
    """Assign one of the 9 interrogative categories to a token sequence.

    Scans left to right; the earliest token that is an interrogative surface
    form decides the type. Questions with no interrogative token fall back to
    WHAT, the most frequent open-domain category.
    """
    tokens = list(question)
    if not tokens:
        raise ValueError("cannot classify an empty token sequence")
    for token in tokens:
        qtype = _TOKEN_TO_TYPE.get(token)
        if qtype is not None:
            return qtype
    return QuestionType.WHAT


@dataclass
class Triple:
    """One (post, question, answer) conversation unit."""

    post: list[str]
    question: list[str]
    answer: list[str]
    question_type: QuestionType = field(default=None)  # derived when omitted

    def __post_init__(self):
        if not self.post or not self.question or not self.answer:
            raise ValueError("post, question and answer must be non-empty")
        derived = classify_question_type(self.question)
        if self.question_type is None:
            self.question_type = derived
        elif self.question_type != derived:
            raise ValueError(
                f"declared question type {self.question_type} does not match "
                f"derived type {derived}"
            )


class Vocabulary:
    """Token <-> id bijection with reserved PAD/UNK/SOS/EOS ids 0..3."""

    def __init__(self, tokens: Iterable[str]):
        self.id_to_token: list[str] = list(RESERVED_TOKENS)
        for token in tokens:
            if token in RESERVED_TOKENS:
                raise ValueError(f"token {token!r} collides with a reserved token")
            self.id_to_token.append(token)
        self.token_to_id = {tok: i for i, tok in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate token in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        return self.id_to_token[token_id]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            "\n".join(self.id_to_token) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if tuple(lines[:4]) != RESERVED_TOKENS:
            raise ValueError(
                f"vocabulary file must start with {RESERVED_TOKENS}, got {lines[:4]}"
            )
        return cls(lines[4:])


def build_vocabulary(corpus: Iterable[Triple], max_size: int) -> Vocabulary:
    """Keep the `max_size` most frequent tokens over post+question+answer.

    Frequency ties are broken by earlier first occurrence so the result does
    not depend on hash order.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    n_triples = 0
    for triple in corpus:
        n_triples += 1
        for token in triple.post + triple.question + triple.answer:
            counts[token] += 1
            if token not in first_seen:
                first_seen[token] = len(first_seen)
    if n_triples == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts, key=lambda tok: (-counts[tok], first_seen[tok]))
    return Vocabulary(ranked[:max_size])


@dataclass
class EncodedTriple:
    """Fixed-length id encoding: content + EOS, PAD-filled to max_len."""

    post_ids: list[int]
    question_ids: list[int]
    answer_ids: list[int]
    post_len: int
    question_len: int
    answer_len: int
    question_type_id: int


def encode_sentence(
    tokens: list[str], vocab: Vocabulary, max_len: int
) -> tuple[list[int], int]:
    """Truncate to max_len-1 tokens, append EOS, PAD-fill to max_len."""
    ids = [vocab.lookup(tok) for tok in tokens[: max_len - 1]]
    ids.append(EOS_ID)
    length = len(ids)
    ids.extend([PAD_ID] * (max_len - length))
    return ids, length


def encode_triple(triple: Triple, vocab: Vocabulary, max_len: int) -> EncodedTriple:
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    post_ids, post_len = encode_sentence(triple.post, vocab, max_len)
    question_ids, question_len = encode_sentence(triple.question, vocab, max_len)
    answer_ids, answer_len = encode_sentence(triple.answer, vocab, max_len)
    return EncodedTriple(
        post_ids=post_ids,
        question_ids=question_ids,
        answer_ids=answer_ids,
        post_len=post_len,
        question_len=question_len,
        answer_len=answer_len,
        question_type_id=triple.question_type.value,
    )


def decode_ids(ids: Iterable[int], vocab: Vocabulary) -> list[str]:
    """Map ids back to tokens, stopping at EOS and skipping PAD/SOS."""
    tokens = []
    for token_id in ids:
        if token_id == EOS_ID:
            break
        if token_id in (PAD_ID, SOS_ID):
            continue
        tokens.append(vocab.token(token_id))
    return tokens


def load_corpus(path: str | Path) -> Iterator[Triple]:
    """Yield triples from a JSON-lines corpus file in file order."""
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(line_no, "record is not a JSON object")
            for key in ("post", "question", "answer"):
                if key not in record:
                    raise CorpusFormatError(line_no, f"missing field {key!r}")
                if not isinstance(record[key], str):
                    raise CorpusFormatError(line_no, f"field {key!r} is not a string")
            try:
                yield Triple(
                    post=tokenize(record["post"]),
                    question=tokenize(record["question"]),
                    answer=tokenize(record["answer"]),
                )
            except ValueError as exc:
                raise CorpusFormatError(line_no, str(exc)) from exc


def save_corpus(triples: Iterable[Triple], path: str | Path) -> int:
    """Write triples as JSON lines; returns the number of records written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for triple in triples:
            record = {
                "post": " ".join(triple.post),
                "question": " ".join(triple.question),
                "answer": " ".join(triple.answer),
            }
            handle.write(json.dumps(record) + "\n")
            count += 1
    return count
