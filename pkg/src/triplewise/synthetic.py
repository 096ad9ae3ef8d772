"""Deterministic synthetic corpus generator for desk-scale experiments.

Triples are produced from a fixed, versioned template grammar (grammar.json).
Each scene pairs a slot-filled post template with several answer topics, and
every topic offers at least two question phrasings, so the generated corpus
has one-to-many structure in both the post-question and question-answer
directions: triples are emitted in pairs that share a post string but carry
distinct questions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .data import QuestionType, Triple, classify_question_type

GRAMMAR_VOCAB_LIMIT = 200


class GrammarError(ValueError):
    pass


@dataclass
class QuestionTemplate:
    tokens: list[str]
    qtype: QuestionType


@dataclass
class Topic:
    name: str
    questions: list[QuestionTemplate]
    answers: list[list[str]]


@dataclass
class Scene:
    name: str
    post: list[str]
    topics: list[Topic]

    def question_texts(self) -> list[tuple[int, QuestionTemplate]]:
        """All (topic index, question) pairs of the scene."""
        return [(i, q) for i, t in enumerate(self.topics) for q in t.questions]


@dataclass
class Grammar:
    version: int
    scenes: list[Scene]
    slots: dict[str, list[str]]

    def word_types(self) -> set[str]:
        """Every surface word the grammar can emit."""
        words: set[str] = set()
        for values in self.slots.values():
            words.update(values)
        for scene in self.scenes:
            words.update(tok for tok in scene.post if not _is_slot(tok))
            for topic in scene.topics:
                for question in topic.questions:
                    words.update(question.tokens)
                for answer in topic.answers:
                    words.update(tok for tok in answer if not _is_slot(tok))
        return words


def _is_slot(token: str) -> bool:
    return token.startswith("{") and token.endswith("}")


def _validate(grammar: Grammar) -> Grammar:
    covered: set[QuestionType] = set()
    for scene in grammar.scenes:
        if len(scene.question_texts()) < 2:
            raise GrammarError(f"scene {scene.name!r} admits fewer than 2 questions")
        for template in [scene.post] + [a for t in scene.topics for a in t.answers]:
            for token in template:
                if _is_slot(token) and token[1:-1] not in grammar.slots:
                    raise GrammarError(f"unknown slot {token} in scene {scene.name!r}")
        for topic in scene.topics:
            if len({" ".join(q.tokens) for q in topic.questions}) < 2:
                raise GrammarError(
                    f"topic {scene.name}/{topic.name} needs >= 2 distinct phrasings"
                )
            for question in topic.questions:
                derived = classify_question_type(question.tokens)
                if derived != question.qtype:
                    raise GrammarError(
                        f"question {' '.join(question.tokens)!r} declares "
                        f"{question.qtype} but classifies as {derived}"
                    )
                covered.add(question.qtype)
    missing = set(QuestionType) - covered
    if missing:
        raise GrammarError(f"grammar covers no question of type(s) {missing}")
    n_words = len(grammar.word_types())
    if n_words > GRAMMAR_VOCAB_LIMIT:
        raise GrammarError(f"grammar vocabulary {n_words} exceeds {GRAMMAR_VOCAB_LIMIT}")
    return grammar


@lru_cache(maxsize=1)
def load_grammar() -> Grammar:
    raw = json.loads(
        resources.files("triplewise").joinpath("grammar.json").read_text("utf-8")
    )
    slots: dict[str, list[str]] = dict(raw["shared_slots"])
    scenes = []
    for scene_raw in raw["scenes"]:
        for name, values in scene_raw.get("slots", {}).items():
            if name in slots and slots[name] != values:
                raise GrammarError(f"slot {name!r} redefined with different values")
            slots[name] = values
        topics = [
            Topic(
                name=topic_raw["name"],
                questions=[
                    QuestionTemplate(
                        tokens=q["text"].split(),
                        qtype=QuestionType[q["type"].upper()],
                    )
                    for q in topic_raw["questions"]
                ],
                answers=[a.split() for a in topic_raw["answers"]],
            )
            for topic_raw in scene_raw["topics"]
        ]
        scenes.append(Scene(name=scene_raw["name"], post=scene_raw["post"].split(), topics=topics))
    return _validate(Grammar(version=int(raw["version"]), scenes=scenes, slots=slots))


def _instantiate(template: list[str], slots: dict[str, list[str]], rng) -> list[str]:
    out = []
    for token in template:
        if _is_slot(token):
            values = slots[token[1:-1]]
            out.append(values[rng.integers(len(values))])
        else:
            out.append(token)
    return out


def _pick_question(
    scene: Scene, rng, exclude: set[str]
) -> tuple[Topic, QuestionTemplate]:
    candidates = [
        (topic_idx, q)
        for topic_idx, q in scene.question_texts()
        if " ".join(q.tokens) not in exclude
    ]
    topic_idx, question = candidates[rng.integers(len(candidates))]
    return scene.topics[topic_idx], question


def generate_synthetic_corpus(seed: int, n_triples: int) -> list[Triple]:
    """Emit n_triples deterministic triples from the template grammar.

    Triples come in pairs sharing one post instantiation with two distinct
    questions; an odd trailing triple extends the last post with a third
    distinct question, so every post string in a corpus of size >= 2 carries
    at least two different questions.
    """
    if n_triples < 1:
        raise ValueError("n_triples must be >= 1")
    grammar = load_grammar()
    rng = np.random.default_rng(seed)
    triples: list[Triple] = []
    last_scene: Scene | None = None
    last_post: list[str] | None = None
    used_questions: set[str] = set()
    while len(triples) < n_triples:
        scene = grammar.scenes[rng.integers(len(grammar.scenes))]
        post = _instantiate(scene.post, grammar.slots, rng)
        remaining = n_triples - len(triples)
        if remaining == 1 and last_post is not None:
            # odd tail: reuse the previous post with a third distinct question
            topic, question = _pick_question(last_scene, rng, used_questions)
            answer = _instantiate(
                topic.answers[rng.integers(len(topic.answers))], grammar.slots, rng
            )
            triples.append(Triple(list(last_post), list(question.tokens), answer))
            break
        used_questions = set()
        n_here = min(2, remaining)
        for _ in range(n_here):
            topic, question = _pick_question(scene, rng, used_questions)
            used_questions.add(" ".join(question.tokens))
            answer = _instantiate(
                topic.answers[rng.integers(len(topic.answers))], grammar.slots, rng
            )
            triples.append(Triple(list(post), list(question.tokens), answer))
        last_scene, last_post = scene, post
    return triples
