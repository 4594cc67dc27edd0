"""Poll trees: questions with weighted answer alternatives and follow-ups.

The weights on a question's alternatives double as the known distribution
that randomized response draws from when a respondent does not answer
truthfully.  One leaf alternative is marked as the measurement target via
``target_path``, a chain of ``(question id, alternative id)`` pairs from the
root.

JSON layout::

    {"id": "q1",
     "alternatives": [{"id": "q1a1", "weight": 0.9, "follow_up": null}, ...],
     "target_path": [["q1", "q1a1"]]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

WEIGHT_SUM_TOL = 1e-9


class PollError(ValueError):
    pass


class PollParseError(PollError):
    """The text is not valid JSON."""


class PollSchemaError(PollError):
    """A required field is missing or has the wrong type."""


class PollValidationError(PollError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid poll: " + "; ".join(self.violations))


@dataclass(frozen=True)
class Alternative:
    id: str
    weight: float
    follow_up: Optional["Question"] = None


@dataclass(frozen=True)
class Question:
    id: str
    alternatives: tuple[Alternative, ...]

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))

    def alternative(self, alt_id: str) -> Alternative:
        for a in self.alternatives:
            if a.id == alt_id:
                return a
        raise KeyError(f"question {self.id!r} has no alternative {alt_id!r}")

    def index_of(self, alt_id: str) -> int:
        for i, a in enumerate(self.alternatives):
            if a.id == alt_id:
                return i
        raise KeyError(f"question {self.id!r} has no alternative {alt_id!r}")

    @property
    def weights(self) -> list[float]:
        return [a.weight for a in self.alternatives]


@dataclass(frozen=True)
class PollTree:
    root: Question
    target_path: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "target_path", tuple((q, a) for q, a in self.target_path))

    def questions(self) -> Iterator[Question]:
        """Depth-first walk over every question, root first."""
        stack = [self.root]
        while stack:
            q = stack.pop()
            yield q
            for a in reversed(q.alternatives):
                if a.follow_up is not None:
                    stack.append(a.follow_up)

    def question(self, qid: str) -> Question:
        for q in self.questions():
            if q.id == qid:
                return q
        raise KeyError(f"no question {qid!r}")

    def chain(self) -> list[tuple[Question, Alternative]]:
        """The questions and alternatives along ``target_path``."""
        out = []
        q: Optional[Question] = self.root
        for qid, aid in self.target_path:
            if q is None or q.id != qid:
                raise PollError(f"target path step {qid!r} is not on the tree")
            alt = q.alternative(aid)
            out.append((q, alt))
            q = alt.follow_up
        return out

    def leaves(self) -> list[tuple[tuple[str, str], ...]]:
        """Every root-to-leaf path as a tuple of (question id, alternative id)."""
        paths = []

        def walk(q: Question, prefix):
            for a in q.alternatives:
                step = prefix + ((q.id, a.id),)
                if a.follow_up is None:
                    paths.append(step)
                else:
                    walk(a.follow_up, step)

        walk(self.root, ())
        return paths

    @property
    def depth(self) -> int:
        return len(self.target_path)


@dataclass(frozen=True)
class ScenarioParams:
    """One setting of the six experiment factors, in actual units."""

    pr_truth: float
    depth: int
    n_alts: int
    target_weight: float
    population: int
    answers_fraction: float

    def __post_init__(self):
        problems = []
        if not 0 <= self.pr_truth <= 1:
            problems.append("pr_truth must be a probability")
        if int(self.depth) != self.depth or self.depth < 1:
            problems.append("depth must be a positive integer")
        if int(self.n_alts) != self.n_alts or self.n_alts < 2:
            problems.append("n_alts must be an integer >= 2")
        if not 0 < self.target_weight < 1:
            problems.append("target_weight must be in (0, 1)")
        if int(self.population) != self.population or self.population < 1:
            problems.append("population must be a positive integer")
        if not 0 < self.answers_fraction < 1:
            problems.append("answers_fraction must be in (0, 1)")
        if problems:
            raise PollError("; ".join(problems))
        object.__setattr__(self, "depth", int(self.depth))
        object.__setattr__(self, "n_alts", int(self.n_alts))
        object.__setattr__(self, "population", int(self.population))

    def to_dict(self) -> dict:
        return {
            "pr_truth": self.pr_truth,
            "depth": self.depth,
            "n_alts": self.n_alts,
            "target_weight": self.target_weight,
            "population": self.population,
            "answers_fraction": self.answers_fraction,
        }


def build_spine_poll(depth: int, n_alts: int, target_weight: float) -> PollTree:
    """Build a chain of ``depth`` questions with ``n_alts`` alternatives each.

    The first alternative of every question is the chain alternative; it has
    weight ``target_weight`` and, except on the last question, the only
    follow-up.  Siblings share the remaining weight uniformly.  The target is
    the chain alternative of the deepest question.
    """
    if int(depth) != depth or depth < 1:
        raise PollError(f"depth must be a positive integer, got {depth}")
    if int(n_alts) != n_alts or n_alts < 2:
        raise PollError(f"n_alts must be an integer >= 2, got {n_alts}")
    if not 0 < target_weight < 1:
        raise PollError(f"target_weight must be in (0, 1), got {target_weight}")
    depth, n_alts = int(depth), int(n_alts)
    sibling_weight = (1.0 - target_weight) / (n_alts - 1)

    follow_up = None
    for level in range(depth, 0, -1):
        qid = f"q{level}"
        alts = [Alternative(f"{qid}a1", target_weight, follow_up)]
        alts += [Alternative(f"{qid}a{j}", sibling_weight) for j in range(2, n_alts + 1)]
        follow_up = Question(qid, alts)
    path = [(f"q{level}", f"q{level}a1") for level in range(1, depth + 1)]
    return PollTree(follow_up, path)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_poll(poll: PollTree) -> ValidationReport:
    """Check the structural invariants; violations are returned, not raised."""
    report = ValidationReport()
    v = report.violations
    seen_ids: set[str] = set()
    seen_nodes: set[int] = set()

    stack = [poll.root]
    while stack:
        q = stack.pop()
        if id(q) in seen_nodes:
            v.append(f"question {q.id!r} reached twice (tree is not acyclic)")
            continue
        seen_nodes.add(id(q))
        if q.id in seen_ids:
            v.append(f"duplicate question id {q.id!r}")
        seen_ids.add(q.id)
        if len(q.alternatives) < 2:
            v.append(f"question {q.id!r} needs at least 2 alternatives")
        alt_ids = [a.id for a in q.alternatives]
        if len(set(alt_ids)) != len(alt_ids):
            v.append(f"question {q.id!r} has duplicate alternative ids")
        for a in q.alternatives:
            if not (isinstance(a.weight, (int, float)) and 0 < a.weight < 1):
                v.append(f"alternative {q.id}/{a.id} weight {a.weight!r} not in (0, 1)")
            if a.follow_up is not None:
                stack.append(a.follow_up)
        total = math.fsum(a.weight for a in q.alternatives)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            v.append(f"question {q.id!r} weights sum to {total!r}, not 1")

    if not poll.target_path:
        v.append("target_path is empty")
        return report
    q: Optional[Question] = poll.root
    for i, (qid, aid) in enumerate(poll.target_path):
        if q is None:
            v.append(f"target_path step {i} ({qid!r}) continues past a leaf")
            break
        if q.id != qid:
            v.append(f"target_path step {i} names {qid!r} but the chain is at {q.id!r}")
            break
        try:
            alt = q.alternative(aid)
        except KeyError:
            v.append(f"target_path step {i}: {qid!r} has no alternative {aid!r}")
            break
        q = alt.follow_up
    else:
        if q is not None:
            v.append("target not a leaf: final target alternative has a follow-up")
    return report


def _question_to_obj(q: Question) -> dict:
    return {
        "id": q.id,
        "alternatives": [
            {"id": a.id, "weight": a.weight,
             "follow_up": None if a.follow_up is None else _question_to_obj(a.follow_up)}
            for a in q.alternatives
        ],
    }


def save_poll(poll: PollTree) -> str:
    obj = _question_to_obj(poll.root)
    obj["target_path"] = [[q, a] for q, a in poll.target_path]
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _require(obj: dict, key: str, types, where: str):
    if not isinstance(obj, dict):
        raise PollSchemaError(f"{where}: expected an object")
    if key not in obj:
        raise PollSchemaError(f"{where}: missing field '{key}'")
    val = obj[key]
    if not isinstance(val, types) or isinstance(val, bool):
        raise PollSchemaError(f"{where}.{key}: wrong type {type(val).__name__}")
    return val


def _question_from_obj(obj, where: str) -> Question:
    qid = _require(obj, "id", str, where)
    alts_obj = _require(obj, "alternatives", list, where)
    alts = []
    for i, a in enumerate(alts_obj):
        aw = f"{where}.alternatives[{i}]"
        aid = _require(a, "id", str, aw)
        weight = float(_require(a, "weight", (int, float), aw))
        fu = a.get("follow_up")
        follow = None if fu is None else _question_from_obj(fu, aw + ".follow_up")
        alts.append(Alternative(aid, weight, follow))
    return Question(qid, alts)


def load_poll(text: str) -> PollTree:
    """Parse poll JSON and validate it.

    Raises PollParseError (with line/column), PollSchemaError (naming the
    field) or PollValidationError (listing every violated invariant).
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise PollParseError(f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    root = _question_from_obj(obj, "$")
    raw_path = _require(obj, "target_path", list, "$")
    path = []
    for i, step in enumerate(raw_path):
        if not (isinstance(step, list) and len(step) == 2 and all(isinstance(s, str) for s in step)):
            raise PollSchemaError(f"$.target_path[{i}]: expected [question id, alternative id]")
        path.append((step[0], step[1]))
    poll = PollTree(root, path)
    report = validate_poll(poll)
    if not report.ok:
        raise PollValidationError(report.violations)
    return poll
