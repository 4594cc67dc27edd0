"""Randomized-response simulation over poll trees.

Respondents walk the poll from the root.  At each question they report their
true alternative with probability ``pr_truth`` and otherwise draw an
alternative from the question's weights (which may re-draw the true one), so

    P(report a | true a) = p + (1 - p) * w_a.

A respondent whose reported alternative leads to a follow-up that is not on
their true path answers it with a pure weight draw.

Reproducibility: repetition ``r`` of ``run_setting(..., seed=s)`` draws from
``numpy.random.default_rng(SeedSequence([s, r]))`` (PCG64).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .poll import PollError, PollTree, Question, ScenarioParams, build_spine_poll

Path = tuple[tuple[str, str], ...]


class SimulationError(ValueError):
    pass


class DegeneratePopulationError(SimulationError):
    """Target count rounds to zero or to the whole population."""


class NonInvertibleError(SimulationError):
    """pr_truth = 0: reports carry no information about the truth."""


class InsufficientDataError(SimulationError):
    """A question on the target chain received no answers."""


@dataclass(frozen=True)
class Population:
    """Deterministic truth: respondents grouped by their true root-to-leaf path."""

    groups: tuple[tuple[Path, int], ...]
    target_path: Path

    @property
    def size(self) -> int:
        return sum(c for _, c in self.groups)

    @property
    def true_target_count(self) -> int:
        return sum(c for p, c in self.groups if p == self.target_path)

    @property
    def true_fraction(self) -> float:
        return self.true_target_count / self.size

    def assignments(self) -> Iterator[Path]:
        """One true path per respondent, in group order."""
        for path, count in self.groups:
            for _ in range(count):
                yield path


@dataclass
class ResponseTally:
    """Collector's view: per question, answered count and per-alternative counts."""

    counts: dict[str, tuple[int, dict[str, int]]]

    def answered(self, qid: str) -> int:
        return self.counts[qid][0] if qid in self.counts else 0

    def reported(self, qid: str, aid: str) -> int:
        return self.counts[qid][1].get(aid, 0) if qid in self.counts else 0


@dataclass(frozen=True)
class SimulationResult:
    scenario: Optional[ScenarioParams]
    estimates: tuple[float, ...]
    true_fraction: float
    mape: float

    def to_dict(self) -> dict:
        return {
            "scenario": None if self.scenario is None else self.scenario.to_dict(),
            "true_fraction": self.true_fraction,
            "estimates": list(self.estimates),
            "mape": self.mape,
        }


def assign_truth(poll: PollTree, population: int, answers_fraction: float) -> Population:
    """Give ``round(population * answers_fraction)`` respondents the target path.

    Everyone else shares the target chain down to the deepest question and
    is spread as evenly as possible over that question's other alternatives,
    leftovers going to the earlier alternatives.
    """
    if int(population) != population or population < 1:
        raise SimulationError(f"population must be a positive integer, got {population}")
    if not 0 < answers_fraction < 1:
        raise SimulationError(f"answers_fraction must be in (0, 1), got {answers_fraction}")
    population = int(population)
    t = int(math.floor(population * answers_fraction + 0.5))
    if t <= 0 or t >= population:
        raise DegeneratePopulationError(
            f"population {population} with answers {answers_fraction} gives {t} target respondents"
        )
    chain = poll.chain()
    last_q, target_alt = chain[-1]
    prefix = tuple(poll.target_path[:-1])
    siblings = [a for a in last_q.alternatives if a.id != target_alt.id]
    rest = population - t
    base, extra = divmod(rest, len(siblings))
    groups = [(tuple(poll.target_path), t)]
    for i, sib in enumerate(siblings):
        n = base + (1 if i < extra else 0)
        if n:
            groups.append((prefix + ((last_q.id, sib.id),), n))
    return Population(tuple(groups), tuple(poll.target_path))


def response_probabilities(question: Question, true_alt: Optional[str], pr_truth: float) -> np.ndarray:
    """Distribution of the reported alternative for one respondent."""
    w = np.asarray(question.weights, dtype=float)
    if true_alt is None:
        return w / w.sum()
    probs = (1.0 - pr_truth) * w
    probs[question.index_of(true_alt)] += pr_truth
    return probs / probs.sum()


def randomize_one(question: Question, true_alt: Optional[str], rng: np.random.Generator,
                  pr_truth: float) -> str:
    """Report one answer at ``question`` under randomized response."""
    if true_alt is not None and rng.random() < pr_truth:
        return question.alternative(true_alt).id
    w = np.asarray(question.weights, dtype=float)
    return question.alternatives[int(rng.choice(len(w), p=w / w.sum()))].id


def _true_alt(path: Path, qid: str) -> Optional[str]:
    for q, a in path:
        if q == qid:
            return a
    return None


def collect_responses(poll: PollTree, population: Population, pr_truth: float,
                      rng: np.random.Generator, per_respondent: bool = False) -> ResponseTally:
    """Run every respondent through the poll and tally reports per question.

    The default draws one multinomial per (question, true-path group), which
    has the same distribution as answering respondent by respondent; pass
    ``per_respondent=True`` for the literal loop (slow, meant for checks).
    """
    counts: dict[str, tuple[int, dict[str, int]]] = {}

    def add(q: Question, alt_counts) -> None:
        answered, per_alt = counts.setdefault(q.id, (0, {a.id: 0 for a in q.alternatives}))
        for a, c in zip(q.alternatives, alt_counts):
            per_alt[a.id] += int(c)
        counts[q.id] = (answered + int(sum(alt_counts)), per_alt)

    if per_respondent:
        for path in population.assignments():
            q: Optional[Question] = poll.root
            while q is not None:
                aid = randomize_one(q, _true_alt(path, q.id), rng, pr_truth)
                add(q, [1 if a.id == aid else 0 for a in q.alternatives])
                q = q.alternative(aid).follow_up
        return ResponseTally(counts)

    queue: list[tuple[Question, list[tuple[Path, int]]]] = [(poll.root, list(population.groups))]
    while queue:
        q, groups = queue.pop(0)
        forwarded: dict[int, list[tuple[Path, int]]] = {}
        totals = np.zeros(len(q.alternatives), dtype=np.int64)
        for path, n in groups:
            drawn = rng.multinomial(n, response_probabilities(q, _true_alt(path, q.id), pr_truth))
            totals += drawn
            for i, c in enumerate(drawn):
                if c and q.alternatives[i].follow_up is not None:
                    forwarded.setdefault(i, []).append((path, int(c)))
        add(q, totals)
        for i in sorted(forwarded):
            queue.append((q.alternatives[i].follow_up, forwarded[i]))
    return ResponseTally(counts)


def estimate_target(poll: PollTree, tally: ResponseTally, pr_truth: float) -> float:
    """Estimate the target's true fraction from randomized reports.

    Each chain question is inverted on its own, ``(y - (1 - p) w) / p`` with
    ``y`` the reported share of the chain alternative, and the per-question
    estimates are multiplied.  Nothing is clamped, so the estimate can fall
    outside [0, 1].
    """
    if pr_truth <= 0:
        raise NonInvertibleError("pr_truth must be > 0 to invert randomized response")
    estimate = 1.0
    for q, alt in poll.chain():
        answered = tally.answered(q.id)
        if answered < 1:
            raise InsufficientDataError(f"question {q.id!r} on the target chain has no answers")
        y = tally.reported(q.id, alt.id) / answered
        estimate *= (y - (1.0 - pr_truth) * alt.weight) / pr_truth
    return estimate


def mape(true_fraction: float, estimates) -> float:
    """Mean absolute percentage error of ``estimates`` against ``true_fraction``."""
    est = np.asarray(estimates, dtype=float)
    return float(100.0 * np.mean(np.abs(true_fraction - est)) / true_fraction)


def repetition_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(rep)]))


def simulate_poll(poll: PollTree, population: Population, pr_truth: float, n_reps: int,
                  seed: int, scenario: Optional[ScenarioParams] = None) -> SimulationResult:
    """Repeat collection and estimation ``n_reps`` times on a fixed truth.

    A repetition in which no respondent reaches some question of the target
    chain has no report of the target at all and is scored as estimate 0.
    """
    if n_reps < 1:
        raise SimulationError("n_reps must be at least 1")
    if pr_truth <= 0:
        raise NonInvertibleError("pr_truth must be > 0 to invert randomized response")
    estimates = []
    for r in range(n_reps):
        tally = collect_responses(poll, population, pr_truth, repetition_rng(seed, r))
        try:
            estimates.append(estimate_target(poll, tally, pr_truth))
        except InsufficientDataError:
            estimates.append(0.0)
    x_t = population.true_fraction
    return SimulationResult(scenario, tuple(estimates), x_t, mape(x_t, estimates))


def run_setting(scenario: ScenarioParams, n_reps: int = 30, seed: int = 0) -> SimulationResult:
    """Measure MAPE for one factor setting on a generated spine poll."""
    try:
        poll = build_spine_poll(scenario.depth, scenario.n_alts, scenario.target_weight)
    except PollError as e:
        raise SimulationError(str(e)) from e
    population = assign_truth(poll, scenario.population, scenario.answers_fraction)
    return simulate_poll(poll, population, scenario.pr_truth, n_reps, seed, scenario)
