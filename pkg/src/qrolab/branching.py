"""Outcome sampling: seeded Monte-Carlo draws or exhaustive game-tree walks.

Every probabilistic choice in an experiment goes through a chooser object, so
the same experiment function can be run once with a seeded RNG or enumerated
exhaustively over all measurement outcomes.
"""

from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-15


def _clean_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float).reshape(-1)
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if total <= 0.0:
        raise ValueError("all outcome probabilities vanish")
    return p / total


class RandomChooser:
    """Draws branch indices from a seeded numpy Generator, logging each draw."""

    def __init__(self, rng_or_seed):
        if isinstance(rng_or_seed, np.random.Generator):
            self.rng = rng_or_seed
        else:
            self.rng = np.random.default_rng(rng_or_seed)
        self.calls = 0
        self.log: list[tuple[int, int]] = []

    def choose(self, probs) -> int:
        p = _clean_probs(probs)
        outcome = int(self.rng.choice(len(p), p=p))
        self.log.append((self.calls, outcome))
        self.calls += 1
        return outcome

    def choose_uniform(self, count: int) -> int:
        outcome = int(self.rng.integers(count))
        self.log.append((self.calls, outcome))
        self.calls += 1
        return outcome


class ReplayChooser:
    """Follows a scripted branch prefix, then greedily takes the first live branch.

    Records every decision point so the enumerator can schedule the siblings.
    """

    def __init__(self, script: tuple[int, ...], prob_floor: float = PROB_FLOOR):
        self.script = script
        self.prob_floor = prob_floor
        self.taken: list[int] = []
        self.branch_probs: list[np.ndarray] = []
        self.path_prob = 1.0

    def choose(self, probs) -> int:
        p = _clean_probs(probs)
        i = len(self.taken)
        if i < len(self.script):
            outcome = self.script[i]
        else:
            live = np.nonzero(p > self.prob_floor)[0]
            outcome = int(live[0])
        self.taken.append(outcome)
        self.branch_probs.append(p)
        self.path_prob *= float(p[outcome])
        return outcome

    def choose_uniform(self, count: int) -> int:
        return self.choose(np.full(count, 1.0 / count))


def enumerate_paths(run, prob_floor: float = PROB_FLOOR) -> list[tuple[float, object]]:
    """All (probability, result) leaves of run(chooser), pruning branches below prob_floor."""
    out: list[tuple[float, object]] = []
    pending: list[tuple[int, ...]] = [()]
    while pending:
        script = pending.pop()
        ch = ReplayChooser(script, prob_floor)
        result = run(ch)
        out.append((ch.path_prob, result))
        for i in range(len(script), len(ch.taken)):
            probs_i = ch.branch_probs[i]
            prefix = tuple(ch.taken[:i])
            for b in range(len(probs_i)):
                if b != ch.taken[i] and probs_i[b] > prob_floor:
                    pending.append(prefix + (b,))
    return out


def distribution(paths) -> dict:
    """Aggregate (prob, result) leaves into a result -> probability dict."""
    dist: dict = {}
    for p, res in paths:
        dist[res] = dist.get(res, 0.0) + p
    return dist


def enumerate_distribution(run, prob_floor: float = PROB_FLOOR) -> dict:
    return distribution(enumerate_paths(run, prob_floor))
