"""Seeded instance generators for testing and benchmarking.

Every generator is deterministic in (kind, params, seed) and emits a game
document string. The random kind draws probabilities on a 1/W grid and
rewards uniformly in [0, R].
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .documents import serialize_game
from .game import make_game

KINDS = ("random", "big-match", "disconnected", "cycle", "ergodic-extension")


def generate(kind: str, params: dict | None = None, seed: int = 0) -> str:
    """Build a game document of the requested kind."""
    params = dict(params or {})
    if kind == "random":
        game = random_game(seed=seed, **params)
    elif kind == "big-match":
        game = big_match()
    elif kind == "disconnected":
        game = disconnected(**params)
    elif kind == "cycle":
        game = cycle(seed=seed, **params)
    elif kind == "ergodic-extension":
        game = ergodic_extension(seed=seed, **params)
    else:
        raise ValueError(f"unknown generator kind {kind!r}; choose from {KINDS}")
    return serialize_game(game)


def _grid_distribution(rng, n: int, granularity: int):
    """Random distribution over up to n states with all masses multiples of 1/W."""
    support_size = int(rng.integers(1, min(n, granularity) + 1))
    support = sorted(rng.choice(n, size=support_size, replace=False).tolist())
    if support_size == 1:
        parts = [granularity]
    else:
        cuts = sorted(rng.choice(np.arange(1, granularity), size=support_size - 1,
                                 replace=False).tolist())
        edges = [0] + cuts + [granularity]
        parts = [edges[i + 1] - edges[i] for i in range(support_size)]
    return {u: Fraction(part, granularity) for u, part in zip(support, parts)}


def random_game(n: int = 4, max_actions: int = 2, granularity: int = 4,
                reward_bound: float = 8.0, seed: int = 0):
    """Random game: per-state action counts in [1, max_actions], transition
    supports on the 1/granularity grid, rewards uniform in [0, reward_bound]."""
    if n < 1 or max_actions < 1 or granularity < 1 or reward_bound < 0:
        raise ValueError("generator parameters must be positive")
    rng = np.random.default_rng(seed)
    states = [f"s{v}" for v in range(n)]
    row_actions = [[f"a{k}" for k in range(int(rng.integers(1, max_actions + 1)))]
                   for _ in range(n)]
    col_actions = [[f"b{l}" for l in range(int(rng.integers(1, max_actions + 1)))]
                   for _ in range(n)]
    records = []
    for v in range(n):
        for k in range(len(row_actions[v])):
            for l in range(len(col_actions[v])):
                dist = _grid_distribution(rng, n, granularity)
                for u, p in dist.items():
                    reward = round(float(rng.uniform(0.0, reward_bound)), 6)
                    records.append((states[v], row_actions[v][k], col_actions[v][l],
                                    states[u], p, reward))
    return make_game(states, row_actions, col_actions, records)


def big_match():
    """One live state with absorbing win/lose exits.

    Stopping at the right moment is everything: the row player's stationary
    strategies cannot recover the history-dependent value, so the absorbing
    states witness non-ergodicity.
    """
    return make_game(
        ["live", "win", "lose"],
        [["dare", "wait"], ["stay"], ["stay"]],
        [["left", "right"], ["stay"], ["stay"]],
        [
            ("live", "dare", "left", "win", 1, 1.0),
            ("live", "dare", "right", "lose", 1, 0.0),
            ("live", "wait", "left", "live", 1, 0.0),
            ("live", "wait", "right", "live", 1, 1.0),
            ("win", "stay", "stay", "win", 1, 1.0),
            ("lose", "stay", "stay", "lose", 1, 0.0),
        ],
    )


def disconnected(low_reward: float = 0.0, high_reward: float = 10.0):
    """Two self-loop states that never interact; values differ by the rewards."""
    return make_game(
        ["low", "high"],
        [["stay"], ["stay"]],
        [["stay"], ["stay"]],
        [
            ("low", "stay", "stay", "low", 1, float(low_reward)),
            ("high", "stay", "stay", "high", 1, float(high_reward)),
        ],
    )


def cycle(n: int = 4, rewards=None, reward_bound: float = 8.0, seed: int = 0):
    """Deterministic single cycle; every start sees the same mean reward."""
    if n < 1:
        raise ValueError("cycle needs at least one state")
    if rewards is None:
        rng = np.random.default_rng(seed)
        rewards = [round(float(rng.uniform(0.0, reward_bound)), 6) for _ in range(n)]
    if len(rewards) != n:
        raise ValueError("need one reward per cycle arc")
    states = [f"c{v}" for v in range(n)]
    records = [
        (states[v], "go", "go", states[(v + 1) % n], 1, float(rewards[v]))
        for v in range(n)
    ]
    return make_game(states, [["go"]] * n, [["go"]] * n, records)


def ergodic_extension(rows: int = 2, cols: int = 2, reward_bound: float = 8.0,
                      seed: int = 0):
    """Play one fixed matrix game forever; the state only records the last
    action pair, so all starting positions share the matrix-game value."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be positive")
    rng = np.random.default_rng(seed)
    base = np.round(rng.uniform(0.0, reward_bound, size=(rows, cols)), 6)
    states = [f"e{k}{l}" for k in range(rows) for l in range(cols)]
    row_actions = [[f"a{k}" for k in range(rows)]] * len(states)
    col_actions = [[f"b{l}" for l in range(cols)]] * len(states)
    records = []
    for s in states:
        for k in range(rows):
            for l in range(cols):
                records.append((s, f"a{k}", f"b{l}", f"e{k}{l}", 1, float(base[k, l])))
    return make_game(states, row_actions, col_actions, records)
