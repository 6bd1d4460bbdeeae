"""Fragment proposal, minimum description length, and greedy library growth.

After each trial the learner proposes contiguous token windows of the scene
programs seen so far (re-tokenized under the current library, so chunks can
nest), scores each candidate extension by an unnormalized log posterior

    score(L) = -w * size(L) - sum_n MDL(scene_n | L)

and adopts the single best strictly-improving fragment, up to a small number
of rounds per trial.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

from . import dsl
from .blockworld import (
    DEFAULT_GEOMETRY,
    BlockPlacement,
    SceneGeometry,
    TowerStimulus,
    empty_grid,
)
from .dsl import EMPTY_LIBRARY, Fragment, Library, Program

PRIMITIVE_COUNT = "primitive_count"
BODY_TOKEN_SUM = "body_token_sum"

SUB_TOWER = "sub_tower"
TOWER = "tower"
SCENE = "scene"
OTHER = "other"
FRAGMENT_LEVELS = (SUB_TOWER, TOWER, SCENE, OTHER)

_CANDIDATE_ID = "candidate"


@dataclass(frozen=True)
class LearningConfig:
    """Library learning knobs; w is the library size penalty from the prior."""

    w: float
    max_fragments_per_trial: int = 3
    size_rule: str = PRIMITIVE_COUNT

    def __post_init__(self) -> None:
        if self.w < 0:
            raise ValueError("w must be nonnegative")
        if self.size_rule not in (PRIMITIVE_COUNT, BODY_TOKEN_SUM):
            raise ValueError(f"unknown size_rule {self.size_rule!r}")


class Adoption(NamedTuple):
    fragment: Fragment
    score_delta: float


def library_size(library: Library, size_rule: str = PRIMITIVE_COUNT) -> int:
    """Library size for the prior: primitive count, or base count plus body lengths."""
    if size_rule == PRIMITIVE_COUNT:
        return dsl.BASE_PRIMITIVE_COUNT + len(library.fragments)
    if size_rule == BODY_TOKEN_SUM:
        return dsl.BASE_PRIMITIVE_COUNT + sum(
            dsl.token_length(f.body) for f in library.fragments)
    raise ValueError(f"unknown size_rule {size_rule!r}")


def fragment_size_cost(body: Program, size_rule: str) -> int:
    return 1 if size_rule == PRIMITIVE_COUNT else dsl.token_length(body)


@lru_cache(maxsize=1 << 18)
def _mdl_cost(sequence: Program, expansions: tuple[Program, ...]) -> int:
    """Suffix DP over token positions; expansions is the sorted tuple of fragment expansions."""
    n = len(sequence)
    # (cost, chunk_count) per position; chunk count breaks ties toward fewer refs.
    best: list[tuple[int, int]] = [(0, 0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        tail = best[i + 1]
        cost = dsl.token_cost(sequence[i]) + tail[0]
        entry = (cost, tail[1])
        for expansion in expansions:
            j = i + len(expansion)
            if j <= n and sequence[i:j] == expansion:
                tail_j = best[j]
                candidate = (1 + tail_j[0], 1 + tail_j[1])
                if candidate < entry:
                    entry = candidate
        best[i] = entry
    return best[0][0]


def mdl(base_sequence: Program, library: Library) -> int:
    """Length in units of the cheapest program over the library that inlines to base_sequence."""
    if any(dsl.is_chunk_ref(t) for t in base_sequence):
        raise ValueError("mdl expects a base-level sequence")
    return _mdl_cost(tuple(base_sequence), tuple(sorted(library.expansions())))


def shortest_tokenization(base_sequence: Program, library: Library) -> Program:
    """A witness program for mdl(); deterministic regardless of fragment ordering.

    Ties prefer fewer chunk references, then the leftmost-longest match.
    """
    sequence = tuple(base_sequence)
    n = len(sequence)
    by_expansion = {f.expansion: f.id for f in library.fragments}
    expansions = sorted(by_expansion)
    best: list[tuple[int, int]] = [(0, 0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        tail = best[i + 1]
        entry = (dsl.token_cost(sequence[i]) + tail[0], tail[1])
        for expansion in expansions:
            j = i + len(expansion)
            if j <= n and sequence[i:j] == expansion:
                tail_j = best[j]
                candidate = (1 + tail_j[0], 1 + tail_j[1])
                if candidate < entry:
                    entry = candidate
        best[i] = entry
    tokens: list[str] = []
    i = 0
    while i < n:
        # Prefer the longest advance that achieves the optimum at this position.
        choice: tuple[int, str] | None = None
        tail = best[i + 1]
        base_entry = (dsl.token_cost(sequence[i]) + tail[0], tail[1])
        if base_entry == best[i]:
            choice = (1, sequence[i])
        for expansion in expansions:
            j = i + len(expansion)
            if j <= n and sequence[i:j] == expansion:
                tail_j = best[j]
                if (1 + tail_j[0], 1 + tail_j[1]) == best[i]:
                    if choice is None or len(expansion) > choice[0]:
                        choice = (len(expansion), by_expansion[expansion])
        assert choice is not None
        tokens.append(choice[1])
        i += choice[0]
    return tuple(tokens)


def _candidate_windows(programs: Iterable[Program], library: Library) -> dict[Program, Program]:
    """All valid contiguous windows, keyed by base expansion, keeping the cheapest body."""
    known = set(library.expansions())
    windows: dict[Program, Program] = {}
    for program in programs:
        n = len(program)
        for i in range(n):
            for j in range(i + 1, n + 1):
                body = program[i:j]
                if dsl.token_length(body) < 2:
                    continue
                expansion = dsl.inline(body, library)
                if dsl.count_placements(expansion) == 0:
                    continue
                if expansion in known:
                    continue
                current = windows.get(expansion)
                if current is None or (dsl.token_length(body), body) < (dsl.token_length(current), current):
                    windows[expansion] = body
    return windows


def propose_fragments(observed: Sequence[Program],
                      library: Library = EMPTY_LIBRARY) -> list[Fragment]:
    """Candidate fragments: contiguous subsequences of the observed base programs.

    A window qualifies if it places at least one block and is at least two
    units long; duplicates (by expansion) collapse and expansions already in
    the library are excluded.
    """
    windows = _candidate_windows(observed, library)
    return [Fragment(_CANDIDATE_ID, body, expansion)
            for expansion, body in sorted(windows.items())]


def library_score(library: Library, scenes: Sequence[Program], cfg: LearningConfig) -> float:
    """Unnormalized log posterior: -w * size(L) - sum of scene MDLs."""
    total = sum(mdl(scene, library) for scene in scenes)
    return -cfg.w * library_size(library, cfg.size_rule) - total


def _count_disjoint(pattern: Program, sequence: Program) -> int:
    """Greedy left-to-right count of non-overlapping occurrences (maximal for fixed length)."""
    count = 0
    i = 0
    n, m = len(sequence), len(pattern)
    while i + m <= n:
        if sequence[i:i + m] == pattern:
            count += 1
            i += m
        else:
            i += 1
    return count


def _next_fragment_id(library: Library) -> str:
    used = set(library.ids())
    n = len(library.fragments) + 1
    while f"chunk{n}" in used:
        n += 1
    return f"chunk{n}"


def update_library_with_log(library: Library, observed: Sequence[Program],
                            cfg: LearningConfig) -> tuple[Library, list[Adoption]]:
    """Greedy per-trial growth; returns the new library and what was adopted."""
    scene_counts = Counter(tuple(p) for p in observed)
    current = library
    adoptions: list[Adoption] = []
    for _ in range(cfg.max_fragments_per_trial):
        expansions_key = tuple(sorted(current.expansions()))
        current_total = sum(count * _mdl_cost(seq, expansions_key)
                            for seq, count in scene_counts.items())
        # Windows come from the base programs and from their rewrites under the
        # current library, so plain subsequences stay proposable while chunks
        # can still nest inside later fragments.
        rewritten = [shortest_tokenization(seq, current) for seq in scene_counts]
        windows = _candidate_windows(list(scene_counts) + rewritten, current)
        best_delta = 0.0
        best: tuple[Program, Program] | None = None
        for expansion in sorted(windows):
            body = windows[expansion]
            size_cost = cfg.w * fragment_size_cost(body, cfg.size_rule)
            occurrences = sum(count * _count_disjoint(expansion, seq)
                              for seq, count in scene_counts.items())
            upper_bound = occurrences * (dsl.token_length(body) - 1)
            if upper_bound <= size_cost:
                continue
            trial_key = tuple(sorted(expansions_key + (expansion,)))
            total = sum(count * _mdl_cost(seq, trial_key)
                        for seq, count in scene_counts.items())
            delta = (current_total - total) - size_cost
            if delta > best_delta:
                best_delta = delta
                best = (expansion, body)
        if best is None:
            break
        expansion, body = best
        fragment = Fragment(_next_fragment_id(current), body, expansion)
        current = current.with_fragment(fragment)
        adoptions.append(Adoption(fragment, best_delta))
    return current, adoptions


def update_library(library: Library, observed: Sequence[Program],
                   cfg: LearningConfig) -> Library:
    """Extend the library with the best strictly-improving fragments, if any."""
    updated, _ = update_library_with_log(library, observed, cfg)
    return updated


def _normalized_configuration(placements: Sequence[BlockPlacement]) -> frozenset[BlockPlacement]:
    if not placements:
        return frozenset()
    min_x = min(b.x for b in placements)
    return frozenset(b.translate(-min_x) for b in placements)


def _execute_relative(expansion: Program) -> frozenset[BlockPlacement] | None:
    """Run a base sequence on a wide empty grid and normalize the result's x origin."""
    grid = empty_grid(width=64, height=32)
    try:
        _, placed = dsl.execute(expansion, EMPTY_LIBRARY, start_x=30, grid=grid)
    except (dsl.ProgramError, ValueError):
        return None
    return _normalized_configuration(placed)


def classify_fragment(fragment: Fragment, stimuli: Sequence[TowerStimulus],
                      geometry: SceneGeometry = DEFAULT_GEOMETRY) -> str:
    """Bucket a fragment by the configuration its expansion builds.

    2-3 placements is sub-tower level; 4 placements that exactly rebuild one
    stimulus is tower level; 8 placements that rebuild a side-by-side pair of
    stimuli is scene level; anything else is other.
    """
    n = dsl.count_placements(fragment.expansion)
    if 2 <= n <= 3:
        return SUB_TOWER
    if n not in (4, 8):
        return OTHER
    config = _execute_relative(fragment.expansion)
    if config is None:
        return OTHER
    if n == 4:
        for tower in stimuli:
            if config == _normalized_configuration(sorted(tower.blocks)):
                return TOWER
        return OTHER
    offset = geometry.right_origin - geometry.left_origin
    for left in stimuli:
        for right in stimuli:
            pair = {b for b in left.blocks} | {b.translate(offset) for b in right.blocks}
            if config == _normalized_configuration(sorted(pair)):
                return SCENE
    return OTHER


def clear_mdl_cache() -> None:
    _mdl_cost.cache_clear()
