"""Architect and Builder agents.

Words for base primitives share their token surface ("h", "v", "l3", ...) and
are unambiguous. Each learned fragment mints one synthetic word ("chunkA",
"chunkB", ...); neither agent knows the other's word-to-fragment mapping, so
the Architect tracks a distribution over all bijections between the current
synthetic words and fragments, updating it from the Builder's visible block
placements.

The belief is stored in factored form: each component fixes some bindings and
is uniform over the bijections of one or more unresolved word/fragment pools.
This is exact under 0/1 observation likelihoods and never materializes the
full permutation space.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Iterable, Sequence

from . import dsl
from .blockworld import HORIZONTAL, VERTICAL, BlockPlacement, GridState, Scene, drop_block, empty_grid
from .dsl import Library, Program, Token
from .library_learning import shortest_tokenization


@dataclass(frozen=True)
class PragmaticsConfig:
    """Speaker optimality (alpha) and cost sensitivity (beta) for the Architect."""

    alpha: float = 5.0
    beta: float = 0.3
    max_candidates: int = 4

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")


def synthetic_word(index: int) -> str:
    """Spreadsheet-style word names: chunkA, chunkB, ..., chunkZ, chunkAA, ..."""
    letters = ""
    n = index
    while True:
        letters = chr(ord("A") + n % 26) + letters
        n = n // 26 - 1
        if n < 0:
            break
    return "chunk" + letters


def is_fixed_word(word: str) -> bool:
    return dsl.is_base_token(word)


# ---------------------------------------------------------------------------
# Belief over lexicons

@dataclass(frozen=True)
class BeliefComponent:
    """Fixed bindings plus independent pools, uniform over each pool's bijections."""

    weight: float
    known: tuple[tuple[str, str], ...]
    pools: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]

    def hypothesis_count(self) -> int:
        count = 1
        for words, _ in self.pools:
            count *= math.factorial(len(words))
        return count


@dataclass(frozen=True)
class BeliefState:
    """The Architect's distribution over word-to-fragment bijections."""

    components: tuple[BeliefComponent, ...]
    words: tuple[str, ...]
    fragments: tuple[str, ...]

    @property
    def support(self) -> list[dict[str, str]]:
        return [lex for lex, _ in enumerate_hypotheses(self)]

    @property
    def probs(self) -> list[float]:
        return [p for _, p in enumerate_hypotheses(self)]


def initial_belief() -> BeliefState:
    return BeliefState((BeliefComponent(1.0, (), ()),), (), ())


def _normalized(comp: BeliefComponent) -> BeliefComponent:
    """Collapse singleton pools into fixed bindings."""
    known = dict(comp.known)
    pools = []
    for words, frags in comp.pools:
        if len(words) == 1:
            known[words[0]] = frags[0]
        else:
            pools.append((words, frags))
    return BeliefComponent(comp.weight, tuple(sorted(known.items())), tuple(sorted(pools)))


def _merge_components(components: Iterable[BeliefComponent]) -> tuple[BeliefComponent, ...]:
    merged: dict[tuple, float] = {}
    for comp in components:
        comp = _normalized(comp)
        key = (comp.known, comp.pools)
        merged[key] = merged.get(key, 0.0) + comp.weight
    total = sum(merged.values())
    return tuple(
        BeliefComponent(weight / total, known, pools)
        for (known, pools), weight in sorted(merged.items())
    )


def extend_hypotheses(belief: BeliefState,
                      new_pairs: Sequence[tuple[str, str]]) -> BeliefState:
    """Grow the hypothesis space after the library gained fragments.

    Every existing hypothesis extends with every bijection between the new
    words and the new fragments, mass split uniformly among the extensions.
    """
    if not new_pairs:
        return belief
    new_words = tuple(sorted(word for word, _ in new_pairs))
    new_frags = tuple(sorted(frag for _, frag in new_pairs))
    pool = (new_words, new_frags)
    components = tuple(
        BeliefComponent(c.weight, c.known, tuple(sorted(c.pools + (pool,))))
        for c in belief.components
    )
    return BeliefState(
        _merge_components(components),
        tuple(sorted(belief.words + new_words)),
        tuple(sorted(belief.fragments + new_frags)),
    )


def _component_marginal(comp: BeliefComponent, word: str, target: str) -> float:
    for bound_word, bound_frag in comp.known:
        if bound_word == word:
            return 1.0 if bound_frag == target else 0.0
    for words, frags in comp.pools:
        if word in words:
            return 1.0 / len(frags) if target in frags else 0.0
    return 0.0


def literal_listener(target: Token, word: str, lexicon: dict[str, str]) -> float:
    """Delta semantics: 1 exactly when the word denotes the target primitive."""
    if is_fixed_word(word):
        return 1.0 if word == target else 0.0
    if word not in lexicon:
        raise KeyError(f"unknown word {word!r} under this lexicon")
    return 1.0 if lexicon[word] == target else 0.0


def marginal_listener(target: Token, word: str, belief: BeliefState) -> float:
    """Expected literal-listener success, marginalizing over lexicon hypotheses."""
    if is_fixed_word(word):
        return 1.0 if word == target else 0.0
    return sum(c.weight * _component_marginal(c, word, target)
               for c in belief.components)


def _uniform_reset(belief: BeliefState) -> BeliefState:
    if not belief.words:
        return initial_belief()
    pool = (belief.words, belief.fragments)
    component = BeliefComponent(1.0, (), (pool,))
    return BeliefState(_merge_components([component]), belief.words, belief.fragments)


def _update_components(belief: BeliefState, word: str,
                       consistent: Callable[[str], bool]) -> tuple[BeliefState, bool]:
    updated: list[BeliefComponent] = []
    for comp in belief.components:
        known = dict(comp.known)
        if word in known:
            if consistent(known[word]):
                updated.append(comp)
            continue
        pool_index = next(
            (i for i, (words, _) in enumerate(comp.pools) if word in words), None)
        if pool_index is None:
            continue
        words, frags = comp.pools[pool_index]
        allowed = [f for f in frags if consistent(f)]
        if len(allowed) == len(frags):
            # Uninformative for this component; leave it unsplit.
            updated.append(comp)
            continue
        rest_words = tuple(w for w in words if w != word)
        share = comp.weight / len(frags)
        for frag in allowed:
            rest_frags = tuple(f for f in frags if f != frag)
            pools = list(comp.pools)
            if rest_words:
                pools[pool_index] = (rest_words, rest_frags)
            else:
                del pools[pool_index]
            updated.append(BeliefComponent(
                share, tuple(sorted(comp.known + ((word, frag),))), tuple(sorted(pools))))
    if not updated or sum(c.weight for c in updated) <= 0.0:
        return _uniform_reset(belief), True
    return BeliefState(_merge_components(updated), belief.words, belief.fragments), False


def update_belief(belief: BeliefState, word: str,
                  observed: Sequence[BlockPlacement], library: Library, *,
                  grid: GridState, hand_x: int) -> tuple[BeliefState, bool]:
    """Condition on the Builder's placements for one word.

    A hypothesis survives iff executing its fragment for the word from the
    Builder's pre-step grid and hand reproduces exactly the observed
    placements. Returns (new belief, anomaly flag); if every hypothesis is
    ruled out, the belief resets to uniform and the anomaly flag is set.
    """
    if is_fixed_word(word):
        return belief, False
    observed_list = list(observed)
    cache: dict[str, bool] = {}

    def consistent(frag_id: str) -> bool:
        if frag_id not in cache:
            fragment = library.resolve(frag_id)
            _, _, placed = execute_lenient(fragment.expansion, grid, hand_x)
            cache[frag_id] = placed == observed_list
        return cache[frag_id]

    return _update_components(belief, word, consistent)


def belief_entropy(belief: BeliefState) -> float:
    """Shannon entropy (bits) of the full distribution over lexicons."""
    entropy = 0.0
    for comp in belief.components:
        if comp.weight <= 0:
            continue
        entropy -= comp.weight * math.log2(comp.weight)
        entropy += comp.weight * math.log2(comp.hypothesis_count())
    return entropy


def enumerate_hypotheses(belief: BeliefState,
                         limit: int = 50000) -> list[tuple[dict[str, str], float]]:
    """Materialize (lexicon, probability) pairs; refuses absurdly large spaces."""
    if sum(c.hypothesis_count() for c in belief.components) > limit:
        raise RuntimeError("hypothesis space too large to enumerate")
    out: list[tuple[dict[str, str], float]] = []
    for comp in belief.components:
        per_hypothesis = comp.weight / comp.hypothesis_count()
        partials: list[dict[str, str]] = [dict(comp.known)]
        for words, frags in comp.pools:
            extended: list[dict[str, str]] = []
            for assignment in permutations(frags, len(words)):
                for partial in partials:
                    lex = dict(partial)
                    lex.update(zip(words, assignment))
                    extended.append(lex)
            partials = extended
        out.extend((lex, per_hypothesis) for lex in partials)
    return out


def point_mass_lexicon(belief: BeliefState) -> dict[str, str] | None:
    """The single certain lexicon, if belief has collapsed; otherwise None."""
    if len(belief.components) == 1 and not belief.components[0].pools:
        return dict(belief.components[0].known)
    return None


# ---------------------------------------------------------------------------
# Architect: candidate programs, utilities, utterance choice

def candidate_programs(scene: Scene, library: Library,
                       max_candidates: int = 4) -> list[Program]:
    """1..max_candidates distinct encodings of the scene, shortest first.

    The pool is the base-level canonical program, the shortest tokenization
    under the full library, and the shortest tokenization under each
    single-fragment sublibrary; the base-level program always survives
    truncation so the Architect is never without a safe option.
    """
    base = dsl.canonical_program(scene)
    pool = {base}
    if library.fragments:
        pool.add(shortest_tokenization(base, library))
        for fragment in library.fragments:
            pool.add(shortest_tokenization(base, Library((fragment,))))
    ordered = sorted(pool, key=lambda p: (dsl.token_length(p), p))
    chosen = ordered[:max_candidates]
    if base not in chosen:
        chosen[-1] = base
    return chosen


def best_utterance(program: Program, belief: BeliefState) -> tuple[str, ...]:
    """One word per token step: fixed surfaces for base tokens, else the word
    with the highest marginal listener probability (ties to the smallest)."""
    words: list[str] = []
    for token in program:
        if dsl.is_base_token(token):
            words.append(token)
            continue
        if not belief.words:
            raise ValueError(f"no synthetic words available for {token!r}")
        best_word = belief.words[0]
        best_prob = -1.0
        for word in sorted(belief.words):
            prob = marginal_listener(token, word, belief)
            if prob > best_prob:
                best_prob = prob
                best_word = word
        words.append(best_word)
    return tuple(words)


def joint_utility(program: Program, utterance: Sequence[str],
                  belief: BeliefState, cfg: PragmaticsConfig) -> float:
    """(1-beta) * sum of log marginal listener probabilities - beta * program length."""
    if len(utterance) != len(program):
        raise ValueError("utterance is not aligned with the program's steps")
    informativity = 0.0
    for token, word in zip(program, utterance):
        prob = marginal_listener(token, word, belief)
        if prob <= 0.0:
            return -math.inf
        informativity += math.log(prob)
    return (1 - cfg.beta) * informativity - cfg.beta * dsl.token_length(program)


def architect_choose(scene: Scene, library: Library, belief: BeliefState,
                     cfg: PragmaticsConfig, rng: random.Random) -> tuple[Program, tuple[str, ...]]:
    """Sample a (program, utterance) pair from the softmax over joint utility."""
    pairs = []
    for program in candidate_programs(scene, library, cfg.max_candidates):
        utterance = best_utterance(program, belief)
        utility = joint_utility(program, utterance, belief, cfg)
        if utility > -math.inf:
            pairs.append((program, utterance, utility))
    if not pairs:
        raise RuntimeError("no candidate with finite utility; base program should always qualify")
    if math.isinf(cfg.alpha):
        return max(pairs, key=lambda p: p[2])[:2]
    top = max(utility for _, _, utility in pairs)
    weights = [math.exp(cfg.alpha * (utility - top)) for _, _, utility in pairs]
    total = sum(weights)
    draw = rng.random() * total
    cumulative = 0.0
    for (program, utterance, _), weight in zip(pairs, weights):
        cumulative += weight
        if draw <= cumulative:
            return program, utterance
    program, utterance, _ = pairs[-1]
    return program, utterance


# ---------------------------------------------------------------------------
# Builder

def execute_lenient(tokens: Sequence[Token], grid: GridState,
                    hand: int) -> tuple[GridState, int, list[BlockPlacement]]:
    """Best-effort base-token execution: the hand clamps at the walls and
    drops that cannot fit are skipped rather than raised."""
    placed: list[BlockPlacement] = []
    for token in tokens:
        if dsl.is_move(token):
            hand = min(max(hand + dsl.move_delta(token), 0), grid.width - 1)
            continue
        orientation = HORIZONTAL if token == dsl.PLACE_H else VERTICAL
        if orientation == HORIZONTAL and hand + 1 >= grid.width:
            continue
        columns = (hand, hand + 1) if orientation == HORIZONTAL else (hand,)
        rest = max(grid.column_heights[c] for c in columns)
        top = rest + (1 if orientation == HORIZONTAL else 2)
        if top > grid.height:
            continue
        before = len(grid.placements)
        grid = drop_block(grid, orientation, hand)
        placed.extend(grid.placements[before:])
    return grid, hand, placed


@dataclass
class BuilderState:
    """The Builder's grid, hand, and persistent word bindings for one dyad."""

    grid: GridState
    hand: int
    bindings: dict[str, str] = field(default_factory=dict)
    fragment_ids: list[str] = field(default_factory=list)

    def reset_workspace(self, width: int, height: int, start_x: int) -> None:
        self.grid = empty_grid(width, height)
        self.hand = start_x


def builder_interpret(word: str, state: BuilderState, rng: random.Random) -> Token:
    """Resolve a word to a primitive; first hearings bind uniformly at random
    to a fragment no other word has claimed, and the binding persists."""
    if is_fixed_word(word):
        return word
    if word in state.bindings:
        return state.bindings[word]
    taken = set(state.bindings.values())
    unbound = sorted(f for f in state.fragment_ids if f not in taken)
    if not unbound:
        raise RuntimeError(f"no unbound fragment left for new word {word!r}")
    choice = unbound[rng.randrange(len(unbound))]
    state.bindings[word] = choice
    return choice


def builder_execute_token(state: BuilderState, token: Token,
                          library: Library) -> list[BlockPlacement]:
    """Execute one interpreted primitive on the Builder's workspace."""
    tokens = (token,) if dsl.is_base_token(token) else library.resolve(token).expansion
    state.grid, state.hand, placed = execute_lenient(tokens, state.grid, state.hand)
    return placed
