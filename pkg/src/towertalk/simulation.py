"""Trial-sequence generation, the dyad interaction loop, and aggregate metrics.

A dyad plays twelve trials: every pair of the three towers appears once per
repetition block, four blocks total, with left/right positions balanced. On
each trial the Architect picks a program and utterance for the target scene,
the Builder reconstructs it word by word, the Architect updates its lexicon
beliefs from the visible placements, and both agents extend their shared
library from the scenes observed so far.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from . import dsl, pragmatics
from .blockworld import (
    DEFAULT_GEOMETRY,
    BlockPlacement,
    Scene,
    SceneGeometry,
    TowerStimulus,
    compose_scene,
    empty_grid,
    f1_score,
    stimulus_towers,
)
from .dsl import Library, Program
from .library_learning import (
    FRAGMENT_LEVELS,
    LearningConfig,
    classify_fragment,
    update_library_with_log,
)
from .pragmatics import (
    BuilderState,
    PragmaticsConfig,
    architect_choose,
    belief_entropy,
    builder_execute_token,
    builder_interpret,
    extend_hypotheses,
    initial_belief,
    synthetic_word,
    update_belief,
)

BLOCK_LEVEL = "block"
STEP_LEVELS = (BLOCK_LEVEL,) + FRAGMENT_LEVELS

TOWER_PAIRS = (("A", "B"), ("A", "C"), ("B", "C"))
TRIALS_PER_SEQUENCE = 12
REPETITION_BLOCKS = 4


@dataclass(frozen=True)
class TrialSpec:
    repetition_block: int
    left: str
    right: str

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.left, self.right))


@dataclass(frozen=True)
class TrialSequence:
    trials: tuple[TrialSpec, ...]
    seed: int


@dataclass(frozen=True)
class StepRecord:
    token: str
    word: str
    level: str          # block, sub_tower, tower, scene, or other
    placements: int     # blocks the Builder actually placed for this step


@dataclass(frozen=True)
class FragmentSnapshot:
    id: str
    body: str
    expansion: str
    level: str
    adopted_trial: int
    score_delta: float


@dataclass(frozen=True)
class TrialRecord:
    index: int
    spec: TrialSpec
    program: Program
    utterance: tuple[str, ...]
    builder_placements: tuple[BlockPlacement, ...]
    f1: float
    tokens_sent: int
    steps: tuple[StepRecord, ...]
    library: tuple[FragmentSnapshot, ...]
    belief_entropy: float
    anomalies: int


@dataclass(frozen=True)
class DyadTrace:
    pragmatics: PragmaticsConfig
    learning: LearningConfig
    sequence: TrialSequence
    iteration: int
    dyad_seed: int
    records: tuple[TrialRecord, ...]
    final_library: tuple[FragmentSnapshot, ...]
    final_belief_entropy: float


def generate_trial_sequence(seed: int) -> TrialSequence:
    """Twelve trials: each pair once per block, towers balanced 4 left / 4 right.

    Pair order is shuffled within each block; left/right orientations are
    drawn at random and rejection-resampled until every tower sits on each
    side exactly four times.
    """
    rng = random.Random(seed)
    while True:
        trials: list[TrialSpec] = []
        for block in range(1, REPETITION_BLOCKS + 1):
            pairs = list(TOWER_PAIRS)
            rng.shuffle(pairs)
            for first, second in pairs:
                if rng.random() < 0.5:
                    trials.append(TrialSpec(block, first, second))
                else:
                    trials.append(TrialSpec(block, second, first))
        lefts: dict[str, int] = {}
        for trial in trials:
            lefts[trial.left] = lefts.get(trial.left, 0) + 1
        if all(lefts.get(tower, 0) == 4 for tower in ("A", "B", "C")):
            return TrialSequence(tuple(trials), seed)


def _stimuli_by_id(stimuli: Sequence[TowerStimulus]) -> dict[str, TowerStimulus]:
    return {tower.id: tower for tower in stimuli}


def run_dyad(sequence: TrialSequence, w: float, cfg: PragmaticsConfig,
             lcfg: LearningConfig, rng: random.Random,
             stimuli: Sequence[TowerStimulus] | None = None,
             geometry: SceneGeometry = DEFAULT_GEOMETRY,
             iteration: int = 0, dyad_seed: int = 0) -> DyadTrace:
    """Simulate one Architect/Builder pair through a full trial sequence."""
    lcfg = replace(lcfg, w=w)
    if stimuli is None:
        stimuli = stimulus_towers()
    towers = _stimuli_by_id(stimuli)

    library = Library()
    scenes_so_far: list[Program] = []
    belief = initial_belief()
    builder = BuilderState(grid=empty_grid(geometry.width, geometry.height), hand=0)
    level_by_fragment: dict[str, str] = {}
    snapshots: list[FragmentSnapshot] = []
    records: list[TrialRecord] = []

    for index, spec in enumerate(sequence.trials, start=1):
        target = compose_scene(towers[spec.left], towers[spec.right], geometry)
        start_x = dsl.default_start_x(target)
        program, utterance = architect_choose(target, library, belief, cfg, rng)

        builder.reset_workspace(geometry.width, geometry.height, start_x)
        steps: list[StepRecord] = []
        anomalies = 0
        for token, word in zip(program, utterance):
            pre_grid, pre_hand = builder.grid, builder.hand
            interpreted = builder_interpret(word, builder, rng)
            placed = builder_execute_token(builder, interpreted, library)
            belief, anomaly = update_belief(
                belief, word, placed, library, grid=pre_grid, hand_x=pre_hand)
            anomalies += int(anomaly)
            if dsl.is_move(token):
                level = "move"
            elif dsl.is_place(token):
                level = BLOCK_LEVEL
            else:
                level = level_by_fragment[token]
            steps.append(StepRecord(token, word, level, len(placed)))

        built = Scene(geometry.width, geometry.height, frozenset(builder.grid.placements))
        trial_f1 = f1_score(target, built)

        scenes_so_far.append(dsl.canonical_program(target, start_x))
        library, adoptions = update_library_with_log(library, scenes_so_far, lcfg)
        new_pairs: list[tuple[str, str]] = []
        for adoption in adoptions:
            fragment = adoption.fragment
            word = synthetic_word(len(level_by_fragment))
            level = classify_fragment(fragment, stimuli, geometry)
            level_by_fragment[fragment.id] = level
            new_pairs.append((word, fragment.id))
            snapshots.append(FragmentSnapshot(
                id=fragment.id,
                body=dsl.print_program(fragment.body),
                expansion=dsl.print_program(fragment.expansion),
                level=level,
                adopted_trial=index,
                score_delta=adoption.score_delta,
            ))
        if new_pairs:
            belief = extend_hypotheses(belief, new_pairs)
            builder.fragment_ids = list(library.ids())

        records.append(TrialRecord(
            index=index,
            spec=spec,
            program=program,
            utterance=utterance,
            builder_placements=tuple(builder.grid.placements),
            f1=trial_f1,
            tokens_sent=dsl.token_length(program),
            steps=tuple(steps),
            library=tuple(snapshots),
            belief_entropy=belief_entropy(belief),
            anomalies=anomalies,
        ))

    return DyadTrace(
        pragmatics=cfg,
        learning=lcfg,
        sequence=sequence,
        iteration=iteration,
        dyad_seed=dyad_seed,
        records=tuple(records),
        final_library=tuple(snapshots),
        final_belief_entropy=belief_entropy(belief),
    )


def _dyad_task(args: tuple) -> DyadTrace:
    sequence, w, cfg, lcfg, dyad_seed, stimuli, geometry, iteration = args
    return run_dyad(sequence, w, cfg, lcfg, random.Random(dyad_seed),
                    stimuli=stimuli, geometry=geometry,
                    iteration=iteration, dyad_seed=dyad_seed)


def run_experiment(n_sequences: int = 49, iterations: int = 2,
                   configs: Sequence[tuple[PragmaticsConfig, LearningConfig]] = (),
                   master_seed: int = 0, jobs: int = 1,
                   stimuli: Sequence[TowerStimulus] | None = None,
                   geometry: SceneGeometry = DEFAULT_GEOMETRY) -> list[DyadTrace]:
    """Run every config over the same generated sequences; fully deterministic.

    Seeds for sequences and dyads derive from master_seed in a fixed order, so
    results are identical for any level of parallelism.
    """
    seeder = random.Random(master_seed)
    sequence_seeds = [seeder.randrange(2 ** 62) for _ in range(n_sequences)]
    sequences = [generate_trial_sequence(s) for s in sequence_seeds]
    tasks = []
    for cfg, lcfg in configs:
        for sequence in sequences:
            for iteration in range(iterations):
                dyad_seed = seeder.randrange(2 ** 62)
                tasks.append((sequence, lcfg.w, cfg, lcfg, dyad_seed,
                              tuple(stimuli) if stimuli is not None else None,
                              geometry, iteration))
    if jobs <= 1:
        return [_dyad_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_dyad_task, tasks, chunksize=1))


def run_library_trajectory(sequence: TrialSequence, lcfg: LearningConfig,
                           stimuli: Sequence[TowerStimulus] | None = None,
                           geometry: SceneGeometry = DEFAULT_GEOMETRY,
                           ) -> tuple[FragmentSnapshot, ...]:
    """Library learning alone (no communication) over a trial sequence."""
    if stimuli is None:
        stimuli = stimulus_towers()
    towers = _stimuli_by_id(stimuli)
    library = Library()
    scenes: list[Program] = []
    snapshots: list[FragmentSnapshot] = []
    for index, spec in enumerate(sequence.trials, start=1):
        target = compose_scene(towers[spec.left], towers[spec.right], geometry)
        scenes.append(dsl.canonical_program(target))
        library, adoptions = update_library_with_log(library, scenes, lcfg)
        for adoption in adoptions:
            fragment = adoption.fragment
            snapshots.append(FragmentSnapshot(
                id=fragment.id,
                body=dsl.print_program(fragment.body),
                expansion=dsl.print_program(fragment.expansion),
                level=classify_fragment(fragment, stimuli, geometry),
                adopted_trial=index,
                score_delta=adoption.score_delta,
            ))
    return tuple(snapshots)


# ---------------------------------------------------------------------------
# Metrics

def snapshot_level_proportions(snapshots: Sequence[FragmentSnapshot],
                               ) -> list[dict[str, float]]:
    """Per trial 0..12: proportion of the library's fragments at each level."""
    rows = []
    for trial in range(TRIALS_PER_SEQUENCE + 1):
        fragments = [s for s in snapshots if s.adopted_trial <= trial]
        row = {"trial": float(trial)}
        for level in FRAGMENT_LEVELS:
            row[level] = (sum(1 for s in fragments if s.level == level) / len(fragments)
                          if fragments else 0.0)
        rows.append(row)
    return rows


def fragment_trajectory(traces: Sequence[DyadTrace]) -> list[dict[str, float]]:
    """Mean per-trial library composition over traces (Fig-4A-style table)."""
    if not traces:
        return []
    per_trace = [snapshot_level_proportions(t.final_library) for t in traces]
    rows = []
    for trial in range(TRIALS_PER_SEQUENCE + 1):
        row = {"trial": float(trial)}
        for level in FRAGMENT_LEVELS:
            row[level] = sum(p[trial][level] for p in per_trace) / len(per_trace)
        rows.append(row)
    return rows


def first_adoption_trial(snapshots: Sequence[FragmentSnapshot],
                         level: str) -> int | None:
    """Trial at which a fragment of the given level first entered the library."""
    trials = [s.adopted_trial for s in snapshots if s.level == level]
    return min(trials) if trials else None


def _place_bearing_steps(record: TrialRecord) -> list[StepRecord]:
    return [s for s in record.steps if s.level != "move"]


def abstraction_proportions(traces: Sequence[DyadTrace]) -> list[dict[str, float]]:
    """Per repetition block: mean share of place-bearing instruction steps at
    each level, averaged over dyads (move tokens carry no reference)."""
    rows = []
    for block in range(1, REPETITION_BLOCKS + 1):
        shares = {level: [] for level in STEP_LEVELS}
        for trace in traces:
            steps = [s for r in trace.records if r.spec.repetition_block == block
                     for s in _place_bearing_steps(r)]
            if not steps:
                continue
            for level in STEP_LEVELS:
                shares[level].append(
                    sum(1 for s in steps if s.level == level) / len(steps))
        row = {"repetition_block": float(block)}
        for level in STEP_LEVELS:
            values = shares[level]
            row[level] = sum(values) / len(values) if values else 0.0
        rows.append(row)
    return rows


def accuracy_and_efficiency(traces: Sequence[DyadTrace]) -> list[dict[str, float]]:
    """Per repetition block: mean F1 and mean tokens sent, over all dyads."""
    rows = []
    for block in range(1, REPETITION_BLOCKS + 1):
        f1_values: list[float] = []
        token_values: list[float] = []
        for trace in traces:
            block_records = [r for r in trace.records
                             if r.spec.repetition_block == block]
            if not block_records:
                continue
            f1_values.append(sum(r.f1 for r in block_records) / len(block_records))
            token_values.append(
                sum(r.tokens_sent for r in block_records) / len(block_records))
        rows.append({
            "repetition_block": float(block),
            "mean_f1": sum(f1_values) / len(f1_values) if f1_values else 0.0,
            "mean_tokens_sent": sum(token_values) / len(token_values) if token_values else 0.0,
            "n_dyads": float(len(f1_values)),
        })
    return rows


def jsd(p: dict[str, float], q: dict[str, float]) -> float:
    """Jensen-Shannon divergence, base 2, over the union vocabulary; in [0, 1]."""
    vocabulary = set(p) | set(q)
    p_total = sum(p.values())
    q_total = sum(q.values())
    if p_total <= 0 or q_total <= 0:
        raise ValueError("distributions must have positive mass")
    divergence = 0.0
    for word in vocabulary:
        pw = p.get(word, 0.0) / p_total
        qw = q.get(word, 0.0) / q_total
        mw = (pw + qw) / 2
        if pw > 0:
            divergence += 0.5 * pw * math.log2(pw / mw)
        if qw > 0:
            divergence += 0.5 * qw * math.log2(qw / mw)
    return divergence


def word_distribution(trace: DyadTrace, repetition_block: int) -> dict[str, float]:
    """Word frequencies over all utterances a dyad produced within one block."""
    counts: dict[str, float] = {}
    for record in trace.records:
        if record.spec.repetition_block != repetition_block:
            continue
        for word in record.utterance:
            counts[word] = counts.get(word, 0.0) + 1.0
    return counts


def mean_pairwise_jsd(traces: Sequence[DyadTrace], repetition_block: int) -> float:
    """Mean JSD between the word distributions of all dyad pairs in a block."""
    distributions = [word_distribution(t, repetition_block) for t in traces]
    distributions = [d for d in distributions if d]
    if len(distributions) < 2:
        return 0.0
    total = 0.0
    count = 0
    for i in range(len(distributions)):
        for j in range(i + 1, len(distributions)):
            total += jsd(distributions[i], distributions[j])
            count += 1
    return total / count


# ---------------------------------------------------------------------------
# Serialization

def sequence_to_dict(sequence: TrialSequence) -> dict:
    return {
        "seed": sequence.seed,
        "trials": [
            {"repetition_block": t.repetition_block, "left": t.left, "right": t.right}
            for t in sequence.trials
        ],
    }


def sequence_from_dict(data: dict) -> TrialSequence:
    trials = tuple(
        TrialSpec(int(t["repetition_block"]), str(t["left"]), str(t["right"]))
        for t in data["trials"]
    )
    return TrialSequence(trials, int(data["seed"]))


def snapshot_to_dict(snapshot: FragmentSnapshot) -> dict:
    return {
        "id": snapshot.id,
        "body": snapshot.body,
        "expansion": snapshot.expansion,
        "level": snapshot.level,
        "adopted_trial": snapshot.adopted_trial,
        "score_delta": round(snapshot.score_delta, 9),
    }


def trace_to_dict(trace: DyadTrace) -> dict:
    return {
        "alpha": trace.pragmatics.alpha,
        "beta": trace.pragmatics.beta,
        "w": trace.learning.w,
        "size_rule": trace.learning.size_rule,
        "sequence": sequence_to_dict(trace.sequence),
        "iteration": trace.iteration,
        "dyad_seed": trace.dyad_seed,
        "final_belief_entropy": round(trace.final_belief_entropy, 9),
        "trials": [
            {
                "trial": r.index,
                "repetition_block": r.spec.repetition_block,
                "left": r.spec.left,
                "right": r.spec.right,
                "program": dsl.print_program(r.program),
                "utterance": list(r.utterance),
                "builder_placements": [
                    {"x": b.x, "y": b.y, "orientation": b.orientation}
                    for b in r.builder_placements
                ],
                "f1": round(r.f1, 9),
                "tokens_sent": r.tokens_sent,
                "steps": [
                    {"token": s.token, "word": s.word, "level": s.level,
                     "placements": s.placements}
                    for s in r.steps
                ],
                "library": [snapshot_to_dict(s) for s in r.library],
                "belief_entropy": round(r.belief_entropy, 9),
                "anomalies": r.anomalies,
            }
            for r in trace.records
        ],
    }
