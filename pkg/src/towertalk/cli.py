"""Command-line entry points for reproducible experiments and exports.

Subcommands:
    gen-seq    write a batch of trial sequences to a JSON file
    learn      run library learning alone over a sequence file
    simulate   run the full Architect/Builder experiment grid and export metrics
    render     draw a scene, stimulus, or recorded trial as ASCII art

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

from . import simulation
from .blockworld import (
    DEFAULT_GEOMETRY,
    Scene,
    compose_scene,
    f1_score,
    load_scene,
    load_stimuli,
    render_ascii,
    stimulus_towers,
)
from .blockworld import BlockPlacement
from .library_learning import BODY_TOKEN_SUM, PRIMITIVE_COUNT, LearningConfig
from .pragmatics import PragmaticsConfig
from .simulation import (
    FRAGMENT_LEVELS,
    REPETITION_BLOCKS,
    STEP_LEVELS,
    generate_trial_sequence,
    sequence_from_dict,
    sequence_to_dict,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

# Figure parameters: w grid, beta grid, alpha, and the 49 x 2 dyad layout.
DEFAULT_W = (1.5, 3.2, 9.6)
DEFAULT_BETA = (0.0, 0.3, 0.8)
DEFAULT_ALPHA = 5.0
DEFAULT_N_SEQUENCES = 49
DEFAULT_ITERATIONS = 2
DEFAULT_SIZE_RULE = BODY_TOKEN_SUM


@dataclass
class RunConfig:
    """Flag mirror for the simulate subcommand."""

    w_values: tuple[float, ...] = DEFAULT_W
    beta_values: tuple[float, ...] = DEFAULT_BETA
    alpha: float = DEFAULT_ALPHA
    n_sequences: int = DEFAULT_N_SEQUENCES
    iterations: int = DEFAULT_ITERATIONS
    master_seed: int = 0
    out_dir: str = "out"
    stimulus_file: str | None = None
    size_rule: str = DEFAULT_SIZE_RULE
    jobs: int = 1

    def validate(self) -> None:
        if any(w < 0 for w in self.w_values):
            raise ValueError("w: values must be nonnegative")
        if any(not 0 <= b <= 1 for b in self.beta_values):
            raise ValueError("beta: values must lie in [0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha: must be nonnegative")
        if self.n_sequences < 0:
            raise ValueError("n_sequences: must be nonnegative")
        if self.iterations < 0:
            raise ValueError("iterations: must be nonnegative")
        if self.size_rule not in (PRIMITIVE_COUNT, BODY_TOKEN_SUM):
            raise ValueError(f"size_rule: unknown rule {self.size_rule!r}")
        if self.jobs < 1:
            raise ValueError("jobs: must be at least 1")


class ConfigError(Exception):
    pass


def _fmt(value: float) -> str:
    return f"{value:g}"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _json_text(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _csv_text(fieldnames: list[str], rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v)
                         for k, v in row.items()})
    return buffer.getvalue()


def _load_stimuli_arg(path: str | None):
    if path is None:
        return None
    return load_stimuli(path)


def cmd_gen_seq(args: argparse.Namespace) -> int:
    if args.count < 0:
        raise ConfigError("count: must be nonnegative")
    seeder_seed = args.seed
    import random
    seeder = random.Random(seeder_seed)
    sequences = [generate_trial_sequence(seeder.randrange(2 ** 62))
                 for _ in range(args.count)]
    payload = {
        "master_seed": seeder_seed,
        "count": args.count,
        "sequences": [sequence_to_dict(s) for s in sequences],
    }
    _write_text(args.out, _json_text(payload))
    return EXIT_OK


def _read_sequences(path: str):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return [sequence_from_dict(entry) for entry in data["sequences"]]


def cmd_learn(args: argparse.Namespace) -> int:
    if args.w < 0:
        raise ConfigError("w: must be nonnegative")
    if args.size_rule not in (PRIMITIVE_COUNT, BODY_TOKEN_SUM):
        raise ConfigError(f"size_rule: unknown rule {args.size_rule!r}")
    sequences = _read_sequences(args.sequences)
    stimuli = _load_stimuli_arg(args.stimuli)
    lcfg = LearningConfig(w=args.w, size_rule=args.size_rule)
    runs = []
    for sequence in sequences:
        snapshots = simulation.run_library_trajectory(sequence, lcfg, stimuli=stimuli)
        runs.append({
            "sequence_seed": sequence.seed,
            "fragments": [simulation.snapshot_to_dict(s) for s in snapshots],
            "level_proportions": simulation.snapshot_level_proportions(snapshots),
        })
    payload = {"w": args.w, "size_rule": args.size_rule, "runs": runs}
    _write_text(args.out, _json_text(payload))
    return EXIT_OK


def _simulate_config_grid(cfg: RunConfig):
    grid = []
    for w in cfg.w_values:
        for beta in cfg.beta_values:
            grid.append((
                PragmaticsConfig(alpha=cfg.alpha, beta=beta),
                LearningConfig(w=w, size_rule=cfg.size_rule),
            ))
    return grid


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = RunConfig(
        w_values=tuple(args.w),
        beta_values=tuple(args.beta),
        alpha=args.alpha,
        n_sequences=args.n_sequences,
        iterations=args.iterations,
        master_seed=args.master_seed,
        out_dir=args.out_dir,
        stimulus_file=args.stimuli,
        size_rule=args.size_rule,
        jobs=args.jobs,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    stimuli = _load_stimuli_arg(cfg.stimulus_file)
    grid = _simulate_config_grid(cfg)
    traces = simulation.run_experiment(
        n_sequences=cfg.n_sequences,
        iterations=cfg.iterations,
        configs=grid,
        master_seed=cfg.master_seed,
        jobs=cfg.jobs,
        stimuli=stimuli,
    )

    # Build every output in memory first so failures never leave partial files.
    outputs: dict[str, str] = {}
    trace_payload = {
        "master_seed": cfg.master_seed,
        "alpha": cfg.alpha,
        "size_rule": cfg.size_rule,
        "n_sequences": cfg.n_sequences,
        "iterations": cfg.iterations,
        "traces": [simulation.trace_to_dict(t) for t in traces],
    }
    outputs["traces.json"] = _json_text(trace_payload)

    for pcfg, lcfg in grid:
        subset = [t for t in traces
                  if t.pragmatics == pcfg and t.learning.w == lcfg.w
                  and t.learning.size_rule == lcfg.size_rule]
        tag = f"w{_fmt(lcfg.w)}_beta{_fmt(pcfg.beta)}"
        outputs[f"fragment_trajectory_{tag}.csv"] = _csv_text(
            ["trial", *FRAGMENT_LEVELS], simulation.fragment_trajectory(subset))
        outputs[f"abstraction_proportions_{tag}.csv"] = _csv_text(
            ["repetition_block", *STEP_LEVELS],
            simulation.abstraction_proportions(subset))
        outputs[f"accuracy_efficiency_{tag}.csv"] = _csv_text(
            ["repetition_block", "mean_f1", "mean_tokens_sent", "n_dyads"],
            simulation.accuracy_and_efficiency(subset))
        outputs[f"jsd_{tag}.csv"] = _csv_text(
            ["repetition_block", "mean_pairwise_jsd"],
            [{"repetition_block": float(block),
              "mean_pairwise_jsd": simulation.mean_pairwise_jsd(subset, block)}
             for block in range(1, REPETITION_BLOCKS + 1)])

    os.makedirs(cfg.out_dir, exist_ok=True)
    for name, text in sorted(outputs.items()):
        _write_text(os.path.join(cfg.out_dir, name), text)
    return EXIT_OK


def _render_pair(target: Scene, built: Scene, label: str) -> str:
    score = f1_score(target, built)
    left_lines = render_ascii(target).split("\n")
    right_lines = render_ascii(built).split("\n")
    lines = [f"{label}  F1={score:.3f}", "target" + " " * (target.width - 2) + "    built"]
    for lhs, rhs in zip(left_lines, right_lines):
        lines.append(f"{lhs}    {rhs}")
    return "\n".join(lines)


def cmd_render(args: argparse.Namespace) -> int:
    if args.scene:
        print(render_ascii(load_scene(args.scene)))
        return EXIT_OK
    if args.stimulus:
        towers = {t.id: t for t in stimulus_towers()}
        if args.stimulus not in towers:
            raise ConfigError(f"stimulus: unknown id {args.stimulus!r}")
        tower = towers[args.stimulus]
        width = max(x for b in tower.blocks for x, _ in b.cells()) + 1
        height = max(y for b in tower.blocks for _, y in b.cells()) + 1
        print(render_ascii(Scene(width, height, tower.blocks)))
        return EXIT_OK
    if args.trace:
        if args.trial is None:
            raise ConfigError("trial: required when rendering from a trace")
        with open(args.trace, encoding="utf-8") as fh:
            data = json.load(fh)
        trace = data["traces"][args.trace_index]
        trials = trace["trials"]
        matches = [t for t in trials if t["trial"] == args.trial]
        if not matches:
            raise ConfigError(f"trial: no trial {args.trial} in trace")
        trial = matches[0]
        towers = {t.id: t for t in stimulus_towers()}
        target = compose_scene(towers[trial["left"]], towers[trial["right"]],
                               DEFAULT_GEOMETRY)
        built_blocks = frozenset(
            BlockPlacement(int(b["x"]), int(b["y"]), str(b["orientation"]))
            for b in trial["builder_placements"])
        built = Scene(DEFAULT_GEOMETRY.width, DEFAULT_GEOMETRY.height, built_blocks)
        print(_render_pair(target, built,
                           f"trial {trial['trial']} ({trial['left']}+{trial['right']})"))
        return EXIT_OK
    raise ConfigError("render: pass one of --scene, --stimulus, or --trace")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="towertalk",
        description="Architect/Builder block-assembly simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-seq", help="generate trial sequences")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--count", type=int, default=DEFAULT_N_SEQUENCES)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen_seq)

    p_learn = sub.add_parser("learn", help="library learning over a sequence file")
    p_learn.add_argument("--sequences", required=True)
    p_learn.add_argument("--w", type=float, required=True)
    p_learn.add_argument("--size-rule", dest="size_rule", default=DEFAULT_SIZE_RULE,
                         choices=[PRIMITIVE_COUNT, BODY_TOKEN_SUM])
    p_learn.add_argument("--stimuli", default=None)
    p_learn.add_argument("--out", required=True)
    p_learn.set_defaults(func=cmd_learn)

    p_sim = sub.add_parser("simulate", help="full experiment grid")
    p_sim.add_argument("--w", type=float, nargs="+", default=list(DEFAULT_W))
    p_sim.add_argument("--beta", type=float, nargs="+", default=list(DEFAULT_BETA))
    p_sim.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p_sim.add_argument("--n-sequences", dest="n_sequences", type=int,
                       default=DEFAULT_N_SEQUENCES)
    p_sim.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    p_sim.add_argument("--master-seed", dest="master_seed", type=int, default=0)
    p_sim.add_argument("--out-dir", dest="out_dir", default="out")
    p_sim.add_argument("--stimuli", default=None)
    p_sim.add_argument("--size-rule", dest="size_rule", default=DEFAULT_SIZE_RULE,
                       choices=[PRIMITIVE_COUNT, BODY_TOKEN_SUM])
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.set_defaults(func=cmd_simulate)

    p_render = sub.add_parser("render", help="ASCII-render scenes and trials")
    p_render.add_argument("--scene", default=None)
    p_render.add_argument("--stimulus", default=None)
    p_render.add_argument("--trace", default=None)
    p_render.add_argument("--trace-index", dest="trace_index", type=int, default=0)
    p_render.add_argument("--trial", type=int, default=None)
    p_render.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
