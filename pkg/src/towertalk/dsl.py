"""The tower-building language.

Programs are flat sequences of string tokens:

    "h" / "v"        place a horizontal / vertical block at the hand column
    "l3" / "r2"      move the hand left / right by 1..9 columns
    "chunk1", ...    invoke a learned fragment's body at the current hand

A place or chunk token counts as one description unit; a move counts as two
(direction plus digit), matching the written surface form ``(r 2)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .blockworld import (
    HORIZONTAL,
    VERTICAL,
    BlockPlacement,
    GridState,
    Scene,
    drop_block,
    empty_grid,
)

Token = str
Program = tuple[Token, ...]

PLACE_H = "h"
PLACE_V = "v"

_MOVE_RE = re.compile(r"^[lr][1-9]$")

# h, v, l, r and the digits 1..9.
BASE_PRIMITIVE_COUNT = 13


class ProgramError(ValueError):
    """A malformed token or a program that cannot be executed."""


def is_move(token: Token) -> bool:
    return _MOVE_RE.fullmatch(token) is not None


def is_place(token: Token) -> bool:
    return token == PLACE_H or token == PLACE_V


def is_base_token(token: Token) -> bool:
    return is_place(token) or is_move(token)


def is_chunk_ref(token: Token) -> bool:
    return not is_base_token(token)


def move_delta(token: Token) -> int:
    n = int(token[1:])
    return -n if token[0] == "l" else n


def token_cost(token: Token) -> int:
    return 2 if is_move(token) else 1


def token_length(program: Program) -> int:
    """Description length in units: moves cost 2, everything else 1."""
    return sum(token_cost(t) for t in program)


def count_placements(program: Program) -> int:
    return sum(1 for t in program if is_place(t))


@dataclass(frozen=True)
class Fragment:
    """A zero-arity learned primitive: a reusable token subsequence.

    ``body`` may reference previously defined fragments; ``expansion`` is the
    fully inlined base-token form and is fixed at construction, so reference
    cycles cannot arise.
    """

    id: str
    body: Program
    expansion: Program


@dataclass(frozen=True)
class Library:
    """The shared primitive inventory: 13 base primitives plus learned fragments."""

    fragments: tuple[Fragment, ...] = ()

    def resolve(self, token: Token) -> Fragment:
        for fragment in self.fragments:
            if fragment.id == token:
                return fragment
        raise ProgramError(f"unresolved chunk reference {token!r}")

    def with_fragment(self, fragment: Fragment) -> "Library":
        if any(f.id == fragment.id for f in self.fragments):
            raise ValueError(f"duplicate fragment id {fragment.id!r}")
        return Library(self.fragments + (fragment,))

    def expansions(self) -> tuple[Program, ...]:
        return tuple(f.expansion for f in self.fragments)

    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.fragments)


EMPTY_LIBRARY = Library()


def make_fragment(fragment_id: str, body: Program, library: Library) -> Fragment:
    """Build a fragment, inlining its body against the given library."""
    expansion = inline(tuple(body), library)
    if count_placements(expansion) == 0:
        raise ValueError("fragment body places no blocks")
    if token_length(body) < 2:
        raise ValueError("fragment body must be at least 2 units long")
    return Fragment(fragment_id, tuple(body), expansion)


def inline(program: Program, library: Library) -> Program:
    """Replace every chunk reference by its base expansion."""
    out: list[Token] = []
    for token in program:
        if is_base_token(token):
            out.append(token)
        else:
            out.extend(library.resolve(token).expansion)
    return tuple(out)


def execute(program: Program, library: Library = EMPTY_LIBRARY, start_x: int = 0,
            grid: GridState | None = None) -> tuple[GridState, list[BlockPlacement]]:
    """Interpret a program left to right from a hand initialized at start_x.

    Returns the final grid and the placements produced, in order. Raises
    ProgramError if the hand leaves the grid or a block does not fit.
    """
    if grid is None:
        grid = empty_grid()
    if not (0 <= start_x < grid.width):
        raise ProgramError(f"start column {start_x} out of bounds")
    hand = start_x
    placed: list[BlockPlacement] = []
    for token in inline(program, library):
        if is_move(token):
            hand += move_delta(token)
            if not (0 <= hand < grid.width):
                raise ProgramError(f"hand moved out of bounds to column {hand}")
        else:
            orientation = HORIZONTAL if token == PLACE_H else VERTICAL
            before = len(grid.placements)
            grid = drop_block(grid, orientation, hand)
            placed.extend(grid.placements[before:])
    return grid, placed


def moves_between(from_x: int, to_x: int) -> Program:
    """Move tokens taking the hand from from_x to to_x, splitting spans over 9."""
    delta = to_x - from_x
    direction = "r" if delta > 0 else "l"
    tokens: list[Token] = []
    remaining = abs(delta)
    while remaining > 0:
        step = min(remaining, 9)
        tokens.append(f"{direction}{step}")
        remaining -= step
    return tuple(tokens)


def _column_clusters(blocks: frozenset[BlockPlacement]) -> list[list[BlockPlacement]]:
    """Split blocks into runs of contiguous occupied columns, left to right."""
    if not blocks:
        return []
    occupied: set[int] = set()
    for block in blocks:
        for cx, _ in block.cells():
            occupied.add(cx)
    breaks: set[int] = set()
    for col in sorted(occupied):
        if col - 1 not in occupied:
            breaks.add(col)
    clusters: dict[int, list[BlockPlacement]] = {b: [] for b in breaks}
    for block in blocks:
        start = max(b for b in breaks if b <= block.x)
        clusters[start].append(block)
    return [sorted(clusters[start], key=lambda b: (b.y, b.x)) for start in sorted(breaks)]


def _tokenize_scene(scene: Scene, start_x: int) -> Program:
    tokens: list[Token] = []
    hand = start_x
    for cluster in _column_clusters(scene.blocks):
        for block in cluster:
            tokens.extend(moves_between(hand, block.x))
            hand = block.x
            tokens.append(PLACE_H if block.orientation == HORIZONTAL else PLACE_V)
    return tuple(tokens)


def default_start_x(scene: Scene) -> int:
    """The scene's leftmost placement column; canonical programs start there."""
    if not scene.blocks:
        return 0
    return min(b.x for b in scene.blocks)


def canonical_program(scene: Scene, start_x: int | None = None) -> Program:
    """The base-level encoding of a scene: towers left to right, blocks bottom-up.

    Within each column-connected group, blocks are ordered by (y, x); the hand
    is routed between placements with explicit move tokens. Raises
    ProgramError if gravity execution of that order does not rebuild the scene.
    """
    if start_x is None:
        start_x = default_start_x(scene)
    program = _tokenize_scene(scene, start_x)
    _, placed = execute(program, EMPTY_LIBRARY, start_x,
                        empty_grid(scene.width, scene.height))
    if frozenset(placed) != scene.blocks:
        raise ProgramError("scene is not reproducible in canonical order")
    return program


def validate_constructible(scene: Scene) -> bool:
    """True iff executing the canonical ordering rebuilds exactly this scene."""
    start_x = default_start_x(scene)
    program = _tokenize_scene(scene, start_x)
    try:
        _, placed = execute(program, EMPTY_LIBRARY, start_x,
                            empty_grid(scene.width, scene.height))
    except (ProgramError, ValueError):
        return False
    return frozenset(placed) == scene.blocks


def print_program(program: Program) -> str:
    """Surface form, e.g. ``(h (l 1) v v (r 2) chunk1)``; the empty program prints as ''."""
    if not program:
        return ""
    parts = []
    for token in program:
        if is_move(token):
            parts.append(f"({token[0]} {token[1:]})")
        else:
            parts.append(token)
    return "(" + " ".join(parts) + ")"


def parse_program(text: str) -> Program:
    """Parse the surface form back into tokens."""
    stripped = text.strip()
    if not stripped:
        return ()
    if stripped.startswith("(") and stripped.endswith(")"):
        stripped = stripped[1:-1]
    tokens: list[Token] = []
    pieces = stripped.replace("(", " ( ").replace(")", " ) ").split()
    i = 0
    while i < len(pieces):
        piece = pieces[i]
        if piece == "(":
            if i + 3 >= len(pieces) or pieces[i + 3] != ")":
                raise ProgramError(f"malformed move near {' '.join(pieces[i:i + 4])!r}")
            direction, magnitude = pieces[i + 1], pieces[i + 2]
            if direction not in ("l", "r") or not magnitude.isdigit():
                raise ProgramError(f"malformed move ({direction} {magnitude})")
            if not (1 <= int(magnitude) <= 9):
                raise ProgramError(f"move magnitude {magnitude} outside 1..9")
            tokens.append(f"{direction}{magnitude}")
            i += 4
        elif piece == ")":
            raise ProgramError("unbalanced ')'")
        else:
            if is_move(piece):
                tokens.append(piece)
            elif piece in (PLACE_H, PLACE_V) or re.fullmatch(r"\w+", piece):
                tokens.append(piece)
            else:
                raise ProgramError(f"malformed token {piece!r}")
            i += 1
    return tuple(tokens)
