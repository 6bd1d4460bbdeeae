"""Discrete grid world for domino-shaped blocks.

Blocks are 2-cell dominoes dropped into columns under gravity: a block comes
to rest on top of the tallest stack among the columns it covers, so every
block is supported from beneath by at least one occupied cell (or the ground).
Once placed, blocks never move.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple

HORIZONTAL = "horizontal"
VERTICAL = "vertical"

EMPTY_GLYPH = "."
H_GLYPH = "="
V_GLYPH = "|"


class PlacementError(ValueError):
    """A block placement that the grid cannot accept."""


class BlockPlacement(NamedTuple):
    """One placed block; (x, y) is its leftmost (horizontal) or bottom (vertical) cell."""

    x: int
    y: int
    orientation: str

    def cells(self) -> tuple[tuple[int, int], tuple[int, int]]:
        if self.orientation == HORIZONTAL:
            return ((self.x, self.y), (self.x + 1, self.y))
        return ((self.x, self.y), (self.x, self.y + 1))

    def translate(self, dx: int, dy: int = 0) -> "BlockPlacement":
        return BlockPlacement(self.x + dx, self.y + dy, self.orientation)


@dataclass(frozen=True)
class GridState:
    """Immutable build surface: column heights plus the placements that produced them."""

    width: int
    height: int
    column_heights: tuple[int, ...]
    placements: tuple[BlockPlacement, ...]

    def occupied_cells(self) -> set[tuple[int, int]]:
        cells: set[tuple[int, int]] = set()
        for block in self.placements:
            cells.update(block.cells())
        return cells


@dataclass(frozen=True)
class SceneGeometry:
    """Grid extent and the columns where the two towers of a scene are anchored."""

    width: int = 14
    height: int = 8
    left_origin: int = 0
    right_origin: int = 8


@dataclass(frozen=True)
class Scene:
    """An unordered set of placed blocks within a fixed grid extent."""

    width: int
    height: int
    blocks: frozenset[BlockPlacement]

    def occupied_cells(self) -> set[tuple[int, int]]:
        cells: set[tuple[int, int]] = set()
        for block in self.blocks:
            cells.update(block.cells())
        return cells


@dataclass(frozen=True)
class TowerStimulus:
    """A four-block tower (two vertical, two horizontal) in tower-local coordinates."""

    id: str
    blocks: frozenset[BlockPlacement]


DEFAULT_GEOMETRY = SceneGeometry()


def empty_grid(width: int = 14, height: int = 8) -> GridState:
    return GridState(width, height, (0,) * width, ())


def _span_columns(orientation: str, x: int) -> tuple[int, ...]:
    return (x, x + 1) if orientation == HORIZONTAL else (x,)


def drop_block(grid: GridState, orientation: str, x: int) -> GridState:
    """Drop a block into column x; it rests on the tallest stack it covers."""
    if orientation not in (HORIZONTAL, VERTICAL):
        raise PlacementError(f"unknown orientation {orientation!r}")
    columns = _span_columns(orientation, x)
    if x < 0 or columns[-1] >= grid.width:
        raise PlacementError(f"column {x} out of bounds for {orientation} block")
    y = max(grid.column_heights[c] for c in columns)
    top = y + (1 if orientation == HORIZONTAL else 2)
    if top > grid.height:
        raise PlacementError(f"{orientation} block at column {x} would exceed grid height")
    heights = list(grid.column_heights)
    for c in columns:
        heights[c] = top
    block = BlockPlacement(x, y, orientation)
    return GridState(grid.width, grid.height, tuple(heights), grid.placements + (block,))


def is_supported(blocks: Iterable[BlockPlacement]) -> bool:
    """True if every block above ground has ground or another block directly beneath one of its cells."""
    cells: set[tuple[int, int]] = set()
    block_list = list(blocks)
    for block in block_list:
        cells.update(block.cells())
    for block in block_list:
        if block.y == 0:
            continue
        if not any((cx, cy - 1) in cells for cx, cy in block.cells()):
            return False
    return True


def stimulus_towers() -> list[TowerStimulus]:
    """The three default tower stimuli.

    All three carry the same interior motif (a vertical block with a
    horizontal block resting against its right side) so that sub-tower
    structure recurs across towers, but each tower opens and closes
    differently, so no two share a program prefix.
    """
    v = VERTICAL
    h = HORIZONTAL
    towers = [
        # Ledge, motif three columns over, capped back above the ledge.
        TowerStimulus("A", frozenset({
            BlockPlacement(0, 0, h), BlockPlacement(3, 0, v),
            BlockPlacement(4, 0, h), BlockPlacement(0, 1, v),
        })),
        # Column, motif two columns over, shelf back on the column.
        TowerStimulus("B", frozenset({
            BlockPlacement(0, 0, v), BlockPlacement(2, 0, v),
            BlockPlacement(3, 0, h), BlockPlacement(0, 2, h),
        })),
        # Motif at the front (offset one column), column and shelf behind it.
        TowerStimulus("C", frozenset({
            BlockPlacement(1, 0, v), BlockPlacement(2, 0, h),
            BlockPlacement(4, 0, v), BlockPlacement(4, 2, h),
        })),
    ]
    return towers


def validate_stimulus(tower: TowerStimulus) -> None:
    """Raise ValueError unless the tower has 2 vertical + 2 horizontal supported blocks."""
    if len(tower.blocks) != 4:
        raise ValueError(f"tower {tower.id}: expected 4 blocks, got {len(tower.blocks)}")
    n_vertical = sum(1 for b in tower.blocks if b.orientation == VERTICAL)
    if n_vertical != 2:
        raise ValueError(f"tower {tower.id}: expected 2 vertical + 2 horizontal blocks")
    cells: list[tuple[int, int]] = []
    for block in tower.blocks:
        cells.extend(block.cells())
    if len(set(cells)) != len(cells):
        raise ValueError(f"tower {tower.id}: blocks overlap")
    if not is_supported(tower.blocks):
        raise ValueError(f"tower {tower.id}: contains an unsupported block")


def compose_scene(left: TowerStimulus, right: TowerStimulus,
                  geometry: SceneGeometry = DEFAULT_GEOMETRY) -> Scene:
    """Place two towers side by side at the configured origin columns."""
    blocks = {b.translate(geometry.left_origin) for b in left.blocks}
    blocks |= {b.translate(geometry.right_origin) for b in right.blocks}
    if len(blocks) != len(left.blocks) + len(right.blocks):
        raise ValueError("towers overlap after translation")
    cells: list[tuple[int, int]] = []
    for block in blocks:
        cells.extend(block.cells())
    if len(set(cells)) != len(cells):
        raise ValueError("towers overlap after translation")
    for cx, cy in cells:
        if not (0 <= cx < geometry.width and 0 <= cy < geometry.height):
            raise ValueError(f"cell ({cx}, {cy}) falls outside the {geometry.width}x{geometry.height} grid")
    return Scene(geometry.width, geometry.height, frozenset(blocks))


def f1_score(target: Scene, built: Scene) -> float:
    """Harmonic mean of block precision and recall; a match is exact (x, y, orientation)."""
    if not target.blocks and not built.blocks:
        return 1.0
    if not target.blocks or not built.blocks:
        return 0.0
    true_positives = len(target.blocks & built.blocks)
    precision = true_positives / len(built.blocks)
    recall = true_positives / len(target.blocks)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def render_ascii(scene: Scene) -> str:
    """One glyph per cell ('=' horizontal, '|' vertical, '.' empty); bottom row printed last."""
    glyphs: dict[tuple[int, int], str] = {}
    for block in scene.blocks:
        glyph = H_GLYPH if block.orientation == HORIZONTAL else V_GLYPH
        for cell in block.cells():
            glyphs[cell] = glyph
    rows = []
    for y in range(scene.height - 1, -1, -1):
        rows.append("".join(glyphs.get((x, y), EMPTY_GLYPH) for x in range(scene.width)))
    return "\n".join(rows)


def parse_ascii(text: str) -> Scene:
    """Inverse of render_ascii. Domino runs pair up greedily, which is the unique tiling."""
    rows = text.split("\n")
    height = len(rows)
    width = max((len(r) for r in rows), default=0)
    cells: dict[tuple[int, int], str] = {}
    for i, row in enumerate(rows):
        y = height - 1 - i
        for x, ch in enumerate(row):
            if ch != EMPTY_GLYPH:
                cells[(x, y)] = ch
    blocks: set[BlockPlacement] = set()
    seen: set[tuple[int, int]] = set()
    for y in range(height):
        for x in range(width):
            if (x, y) in seen or (x, y) not in cells:
                continue
            glyph = cells[(x, y)]
            if glyph == V_GLYPH:
                partner = (x, y + 1)
                orientation = VERTICAL
            elif glyph == H_GLYPH:
                partner = (x + 1, y)
                orientation = HORIZONTAL
            else:
                raise ValueError(f"unknown glyph {glyph!r} at ({x}, {y})")
            if cells.get(partner) != glyph:
                raise ValueError(f"unpaired {glyph!r} cell at ({x}, {y})")
            blocks.add(BlockPlacement(x, y, orientation))
            seen.update({(x, y), partner})
    return Scene(width, height, frozenset(blocks))


def scene_to_dict(scene: Scene) -> dict:
    blocks = sorted(scene.blocks)
    return {
        "width": scene.width,
        "height": scene.height,
        "blocks": [{"x": b.x, "y": b.y, "orientation": b.orientation} for b in blocks],
    }


def scene_from_dict(data: dict) -> Scene:
    blocks = frozenset(
        BlockPlacement(int(b["x"]), int(b["y"]), str(b["orientation"]))
        for b in data["blocks"]
    )
    return Scene(int(data["width"]), int(data["height"]), blocks)


def save_scene(scene: Scene, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scene(path: str) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))


def load_stimuli(path: str) -> list[TowerStimulus]:
    """Read replacement tower stimuli from a JSON file and validate them."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    towers = []
    for entry in data["towers"]:
        blocks = frozenset(
            BlockPlacement(int(b["x"]), int(b["y"]), str(b["orientation"]))
            for b in entry["blocks"]
        )
        tower = TowerStimulus(str(entry["id"]), blocks)
        validate_stimulus(tower)
        towers.append(tower)
    if len({t.id for t in towers}) != len(towers):
        raise ValueError("duplicate tower ids in stimulus file")
    return towers


def save_stimuli(towers: Iterable[TowerStimulus], path: str) -> None:
    data = {
        "towers": [
            {
                "id": t.id,
                "blocks": [
                    {"x": b.x, "y": b.y, "orientation": b.orientation}
                    for b in sorted(t.blocks)
                ],
            }
            for t in towers
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
