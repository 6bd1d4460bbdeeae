import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towertalk.blockworld import (
    HORIZONTAL,
    VERTICAL,
    BlockPlacement,
    PlacementError,
    Scene,
    SceneGeometry,
    compose_scene,
    drop_block,
    empty_grid,
    f1_score,
    is_supported,
    load_stimuli,
    parse_ascii,
    render_ascii,
    save_stimuli,
    scene_from_dict,
    scene_to_dict,
    validate_stimulus,
)
from towertalk.dsl import validate_constructible


def test_drop_vertical_on_ground():
    grid = drop_block(empty_grid(), VERTICAL, 0)
    assert grid.placements == (BlockPlacement(0, 0, VERTICAL),)
    assert grid.column_heights[0] == 2


def test_drop_stacks_on_previous_block():
    grid = drop_block(empty_grid(), VERTICAL, 0)
    grid = drop_block(grid, VERTICAL, 0)
    assert grid.placements[-1] == BlockPlacement(0, 2, VERTICAL)
    assert grid.column_heights[0] == 4


def test_horizontal_rests_on_taller_column():
    grid = drop_block(empty_grid(), VERTICAL, 0)  # heights (2, 0, ...)
    grid = drop_block(grid, HORIZONTAL, 0)
    assert grid.placements[-1] == BlockPlacement(0, 2, HORIZONTAL)
    assert grid.column_heights[0] == grid.column_heights[1] == 3


def test_drop_out_of_bounds_raises():
    grid = empty_grid(width=4, height=8)
    with pytest.raises(PlacementError):
        drop_block(grid, HORIZONTAL, 3)
    with pytest.raises(PlacementError):
        drop_block(grid, VERTICAL, -1)


def test_drop_over_height_raises():
    grid = empty_grid(width=4, height=4)
    grid = drop_block(grid, VERTICAL, 0)
    grid = drop_block(grid, VERTICAL, 0)
    with pytest.raises(PlacementError):
        drop_block(grid, VERTICAL, 0)


def test_drop_is_pure():
    grid = empty_grid()
    first = drop_block(grid, VERTICAL, 2)
    second = drop_block(grid, VERTICAL, 2)
    assert first == second
    assert grid.placements == ()


@given(st.lists(st.tuples(st.sampled_from([HORIZONTAL, VERTICAL]),
                          st.integers(min_value=0, max_value=12)),
                max_size=20))
@settings(max_examples=200)
def test_support_soundness_after_any_drop_sequence(drops):
    grid = empty_grid()
    for orientation, x in drops:
        try:
            grid = drop_block(grid, orientation, x)
        except PlacementError:
            continue
    assert is_supported(grid.placements)
    # column_heights match the derived occupancy
    cells = grid.occupied_cells()
    for col in range(grid.width):
        rows = [y for (x, y) in cells if x == col]
        assert grid.column_heights[col] == (max(rows) + 1 if rows else 0)


def test_stimuli_are_three_valid_towers(towers):
    assert len(towers) == 3
    assert {t.id for t in towers} == {"A", "B", "C"}
    for tower in towers:
        validate_stimulus(tower)
        vertical = sum(1 for b in tower.blocks if b.orientation == VERTICAL)
        horizontal = sum(1 for b in tower.blocks if b.orientation == HORIZONTAL)
        assert (vertical, horizontal) == (2, 2)


def test_stimuli_are_constructible(tower_scene):
    for tower_id in "ABC":
        assert validate_constructible(tower_scene(tower_id))


def test_compose_has_eight_blocks(towers_by_id):
    scene = compose_scene(towers_by_id["A"], towers_by_id["C"])
    assert len(scene.blocks) == 8


def test_compose_is_order_sensitive(towers_by_id):
    left = compose_scene(towers_by_id["A"], towers_by_id["C"])
    right = compose_scene(towers_by_id["C"], towers_by_id["A"])
    assert left.blocks != right.blocks


def test_compose_same_tower_twice_is_legal(towers_by_id):
    scene = compose_scene(towers_by_id["A"], towers_by_id["A"])
    assert len(scene.blocks) == 8


def test_compose_rejects_overlap(towers_by_id):
    tight = SceneGeometry(width=14, height=8, left_origin=0, right_origin=1)
    with pytest.raises(ValueError):
        compose_scene(towers_by_id["A"], towers_by_id["A"], tight)


def test_compose_rejects_out_of_bounds(towers_by_id):
    short = SceneGeometry(width=14, height=2, left_origin=0, right_origin=8)
    with pytest.raises(ValueError):
        compose_scene(towers_by_id["A"], towers_by_id["B"], short)


def test_f1_identical_scenes(towers_by_id):
    scene = compose_scene(towers_by_id["A"], towers_by_id["B"])
    assert f1_score(scene, scene) == 1.0


def test_f1_one_block_out_of_place(towers_by_id):
    target = compose_scene(towers_by_id["A"], towers_by_id["B"])
    blocks = sorted(target.blocks)
    built = set(blocks[:-1]) | {BlockPlacement(12, 0, VERTICAL)}
    built_scene = Scene(target.width, target.height, frozenset(built))
    assert f1_score(target, built_scene) == pytest.approx(0.875, abs=1e-12)


def test_f1_disjoint_scenes():
    a = Scene(6, 6, frozenset({BlockPlacement(0, 0, VERTICAL)}))
    b = Scene(6, 6, frozenset({BlockPlacement(3, 0, VERTICAL)}))
    assert f1_score(a, b) == 0.0


def test_f1_both_empty():
    empty = Scene(4, 4, frozenset())
    assert f1_score(empty, empty) == 1.0


def test_f1_swap_invariance(towers_by_id):
    target = compose_scene(towers_by_id["A"], towers_by_id["B"])
    partial = Scene(target.width, target.height, frozenset(sorted(target.blocks)[:5]))
    assert f1_score(target, partial) == pytest.approx(f1_score(partial, target))


def test_f1_adding_correct_block_never_decreases(towers_by_id):
    target = compose_scene(towers_by_id["A"], towers_by_id["B"])
    blocks = sorted(target.blocks)
    previous = 0.0
    for n in range(1, 9):
        built = Scene(target.width, target.height, frozenset(blocks[:n]))
        score = f1_score(target, built)
        assert score >= previous
        previous = score


def test_render_empty_scene():
    scene = Scene(3, 2, frozenset())
    assert render_ascii(scene) == "...\n..."


def test_render_single_vertical():
    scene = Scene(3, 3, frozenset({BlockPlacement(0, 0, VERTICAL)}))
    assert render_ascii(scene) == "...\n|..\n|.."


def test_render_parse_round_trip(towers_by_id):
    for left in "ABC":
        for right in "ABC":
            if left == right:
                continue
            scene = compose_scene(towers_by_id[left], towers_by_id[right])
            assert parse_ascii(render_ascii(scene)).blocks == scene.blocks


def test_scene_dict_round_trip(towers_by_id):
    scene = compose_scene(towers_by_id["B"], towers_by_id["C"])
    assert scene_from_dict(scene_to_dict(scene)) == scene


def test_stimulus_file_round_trip(tmp_path, towers):
    path = tmp_path / "stimuli.json"
    save_stimuli(towers, str(path))
    loaded = load_stimuli(str(path))
    assert loaded == towers


def test_load_stimuli_rejects_bad_tower(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{"towers": [{"id": "A", "blocks": ['
        '{"x": 0, "y": 0, "orientation": "vertical"},'
        '{"x": 0, "y": 2, "orientation": "vertical"},'
        '{"x": 2, "y": 0, "orientation": "vertical"},'
        '{"x": 2, "y": 2, "orientation": "vertical"}]}]}')
    with pytest.raises(ValueError):
        load_stimuli(str(path))
