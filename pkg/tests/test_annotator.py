"""Region extraction, boundary tracing, category voting, segment assembly."""

import numpy as np
import pytest

from conftest import boundary_edge_set, fill_holes, grow_blob, has_hole, random_scene, ring_edge_set
from geopanoptic.annotator import (
    AllVoidError,
    AllVoidWarning,
    CategoryEntry,
    CategoryRegistry,
    annotate_tile,
    assign_category,
    build_segments,
    decode_panoptic_id,
    encode_panoptic_id,
    extract_regions,
    id_map_to_rgb,
    rgb_to_id_map,
    trace_outer_boundaries,
)
from geopanoptic.errors import IdOverflowError
from geopanoptic.maskops import fill_rings


# --- region extraction ------------------------------------------------------


def test_extract_regions_groups_by_value():
    seq = np.zeros((4, 4), np.uint16)
    seq[0, 0] = 7
    seq[1, 0] = 7
    regions = extract_regions(seq)
    assert list(regions) == [7]
    assert regions[7].sum() == 2


def test_extract_regions_multipart_same_value():
    seq = np.zeros((4, 4), np.uint16)
    seq[0, 0] = 9
    seq[3, 3] = 9
    regions = extract_regions(seq)
    assert list(regions) == [9]
    assert regions[9].sum() == 2


def test_extract_regions_empty():
    assert extract_regions(np.zeros((4, 4), np.uint16)) == {}


# --- boundary tracing ---------------------------------------------------------


def test_single_pixel_ring():
    m = np.zeros((10, 10), bool)
    m[7, 5] = True
    assert trace_outer_boundaries(m) == [[(5, 7), (5, 8), (6, 8), (6, 7)]]


def test_square_ring_merges_collinear():
    m = np.zeros((4, 4), bool)
    m[0:2, 0:2] = True
    assert trace_outer_boundaries(m) == [[(0, 0), (0, 2), (2, 2), (2, 0)]]


def test_l_tromino_ring_matches_edge_oracle():
    m = np.zeros((4, 4), bool)
    m[0, 0] = m[0, 1] = m[1, 1] = True  # {(0,0),(1,0),(1,1)} as (col,row)
    rings = trace_outer_boundaries(m)
    assert len(rings) == 1 and len(rings[0]) == 6
    assert ring_edge_set(rings) == boundary_edge_set(m)


def test_rings_are_counterclockwise_interior_left():
    # signed shoelace of the traced orientation is negative in y-down coords
    m = np.zeros((6, 6), bool)
    m[1:4, 2:5] = True
    (ring,) = trace_outer_boundaries(m)
    area2 = sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(ring, ring[1:] + ring[:1]))
    assert area2 == -2 * 9


def test_random_blobs_ring_equals_edge_oracle():
    rng = np.random.default_rng(0)
    for _ in range(40):
        m = grow_blob(rng, 12, 12, int(rng.integers(1, 40)))
        rings = trace_outer_boundaries(m)
        assert ring_edge_set(rings) == boundary_edge_set(m)
        assert all(len(r) >= 4 for r in rings)


def test_rasterization_inverse_hole_free():
    rng = np.random.default_rng(1)
    for _ in range(60):
        m = grow_blob(rng, 16, 16, int(rng.integers(1, 80)))
        assert not has_hole(m)
        rings = trace_outer_boundaries(m)
        assert np.array_equal(fill_rings(rings, 16, 16), m)


def test_rasterization_superset_with_holes():
    rng = np.random.default_rng(2)
    found = 0
    for _ in range(400):
        m = rng.random((10, 10)) < 0.55
        m = fill_holes(m) & m  # keep as-is; just need some mask
        if not m.any():
            continue
        from scipy import ndimage

        labels, n = ndimage.label(m)
        for comp in range(1, n + 1):
            mask = labels == comp
            if not has_hole(mask):
                continue
            found += 1
            filled = fill_rings(trace_outer_boundaries(mask), 10, 10)
            hole = fill_holes(mask) & ~mask
            assert np.array_equal(filled, mask | hole)
            assert filled.sum() - mask.sum() == hole.sum()
        if found >= 10:
            break
    assert found >= 10


def test_pinch_touching_hole_stays_separate():
    # hole cell diagonally adjacent to the outside: the hole loop must not
    # merge into the outer ring through the pinch vertex
    m = np.zeros((5, 5), bool)
    for c, r in [(1, 1), (1, 0), (2, 0), (3, 0), (3, 1), (3, 2), (2, 2)]:
        m[r, c] = True
    (ring,) = trace_outer_boundaries(m)
    assert len(set(ring)) == len(ring)  # simple ring, no revisited vertex
    filled = fill_rings([ring], 5, 5)
    extra = filled & ~m
    assert extra.sum() == 1 and extra[1, 2]  # exactly the enclosed hole cell


def test_multipart_region_gets_one_ring_per_component():
    m = np.zeros((8, 8), bool)
    m[0, 0] = True
    m[5:7, 5:7] = True
    rings = trace_outer_boundaries(m)
    assert len(rings) == 2


# --- category voting ------------------------------------------------------------


def test_majority_vote():
    m = np.ones((2, 5), bool)
    sem = np.zeros((2, 5), np.uint8)
    sem[0, :] = 6
    sem[1, :] = 6
    assert assign_category(m, sem) == 6


def test_majority_vote_counts():
    # 7 pixels of label 6 vs 3 of label 13
    m = np.ones((1, 10), bool)
    sem = np.array([[6, 6, 6, 6, 6, 6, 6, 13, 13, 13]], np.uint8)
    assert assign_category(m, sem) == 6


def test_vote_tie_breaks_small_label():
    m = np.ones((1, 4), bool)
    sem = np.array([[13, 6, 13, 6]], np.uint8)
    assert assign_category(m, sem) == 6


def test_vote_ignores_void_and_raises_when_all_void():
    m = np.ones((1, 3), bool)
    sem = np.array([[0, 0, 13]], np.uint8)
    assert assign_category(m, sem) == 13
    with pytest.raises(AllVoidError):
        assign_category(m, np.zeros((1, 3), np.uint8))


# --- segment assembly -------------------------------------------------------------


def test_build_segments_counts_and_order(registry):
    seq = np.zeros((8, 8), np.uint16)
    sem = np.zeros((8, 8), np.uint8)
    sem[:4] = 1
    sem[4:] = 2
    for i, (r, c) in enumerate([(0, 0), (2, 2), (6, 6)], start=1):
        seq[r, c] = i
        sem[r, c] = 6
    segments = build_segments(seq, sem, registry)
    assert [s.segment_id for s in segments] == [1, 2, 3, 4, 5]
    assert [s.category for s in segments] == [1, 2, 6, 6, 6]


def test_build_segments_empty_tile(registry):
    segments = build_segments(np.zeros((4, 4), np.uint16), np.zeros((4, 4), np.uint8), registry)
    assert segments == []


def test_single_pixel_thing_record(registry):
    seq = np.zeros((8, 8), np.uint16)
    sem = np.zeros((8, 8), np.uint8)
    seq[3, 2] = 5
    sem[3, 2] = 6
    (seg,) = build_segments(seq, sem, registry)
    assert seg.area == 1
    assert seg.bbox == (2, 3, 1, 1)
    assert seg.category == 6
    assert len(seg.polygons) == 1 and len(seg.polygons[0]) == 4
    assert seg.iscrowd == 0


def test_all_void_thing_dropped_with_warning(registry):
    seq = np.zeros((4, 4), np.uint16)
    sem = np.zeros((4, 4), np.uint8)
    seq[1, 1] = 9
    with pytest.warns(AllVoidWarning):
        ann = annotate_tile(seq, sem, registry)
    assert ann.segments == []
    assert ann.skipped == [(9, "all-void")]


def test_thing_area_sum_equals_nonzero_pixels(registry):
    rng = np.random.default_rng(3)
    for _ in range(20):
        seq, sem = random_scene(rng, size=24)
        ann = annotate_tile(seq, sem, registry)
        thing_area = sum(
            s.area for s in ann.segments if registry.is_thing(s.category)
        )
        assert thing_area == int((seq != 0).sum())


def test_bbox_tightness(registry):
    rng = np.random.default_rng(4)
    for _ in range(20):
        seq, sem = random_scene(rng, size=20)
        for seg in annotate_tile(seq, sem, registry).segments:
            x, y, w, h = seg.bbox
            xs = [vx for ring in seg.polygons for vx, _ in ring]
            ys = [vy for ring in seg.polygons for _, vy in ring]
            assert min(xs) == x and max(xs) == x + w
            assert min(ys) == y and max(ys) == y + h


def test_id_map_partitions_non_void(registry):
    rng = np.random.default_rng(5)
    for _ in range(20):
        seq, sem = random_scene(rng, size=24)
        ann = annotate_tile(seq, sem, registry)
        claimed = ann.id_map > 0
        non_void = (sem != 0) | (seq != 0)
        # stuff pixels under things belong to the thing segment
        assert np.array_equal(claimed, non_void)
        ids = {s.segment_id for s in ann.segments}
        assert {int(v) for v in np.unique(ann.id_map) if v != 0} == ids
        for seg in ann.segments:
            assert int((ann.id_map == seg.segment_id).sum()) == seg.area


# --- panoptic id codec --------------------------------------------------------------


def test_panoptic_id_examples():
    assert encode_panoptic_id(0) == (0, 0, 0)
    assert encode_panoptic_id(66051) == (3, 2, 1)
    for i in (1, 255, 256, 65535, 16777215):
        assert decode_panoptic_id(encode_panoptic_id(i)) == i


def test_panoptic_id_overflow():
    with pytest.raises(IdOverflowError):
        encode_panoptic_id(256**3)
    with pytest.raises(IdOverflowError):
        encode_panoptic_id(-1)


def test_id_image_round_trip():
    rng = np.random.default_rng(6)
    ids = rng.integers(0, 256**3, (9, 9), dtype=np.int64)
    assert np.array_equal(rgb_to_id_map(id_map_to_rgb(ids)), ids)


# --- registry ------------------------------------------------------------------------


def test_registry_rejects_duplicates_and_void_entry():
    with pytest.raises(ValueError):
        CategoryRegistry(entries=(CategoryEntry(1, "a", False), CategoryEntry(1, "b", True)))
    with pytest.raises(ValueError):
        CategoryRegistry(entries=(CategoryEntry(0, "a", False), CategoryEntry(1, "b", True)))


def test_registry_needs_thing_and_stuff():
    with pytest.raises(ValueError):
        CategoryRegistry(entries=(CategoryEntry(1, "a", False),))
    with pytest.raises(ValueError):
        CategoryRegistry(entries=(CategoryEntry(1, "a", True),))


def test_registry_json_round_trip(registry):
    assert CategoryRegistry.from_json_obj(registry.to_json_obj()) == registry
