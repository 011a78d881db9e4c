import random

import numpy as np
import pytest

from iridescan import imaging
from iridescan.dataset import (
    AnnotatedImage,
    AugmentOp,
    AugmentationSpec,
    Dataset,
    SplitError,
    VocParseError,
    augment,
    dominant_class,
    load_dataset,
    parse_voc,
    save_dataset,
    split_dataset,
    write_voc,
)
from iridescan.domain import BoundingBox, DefectClass

from conftest import build_frame

JUNCTION = DefectClass("Junction")
MISALIGNED = DefectClass("Misaligned Junction")


def random_annotated_image(rng, max_objects=4):
    width = rng.randrange(8, 40)
    height = rng.randrange(8, 40)
    objects = []
    for _ in range(rng.randrange(0, max_objects + 1)):
        x0 = rng.randrange(0, width - 1)
        y0 = rng.randrange(0, height - 1)
        x1 = rng.randrange(x0 + 1, width + 1)
        y1 = rng.randrange(y0 + 1, height + 1)
        objects.append((rng.choice([JUNCTION, MISALIGNED]), BoundingBox(x0, y0, x1, y1)))
    return AnnotatedImage(
        image_ref=f"img_{rng.randrange(10**6)}.ppm",
        width=width,
        height=height,
        objects=tuple(objects),
    )


class TestVoc:
    def test_voc_one_based_coordinates(self):
        xml = """
        <annotation>
          <filename>a.ppm</filename>
          <size><width>20</width><height>20</height><depth>3</depth></size>
          <object>
            <name>Junction</name>
            <bndbox><xmin>1</xmin><ymin>1</ymin><xmax>10</xmax><ymax>10</ymax></bndbox>
          </object>
        </annotation>
        """
        image = parse_voc(xml)
        assert image.objects == ((JUNCTION, BoundingBox(0, 0, 10, 10)),)

    def test_zero_objects(self):
        xml = """
        <annotation>
          <filename>b.ppm</filename>
          <size><width>4</width><height>4</height></size>
        </annotation>
        """
        assert parse_voc(xml).objects == ()

    def test_unknown_elements_ignored(self):
        xml = """
        <annotation>
          <filename>c.ppm</filename>
          <segmented>0</segmented>
          <size><width>8</width><height>8</height></size>
          <object>
            <name>Junction</name>
            <pose>left</pose>
            <bndbox><xmin>2</xmin><ymin>2</ymin><xmax>5</xmax><ymax>5</ymax></bndbox>
          </object>
        </annotation>
        """
        image = parse_voc(xml)
        assert image.objects[0][1] == BoundingBox(1, 1, 5, 5)

    def test_malformed_xml(self):
        with pytest.raises(VocParseError, match="malformed"):
            parse_voc("<annotation><unclosed>")

    def test_missing_size(self):
        with pytest.raises(VocParseError, match="size"):
            parse_voc("<annotation><filename>x</filename></annotation>")

    def test_missing_bndbox_has_element_path(self):
        xml = """
        <annotation>
          <filename>d.ppm</filename>
          <size><width>8</width><height>8</height></size>
          <object><name>Junction</name></object>
        </annotation>
        """
        with pytest.raises(VocParseError, match=r"object\[0\]"):
            parse_voc(xml)

    def test_box_outside_image(self):
        xml = """
        <annotation>
          <filename>e.ppm</filename>
          <size><width>8</width><height>8</height></size>
          <object>
            <name>Junction</name>
            <bndbox><xmin>1</xmin><ymin>1</ymin><xmax>9</xmax><ymax>5</ymax></bndbox>
          </object>
        </annotation>
        """
        with pytest.raises(VocParseError, match="outside image bounds"):
            parse_voc(xml)

    def test_write_contains_one_object_per_annotation(self):
        image = AnnotatedImage("f.ppm", 10, 10, ((JUNCTION, BoundingBox(0, 0, 5, 5)),))
        xml = write_voc(image, "f.ppm")
        assert xml.count("<object>") == 1

    def test_write_empty_objects(self):
        image = AnnotatedImage("g.ppm", 10, 10, ())
        assert "<object>" not in write_voc(image, "g.ppm")

    def test_round_trip_100_random_fixtures(self):
        rng = random.Random(20)
        for _ in range(100):
            image = random_annotated_image(rng)
            reparsed = parse_voc(write_voc(image, image.image_ref))
            assert reparsed == image
            # write -> parse -> write is also a fixed point
            assert write_voc(reparsed, reparsed.image_ref) == write_voc(image, image.image_ref)


class TestAugment:
    def setup(self):
        rng = random.Random(21)
        arr = np.array(
            [[[rng.randrange(256) for _ in range(3)] for _ in range(6)] for _ in range(8)],
            dtype=np.uint8,
        )
        image = AnnotatedImage(
            "src.ppm", 6, 8,
            ((JUNCTION, BoundingBox(1, 2, 4, 7)), (MISALIGNED, BoundingBox(0, 0, 2, 2))),
        )
        return image, build_frame(arr), arr

    def test_brightness_one_is_identity(self):
        image, frame, arr = self.setup()
        [(out_image, out_frame)] = augment(
            image, frame, AugmentationSpec((AugmentOp.brightness(1.0),)), seed=0
        )
        assert out_frame.pixels == frame.pixels
        assert out_image.objects == image.objects

    def test_hflip_is_involution(self):
        image, frame, _ = self.setup()
        [(once_img, once_frame)] = augment(
            image, frame, AugmentationSpec((AugmentOp.hflip(),)), seed=0
        )
        [(twice_img, twice_frame)] = augment(
            once_img, once_frame, AugmentationSpec((AugmentOp.hflip(),)), seed=0
        )
        assert twice_frame.pixels == frame.pixels
        assert twice_img.objects == image.objects

    def test_rotate90_box_covers_rotated_pixels(self):
        # mark the object pixels, rotate with numpy as the oracle, and check
        # the transformed box covers exactly the marked pixels
        image = AnnotatedImage("r.ppm", 4, 5, ((JUNCTION, BoundingBox(0, 0, 2, 3)),))
        arr = np.zeros((5, 4, 3), dtype=np.uint8)
        arr[0:3, 0:2] = 255
        for turns in (1, 2, 3):
            [(out_image, out_frame)] = augment(
                image, build_frame(arr),
                AugmentationSpec((AugmentOp.rotate90(turns),)), seed=0,
            )
            rotated = np.rot90(arr, turns)
            out_arr = imaging.frame_to_array(out_frame)
            assert np.array_equal(out_arr, rotated)
            marked = np.argwhere(rotated[:, :, 0] == 255)
            box = out_image.objects[0][1]
            assert box.y_min == marked[:, 0].min()
            assert box.y_max == marked[:, 0].max() + 1
            assert box.x_min == marked[:, 1].min()
            assert box.x_max == marked[:, 1].max() + 1

    def test_shift_clips_and_drops(self):
        image = AnnotatedImage(
            "s.ppm", 6, 6,
            ((JUNCTION, BoundingBox(0, 0, 2, 2)), (MISALIGNED, BoundingBox(4, 4, 6, 6))),
        )
        arr = np.zeros((6, 6, 3), dtype=np.uint8)
        [(out_image, _)] = augment(
            image, build_frame(arr),
            AugmentationSpec((AugmentOp.shift(-3, -3),)), seed=0,
        )
        # first object fully exits, second is translated
        assert out_image.objects == ((MISALIGNED, BoundingBox(1, 1, 3, 3)),)

    def test_brightness_clamps(self):
        image = AnnotatedImage("b.ppm", 2, 2, ())
        arr = np.full((2, 2, 3), 200, dtype=np.uint8)
        [(_, out_frame)] = augment(
            image, build_frame(arr),
            AugmentationSpec((AugmentOp.brightness(2.0),)), seed=0,
        )
        assert set(out_frame.pixels) == {255}

    def test_one_output_per_op(self):
        image, frame, _ = self.setup()
        spec = AugmentationSpec((AugmentOp.hflip(), AugmentOp.brightness(0.5),
                                 AugmentOp.rotate90(2)))
        results = augment(image, frame, spec, seed=0)
        assert len(results) == 3
        refs = [img.image_ref for img, _ in results]
        assert len(set(refs)) == 3

    def test_boxes_never_leave_bounds_and_count_never_grows(self):
        rng = random.Random(22)
        for _ in range(40):
            image = random_annotated_image(rng)
            arr = np.zeros((image.height, image.width, 3), dtype=np.uint8)
            ops = [
                AugmentOp.rotate90(rng.randrange(1, 4)),
                AugmentOp.shift(rng.randrange(-image.width + 1, image.width),
                                rng.randrange(-image.height + 1, image.height)),
                AugmentOp.brightness(rng.choice([0.5, 1.0, 1.7])),
                AugmentOp.hflip(),
            ]
            results = augment(image, build_frame(arr), AugmentationSpec(tuple(ops)), seed=1)
            for out_image, _ in results:
                assert len(out_image.objects) <= len(image.objects)
                for _, box in out_image.objects:
                    assert 0 <= box.x_min < box.x_max <= out_image.width
                    assert 0 <= box.y_min < box.y_max <= out_image.height

    def test_invalid_spec_rejected(self):
        image, frame, _ = self.setup()
        from iridescan.dataset import AugmentError
        with pytest.raises(AugmentError):
            augment(image, frame, AugmentationSpec((AugmentOp.rotate90(4),)), seed=0)
        with pytest.raises(AugmentError):
            augment(image, frame, AugmentationSpec((AugmentOp.brightness(0.0),)), seed=0)
        with pytest.raises(AugmentError):
            augment(image, frame, AugmentationSpec((AugmentOp.shift(6, 0),)), seed=0)


def class_dataset(per_class_counts, rng=None):
    """Dataset with one single-object image per entry."""
    rng = rng or random.Random(23)
    images = []
    for cls, count in per_class_counts.items():
        for _ in range(count):
            images.append(
                AnnotatedImage(
                    image_ref=f"{cls.name}-{rng.randrange(10**9)}",
                    width=16, height=16,
                    objects=((cls, BoundingBox(2, 2, 10, 10)),),
                )
            )
    rng.shuffle(images)
    return Dataset(id="ds-s", name="split", classes=tuple(per_class_counts),
                   images=tuple(images))


class TestSplit:
    def test_paper_sized_split_720(self):
        ds = class_dataset({JUNCTION: 360, MISALIGNED: 360})
        out = split_dataset(ds, train_fraction=0.9, seed=42, stratified=True)
        assert len(out.split.train) == 648
        assert len(out.split.test) == 72
        per_class = {JUNCTION.name: 0, MISALIGNED.name: 0}
        for idx in out.split.train:
            per_class[dominant_class(ds.images[idx]).name] += 1
        assert per_class == {JUNCTION.name: 324, MISALIGNED.name: 324}

    def test_paper_sized_split_22(self):
        ds = class_dataset({JUNCTION: 11, MISALIGNED: 11})
        out = split_dataset(ds, train_fraction=9 / 11, seed=7, stratified=True)
        assert len(out.split.train) == 18
        assert len(out.split.test) == 4
        test_classes = [dominant_class(ds.images[i]).name for i in out.split.test]
        assert test_classes.count(JUNCTION.name) == 2
        assert test_classes.count(MISALIGNED.name) == 2

    def test_same_seed_same_split(self):
        ds = class_dataset({JUNCTION: 20, MISALIGNED: 20})
        a = split_dataset(ds, 0.8, seed=99, stratified=True)
        b = split_dataset(ds, 0.8, seed=99, stratified=True)
        assert a.split == b.split

    def test_different_seeds_differ_for_some_seed(self):
        ds = class_dataset({JUNCTION: 10, MISALIGNED: 10})
        base = split_dataset(ds, 0.8, seed=0, stratified=True)
        assert any(
            split_dataset(ds, 0.8, seed=s, stratified=True).split != base.split
            for s in range(1, 6)
        )

    def test_partition_property(self):
        rng = random.Random(24)
        for _ in range(10):
            counts = {JUNCTION: rng.randrange(4, 30), MISALIGNED: rng.randrange(4, 30)}
            ds = class_dataset(counts, rng)
            fraction = rng.choice([0.5, 0.7, 0.8])
            out = split_dataset(ds, fraction, seed=rng.randrange(1000), stratified=True)
            together = sorted(out.split.train + out.split.test)
            assert together == list(range(len(ds.images)))
            for cls, count in counts.items():
                n_train = sum(
                    1 for i in out.split.train if dominant_class(ds.images[i]) == cls
                )
                assert abs(n_train - fraction * count) < 1

    def test_unstratified(self):
        ds = class_dataset({JUNCTION: 10, MISALIGNED: 10})
        out = split_dataset(ds, 0.75, seed=3, stratified=False)
        assert len(out.split.train) == 15
        assert len(out.split.test) == 5

    def test_empty_side_error_names_class(self):
        ds = class_dataset({JUNCTION: 2, MISALIGNED: 20})
        with pytest.raises(SplitError, match="Junction"):
            split_dataset(ds, 0.9, seed=1, stratified=True)

    def test_dominant_class_tie_breaks_by_name(self):
        image = AnnotatedImage(
            "t.ppm", 16, 16,
            ((MISALIGNED, BoundingBox(0, 0, 4, 4)), (JUNCTION, BoundingBox(4, 4, 8, 8))),
        )
        assert dominant_class(image) == JUNCTION


class TestDiskLayout:
    def test_save_and_load(self, tmp_path):
        rng = random.Random(25)
        frames = {}
        images = []
        for i in range(4):
            arr = np.array(
                [[[rng.randrange(256) for _ in range(3)] for _ in range(8)] for _ in range(8)],
                dtype=np.uint8,
            )
            ref = f"blob-{i}"
            frames[ref] = build_frame(arr)
            images.append(
                AnnotatedImage(ref, 8, 8, ((JUNCTION, BoundingBox(1, 1, 5, 5)),))
            )
        ds = Dataset(id="ds-io", name="disk", classes=(JUNCTION,),
                     images=tuple(images))
        ds = split_dataset(ds, 0.75, seed=5, stratified=True)
        save_dataset(ds, tmp_path / "d", frames.__getitem__)
        assert (tmp_path / "d" / "dataset.json").exists()
        assert len(list((tmp_path / "d" / "images").glob("*.ppm"))) == 4
        assert len(list((tmp_path / "d" / "annotations").glob("*.xml"))) == 4
        loaded, loaded_frames = load_dataset(tmp_path / "d")
        assert loaded.id == ds.id
        assert loaded.split == ds.split
        assert [img.objects for img in loaded.images] == [img.objects for img in ds.images]
        for ref, frame in frames.items():
            assert loaded_frames[ref] == frame
