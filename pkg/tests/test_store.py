import json
import math
import os

import numpy as np
import pytest

from src.errors import ArtifactExists, MissingArtifacts
from src.selfsimilar import SelfSimilarFrame
from src.solver.estimate import BlowupEstimate
from src.solver.grid import Snapshot
from src.store import ArtifactStore
from src.store.artifacts import MANIFEST, dumps, table_text
from src.store.codec import (
    decode_float,
    encode_float,
    estimate_from_dict,
    estimate_to_dict,
    frame_from_dict,
    frame_to_dict,
    plain,
    snapshot_from_dict,
    snapshot_to_dict,
)


@pytest.fixture
def store(tmp_path):
    store = ArtifactStore(str(tmp_path / "run"))
    store.prepare()
    return store


class TestCodec:
    def test_non_finite_values(self):
        assert encode_float(math.inf) == "inf"
        assert encode_float(-math.inf) == "-inf"
        assert encode_float(math.nan) == "nan"
        assert decode_float("-inf") == -math.inf
        assert math.isnan(decode_float("nan"))

    def test_seventeen_digits_are_exact(self):
        x = 0.1 + 0.2
        assert decode_float(encode_float(x)) == x

    def test_snapshot_with_wall_sentinel(self):
        snap = Snapshot(t=0.25, phi=np.array([5.0, 3.0, -math.inf]), umax=2.0, step_index=7, log_dt_prev=-3.5)
        back = snapshot_from_dict(json.loads(json.dumps(snapshot_to_dict(snap))))
        np.testing.assert_array_equal(back.phi, snap.phi)
        assert (back.t, back.umax, back.step_index, back.log_dt_prev) == (0.25, 2.0, 7, -3.5)
        assert back.repr == "phi_space"

    def test_first_snapshot_has_no_interval(self):
        snap = Snapshot(t=0.0, phi=np.array([1.0, 0.0]), umax=1.0, step_index=0)
        assert snapshot_to_dict(snap)["log_dt_prev"] == "nan"

    def test_frame(self):
        y = np.linspace(0.0, 2.0, 5)
        frame = SelfSimilarFrame(s=12.5, alpha=0.25, y=y, v=np.exp(-y), source_t=0.1, n=2, index=3, truncated=True)
        data = frame_to_dict(frame)
        assert set(data) == {"s", "alpha", "y_nodes", "v", "source_t", "n", "index", "truncated"}
        back = frame_from_dict(data)
        np.testing.assert_array_equal(back.v, frame.v)
        assert (back.s, back.n, back.index, back.truncated) == (12.5, 2, 3, True)

    def test_estimate(self):
        est = BlowupEstimate(0.3, -20.0, "aitken", 1e-12, 3e-12, False, [-1.0, -20.0], [1.0, 1.0, 1.0])
        assert estimate_from_dict(estimate_to_dict(est)) == est

    def test_plain(self):
        data = plain({"a": np.float64(1.5), "b": (np.int64(2), math.inf), 3: np.bool_(True), "c": [math.nan]})
        assert data == {"a": 1.5, "b": [2, "inf"], "3": True, "c": ["nan"]}
        json.dumps(data, allow_nan=False)


class TestArtifactStore:
    def test_prepare_creates_layout(self, store):
        for sub in ("snapshots", "frames", "ledgers"):
            assert os.path.isdir(store.path(sub))

    def test_atomic_write_leaves_no_temporary(self, store):
        store.write_json("snapshots/snapshot_0000.json", {"b": 1, "a": 2})
        assert os.listdir(store.path("snapshots")) == ["snapshot_0000.json"]
        with open(store.path("snapshots/snapshot_0000.json"), encoding="utf-8") as f:
            assert f.read() == '{\n  "a": 2,\n  "b": 1\n}\n'

    def test_tables(self, store):
        rows = [[1.0, 2.5], [3.0, math.inf]]
        store.write_table("ledgers/t.csv", ("x", "y"), rows)
        back = store.read_table("ledgers/t.csv")
        np.testing.assert_array_equal(back, rows)
        assert table_text(("x", "y"), rows).splitlines()[0] == "x,y"

    def test_single_row_table_keeps_its_shape(self, store):
        store.write_table("ledgers/one.csv", ("a", "b", "c"), [[1.0, 2.0, 3.0]])
        assert store.read_table("ledgers/one.csv").shape == (1, 3)

    def test_manifest_digests_verify(self, store):
        store.write_json("frames/frame_0000.json", {"s": "1"})
        store.save_manifest({"run_id": "abc"})
        manifest = store.load_manifest()
        assert manifest["run_id"] == "abc"
        assert set(manifest["artifacts"]) == {"frames/frame_0000.json"}
        assert "created_at" in manifest
        assert store.verify() == {"frames/frame_0000.json": True}

        with open(store.path("frames/frame_0000.json"), "w", encoding="utf-8") as f:
            f.write("{}\n")
        assert store.verify() == {"frames/frame_0000.json": False}

    def test_manifest_merges_sessions(self, store):
        store.write_json("snapshots/estimate.json", {})
        store.save_manifest({"estimate": 1})
        later = ArtifactStore(store.root)
        later.write_json("frames/frame_0001.json", {})
        later.save_manifest({"frames": 1})
        manifest = later.load_manifest()
        assert set(manifest["artifacts"]) == {"snapshots/estimate.json", "frames/frame_0001.json"}
        assert manifest["estimate"] == 1 and manifest["frames"] == 1

    def test_existing_run_needs_force(self, store):
        store.write_json("snapshots/snapshot_0000.json", {})
        store.save_manifest()
        with pytest.raises(ArtifactExists):
            ArtifactStore(store.root).prepare()
        ArtifactStore(store.root).prepare(force=True)
        assert not os.path.exists(store.path(MANIFEST))
        assert os.listdir(store.path("snapshots")) == []

    def test_clear_and_list(self, store):
        for k in range(3):
            store.write_json(f"frames/frame_{k:04d}.json", {})
        store.write_json("frames/other.json", {})
        assert store.list("frames", "frame_") == [f"frames/frame_{k:04d}.json" for k in range(3)]
        store.clear("frames", "frame_")
        assert store.list("frames", "") == ["frames/other.json"]
        assert "frames/frame_0000.json" not in store.entries

    def test_require(self, store):
        store.require({"snapshots": ["snapshots/snapshot_0000.json"]})
        with pytest.raises(MissingArtifacts) as info:
            store.require({"frames": [], "energy": [], "snapshots": ["x"]})
        assert info.value.missing == ["energy", "frames"]

    def test_corrupted_manifest_starts_over(self, store):
        with open(store.path(MANIFEST), "w", encoding="utf-8") as f:
            f.write("{not json")
        assert store.load_manifest() == {}

    def test_dumps_is_canonical(self):
        assert dumps({"b": [1, 2], "a": "é"}) == '{\n  "a": "é",\n  "b": [\n    1,\n    2\n  ]\n}\n'
