# Copyright 2026 The bayesseg Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import bayesseg


def test_grid_and_step_size():
    assert len(bayesseg.build_grid(1600, 1200, 160, 10)) == 15225
    assert bayesseg.build_grid(165, 160, 160, 10) == [(0, 0, 160), (5, 0, 160)]
    assert [bayesseg.step_size(h, 160, 0.4) for h in (0.0, 0.4, 1.0)] == [160, 97, 7]


def test_entropy_and_threshold():
    pmap = np.array([[[1 / 3, 1 / 3, 1 / 3], [1.0, 0.0, 0.0], [0.5, 0.5, 0.0]]], dtype=np.float32)
    raw = bayesseg.entropy_map(pmap)
    assert raw[0, 0] == pytest.approx(math.log(3), abs=1e-6)
    umap = bayesseg.uncertainty_map(pmap)
    assert umap[0, 1] == 0.0
    assert umap[0, 2] == pytest.approx(math.log(2) / math.log(3), abs=1e-6)
    assert bayesseg.threshold(umap, 0.65).tolist() == [[0, 1, 1]]
    assert bayesseg.argmax_labels(pmap).tolist() == [[0, 0, 0]]


def test_reliability_hand_case():
    truth = np.array([[0, 1, 2, 0, 1, 2, 0, 1, 2, 0]], dtype=np.uint8)
    pred = np.array([[1, 2, 0, 1, 1, 2, 0, 1, 2, 2]], dtype=np.uint8)
    certain = np.array([[0, 0, 0, 0, 0, 0, 1, 1, 1, 1]], dtype=np.uint8)
    r = bayesseg.reliability(pred, truth, certain)
    assert (r["tp"], r["fp"], r["tn"], r["fn"]) == (4, 2, 3, 1)
    assert r["npv"] == 0.75 and r["tpr"] == 0.8 and r["ua"] == 0.7


def test_undefined_metric_is_none():
    labels = np.zeros((2, 2), dtype=np.uint8)
    r = bayesseg.reliability(labels, labels, np.zeros((2, 2), dtype=np.uint8))
    assert r["npv"] is None


def test_model_predict_and_roundtrip(tmp_path):
    data = bayesseg.generate_dataset(48, 32, 3, seed=4)
    assert [d[0] for d in data] == ["img000", "img001", "img002"]
    image, labels = data[0][1], data[0][2]
    assert image.shape == (32, 48) and labels.dtype == np.uint8

    model = bayesseg.Model.initialize(tile_size=16, depth=1, base_channels=2, seed=1)
    model = bayesseg.train_stage(model, data[:2], data[2:], epochs=1, lr=5e-3, batch_size=4, stride=8, seed=2)
    pmap = model.predict_image(image, stride=8, mc_samples=3, seed=5)
    assert pmap.shape == (32, 48, 3)
    np.testing.assert_allclose(pmap.sum(axis=2), 1.0, atol=1e-5)
    np.testing.assert_array_equal(pmap, model.predict_image(image, stride=8, mc_samples=3, seed=5))

    path = tmp_path / "m.bnet"
    model.save(path)
    again = bayesseg.Model.load(path)
    np.testing.assert_array_equal(again.predict_image(image, stride=8, mc_samples=3, seed=5), pmap)

    bayesseg.save_pmap(tmp_path / "p.pmap", pmap)
    np.testing.assert_array_equal(bayesseg.load_pmap(tmp_path / "p.pmap"), pmap)
    report = model.evaluate(data[2:], stride=8, mc_samples=3)
    assert report["tp"] + report["fp"] + report["tn"] + report["fn"] == 32 * 48


def test_plan_is_denser_where_uncertain():
    umap = np.zeros((64, 96), dtype=np.float32)
    plan_flat = bayesseg.build_plan(umap, 16)
    umap[:, 48:] = 1.0
    plan = bayesseg.build_plan(umap, 16)
    assert len(plan) > len(plan_flat)
    assert sum(1 for x, _, _ in plan if x >= 48) > sum(1 for x, _, _ in plan if x < 32)


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(FileNotFoundError):
        bayesseg.load_umap(tmp_path / "missing.umap")
    (tmp_path / "bad.umap").write_bytes(b"PMAP1 1 1 3\n")
    with pytest.raises(ValueError):
        bayesseg.load_umap(tmp_path / "bad.umap")
    with pytest.raises(ValueError):
        bayesseg.build_grid(10, 10, 20, 1)
