# Copyright 2026 The headkit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math
import pathlib

import numpy as np
import pytest

import headkit

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="module")
def assets():
    return headkit.generate_toy_assets()


def golden_params():
    return headkit.HeadParams.from_json((DATA / "toy_head_params.json").read_text())


def test_zero_params_give_the_template(assets):
    p = headkit.HeadParams.zeros(assets.num_shape, assets.num_expr)
    assert len(p) == assets.num_shape + assets.num_expr + 12
    np.testing.assert_array_equal(headkit.forward_canonical(assets, p), assets.template_mesh)


def test_params_round_trip():
    p = golden_params()
    q = headkit.HeadParams.from_vector(p.to_vector(), 4, 2)
    assert p == q
    assert headkit.HeadParams.from_json(q.to_json()) == p


def test_rotations():
    r = headkit.rot6d_to_matrix(np.array([1.0, 0.0, 0.0, 0.3, 1.0, 0.0]))
    np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)
    pose = headkit.EulerPose(0.4, -0.2, 0.1)
    back = headkit.matrix_to_euler(headkit.euler_to_matrix(pose))
    assert back.yaw == pytest.approx(0.4) and back.pitch == pytest.approx(-0.2)
    a = headkit.axis_angle_to_matrix(np.array([0.0, 0.0, 0.7]))
    assert headkit.geodesic_distance(a, np.eye(3)) == pytest.approx(0.7, abs=1e-12)
    with pytest.raises(headkit.SingularInput):
        headkit.rot6d_to_matrix(np.zeros(6))


def test_losses():
    b = headkit.BBox(0, 0, 2, 2)
    value, grad = headkit.ciou_loss(b, headkit.BBox(1, 1, 3, 3))
    assert value == pytest.approx(1 - 1 / 7 + 1 / 9, abs=1e-12)
    assert grad.shape == (4,)
    assert headkit.total_loss(1, 1, 1, 1, 1)["total"] == 55.0
    assert headkit.iou(b, headkit.BBox(1, 1, 3, 3)) == pytest.approx(1 / 7)
    pts = np.random.default_rng(0).normal(size=(20, 3))
    loss, _ = headkit.vertices_loss_3d(pts, 3.0 * pts + 1.0)
    assert loss == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        headkit.reprojection_loss(np.zeros((3, 2)), np.zeros((4, 2)))


def test_fit_recovers_the_head(assets):
    truth = headkit.random_head_params(assets, 1000)
    targets = headkit.synthesize_targets(assets, truth)
    config = headkit.FitConfig()
    config.seed = 1001
    out = headkit.fit(assets, targets, headkit.perturb_params(truth, config), config)
    fitted = out["params"]
    err = headkit.geodesic_distance(headkit.rot6d_to_matrix(fitted.rot6d), headkit.rot6d_to_matrix(truth.rot6d))
    assert err <= 1e-3
    assert out["history"][-1]["l_reproj"] <= 1e-6


def test_alignment_crop_is_centred(assets):
    p = headkit.random_head_params(assets, 3)
    proj = headkit.project_head(assets, p)
    crop = headkit.alignment_crop(proj, assets)
    assert (crop.x1 + crop.x2) / 2 == pytest.approx(p.translation[0], abs=1e-9)
    assert crop.width == pytest.approx(crop.height, abs=1e-9)


def test_decode_and_nms():
    raw = np.zeros((len(headkit.anchor_centers(64, [32])), 5))
    dets = headkit.decode(raw, 64, [32], 0.5)
    assert len(dets) == 4
    assert dets[0].bbox == headkit.BBox(0, 0, 32, 32)
    kept = headkit.nms([headkit.Detection(headkit.BBox(0, 0, 10, 10), 0.9),
                        headkit.Detection(headkit.BBox(1, 1, 10, 10), 0.8)], 0.5)
    assert [d.confidence for d in kept] == [0.9]
    gt = [[headkit.BBox(0, 0, 10, 10)]]
    assert headkit.average_precision([[headkit.Detection(gt[0][0], 0.7)]], gt) == 1.0


def test_pose_and_nme():
    r = headkit.euler_to_matrix(headkit.EulerPose(0.3, 0, 0))
    assert headkit.pose_mae([r], [np.eye(3)])["yaw"] == pytest.approx(0.3)
    pts = np.array([[5.0, 5.0]])
    assert headkit.nme(pts + [3, 4], pts, headkit.BBox(0, 0, 10, 10)) == pytest.approx(0.5)


def test_filter_matches_fixture():
    lines = (DATA / "qa_fixture.jsonl").read_text().splitlines()
    for threads in (1, 4):
        kept, report = headkit.filter_records(lines, threads=threads)
        assert report + "\n" == (DATA / "qa_expected_report.json").read_text()
        assert kept == (DATA / "qa_expected_kept.jsonl").read_text().splitlines()
    with pytest.raises(headkit.ParseError):
        headkit.filter_records(["not json"], strict=True)


def test_pncc_matches_golden(assets):
    img = headkit.render_pncc(assets, golden_params(), 64, 64)
    assert img.shape == (64, 64, 3) and img.dtype == np.uint8
    assert headkit.encode_ppm(img) == (DATA / "toy_head_64.ppm").read_bytes()
    colors = headkit.ncc_encode(headkit.forward_canonical(assets, golden_params()))
    assert colors.min() >= 0.0 and colors.max() <= 1.0


def test_gradcheck():
    errors = headkit.gradcheck(seed=3, points=10)
    assert set(errors) == {"reprojection", "vertices_3d", "rotation", "focal", "ciou", "objective"}
    assert all(math.isfinite(e) and e <= headkit.GRADCHECK_TOLERANCE for e in errors.values())
