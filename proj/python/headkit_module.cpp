/*
 * Copyright 2026 The headkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// Python bindings for the headkit library.

#include "headkit/camera.hpp"
#include "headkit/dataqa.hpp"
#include "headkit/detection.hpp"
#include "headkit/errors.hpp"
#include "headkit/fitting.hpp"
#include "headkit/gradcheck.hpp"
#include "headkit/json_io.hpp"
#include "headkit/losses.hpp"
#include "headkit/metrics.hpp"
#include "headkit/pncc.hpp"
#include "headkit/rotation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace headkit;

namespace {

py::dict breakdown_dict(const LossBreakdown& b)
{
    py::dict d;
    d["total"] = b.total;
    d["l_3d"] = b.l_3d;
    d["l_rot"] = b.l_rot;
    d["l_reproj"] = b.l_reproj;
    d["l_cls"] = b.l_cls;
    d["l_reg"] = b.l_reg;
    return d;
}

py::array_t<std::uint8_t> image_array(const RasterImage& img)
{
    py::array_t<std::uint8_t> out({img.height, img.width, 3});
    std::copy(img.rgb.begin(), img.rgb.end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "3D head model fitting, detection post-processing, evaluation, data QA and PNCC rendering";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", validation.ptr());
    py::register_exception<SingularInput>(m, "SingularInput", error.ptr());
    py::register_exception<DegenerateGeometry>(m, "DegenerateGeometry", error.ptr());
    py::register_exception<IncompleteRecord>(m, "IncompleteRecord", error.ptr());
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<Diverged>(m, "Diverged", error.ptr());

    // ---- geometry types ----------------------------------------------------

    py::class_<BBox>(m, "BBox")
        .def(py::init<>())
        .def(py::init([](double x1, double y1, double x2, double y2) { return BBox{x1, y1, x2, y2}; }), py::arg("x1"),
             py::arg("y1"), py::arg("x2"), py::arg("y2"))
        .def_readwrite("x1", &BBox::x1)
        .def_readwrite("y1", &BBox::y1)
        .def_readwrite("x2", &BBox::x2)
        .def_readwrite("y2", &BBox::y2)
        .def_property_readonly("width", &BBox::width)
        .def_property_readonly("height", &BBox::height)
        .def("as_tuple", [](const BBox& b) { return py::make_tuple(b.x1, b.y1, b.x2, b.y2); })
        .def(py::self == py::self)
        .def("__repr__", [](const BBox& b) {
            return "BBox(" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " + std::to_string(b.x2) + ", " +
                   std::to_string(b.y2) + ")";
        });

    py::class_<EulerPose>(m, "EulerPose")
        .def(py::init([](double yaw, double pitch, double roll) { return EulerPose{yaw, pitch, roll}; }),
             py::arg("yaw") = 0.0, py::arg("pitch") = 0.0, py::arg("roll") = 0.0)
        .def_readwrite("yaw", &EulerPose::yaw)
        .def_readwrite("pitch", &EulerPose::pitch)
        .def_readwrite("roll", &EulerPose::roll);

    // ---- morphable model ---------------------------------------------------

    py::class_<ModelAssets>(m, "ModelAssets")
        .def_readonly("n_vertices", &ModelAssets::n_vertices)
        .def_readonly("template_mesh", &ModelAssets::template_mesh)
        .def_readonly("triangles", &ModelAssets::triangles)
        .def_readonly("landmark_indices", &ModelAssets::landmark_indices)
        .def_readonly("face_indices", &ModelAssets::face_indices)
        .def_readonly("subsample_indices", &ModelAssets::subsample_indices)
        .def_property_readonly("num_shape", &ModelAssets::num_shape)
        .def_property_readonly("num_expr", &ModelAssets::num_expr)
        .def("save", [](const ModelAssets& a, const std::filesystem::path& p) { save_assets(a, p); });

    m.def("generate_toy_assets", &generate_toy_assets, py::arg("seed") = 7, py::arg("n_vertices") = 162,
          py::arg("k_shape") = 4, py::arg("k_expr") = 2, py::arg("n_landmarks") = 16);
    m.def("load_assets", &load_assets, py::arg("path"));

    py::class_<HeadParams>(m, "HeadParams")
        .def(py::init<>())
        .def_static("zeros", &HeadParams::zeros, py::arg("k_shape"), py::arg("k_expr"))
        .def_static("from_vector", &HeadParams::from_vector, py::arg("v"), py::arg("k_shape"), py::arg("k_expr"))
        .def_static("from_json", [](const std::string& s) { return json::params_from_json(nlohmann::json::parse(s)); })
        .def_readwrite("shape", &HeadParams::shape)
        .def_readwrite("expression", &HeadParams::expression)
        .def_readwrite("jaw", &HeadParams::jaw)
        .def_readwrite("rot6d", &HeadParams::rot6d)
        .def_readwrite("translation", &HeadParams::translation)
        .def_readwrite("scale", &HeadParams::scale)
        .def("to_vector", &HeadParams::to_vector)
        .def("to_json", [](const HeadParams& p) { return json::dump(json::params_to_json(p)); })
        .def("validate", &HeadParams::validate)
        .def("__len__", &HeadParams::size)
        .def(py::self == py::self);

    m.def("forward_canonical", &forward_canonical, py::arg("assets"), py::arg("params"));
    m.def("random_head_params", &random_head_params, py::arg("assets"), py::arg("seed"), py::arg("image_side") = 256.0);

    // ---- rotations ---------------------------------------------------------

    m.def("rot6d_to_matrix", &rot6d_to_matrix, py::arg("a"));
    m.def("matrix_to_rot6d", &matrix_to_rot6d, py::arg("r"));
    m.def("axis_angle_to_matrix", &axis_angle_to_matrix, py::arg("w"));
    m.def("geodesic_distance", &geodesic_distance, py::arg("r1"), py::arg("r2"));
    m.def("matrix_to_euler", &matrix_to_euler, py::arg("r"));
    m.def("euler_to_matrix", &euler_to_matrix, py::arg("pose"));

    // ---- camera ------------------------------------------------------------

    py::class_<ProjectedHead>(m, "ProjectedHead")
        .def_readonly("points2d", &ProjectedHead::points2d)
        .def_readonly("depth", &ProjectedHead::depth)
        .def_readonly("rotation", &ProjectedHead::rotation)
        .def_readonly("translation", &ProjectedHead::translation)
        .def_readonly("scale", &ProjectedHead::scale);

    m.def("project_head", &project_head, py::arg("assets"), py::arg("params"));
    m.def("head_bbox", &head_bbox, py::arg("proj"));
    m.def("face_bbox", &face_bbox, py::arg("proj"), py::arg("assets"));
    m.def("alignment_crop", &alignment_crop, py::arg("proj"), py::arg("assets"),
          py::arg("margin") = kDefaultCropMargin);

    // ---- losses ------------------------------------------------------------

    py::class_<LossWeights>(m, "LossWeights")
        .def(py::init<>())
        .def_readwrite("w_3d", &LossWeights::w_3d)
        .def_readwrite("w_rot", &LossWeights::w_rot)
        .def_readwrite("w_reproj", &LossWeights::w_reproj)
        .def_readwrite("w_cls", &LossWeights::w_cls)
        .def_readwrite("w_reg", &LossWeights::w_reg);

    m.def(
        "reprojection_loss",
        [](const Points2& pred, const Points2& gt) {
            const auto l = reprojection_loss(pred, gt);
            return py::make_tuple(l.value, l.gradient);
        },
        py::arg("pred"), py::arg("gt"), "Returns (value, gradient w.r.t. pred).");
    m.def(
        "vertices_loss_3d",
        [](const Points3& pred, const Points3& gt) {
            const auto l = vertices_loss_3d(pred, gt);
            return py::make_tuple(l.value, l.gradient);
        },
        py::arg("pred"), py::arg("gt"), "Returns (value, gradient w.r.t. pred).");
    m.def(
        "rotation_loss",
        [](const Mat3& pred, const Mat3& gt) {
            const auto l = rotation_loss(pred, gt);
            return py::make_tuple(l.value, l.gradient);
        },
        py::arg("pred"), py::arg("gt"), "Returns (value, gradient w.r.t. pred).");
    m.def(
        "focal_loss",
        [](double p, bool label, double alpha, double gamma) {
            const auto l = focal_loss(p, label, alpha, gamma);
            return py::make_tuple(l.value, l.gradient);
        },
        py::arg("p"), py::arg("label"), py::arg("alpha") = kFocalAlpha, py::arg("gamma") = kFocalGamma);
    m.def(
        "ciou_loss",
        [](const BBox& pred, const BBox& gt) {
            const auto l = ciou_loss(pred, gt);
            return py::make_tuple(l.value, l.gradient);
        },
        py::arg("pred"), py::arg("gt"), "Returns (value, gradient w.r.t. (x1, y1, x2, y2)).");
    m.def(
        "total_loss",
        [](double l_3d, double l_rot, double l_reproj, double l_cls, double l_reg, const LossWeights& w) {
            return breakdown_dict(total_loss(l_3d, l_rot, l_reproj, l_cls, l_reg, w));
        },
        py::arg("l_3d"), py::arg("l_rot"), py::arg("l_reproj"), py::arg("l_cls"), py::arg("l_reg"),
        py::arg("weights") = LossWeights{});
    m.def(
        "normalize_unit_cube", [](const Points3& v) { return normalize_unit_cube(v).vertices; }, py::arg("vertices"));

    // ---- fitting -----------------------------------------------------------

    py::class_<FitTargets>(m, "FitTargets")
        .def(py::init([](const Points2& lm, std::optional<Mat3> rot, std::optional<Points3> canon) {
                 return FitTargets{lm, std::move(rot), std::move(canon)};
             }),
             py::arg("landmarks2d"), py::arg("gt_rotation") = py::none(), py::arg("gt_canonical") = py::none())
        .def_readwrite("landmarks2d", &FitTargets::landmarks2d)
        .def_readwrite("gt_rotation", &FitTargets::gt_rotation)
        .def_readwrite("gt_canonical", &FitTargets::gt_canonical);

    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("max_iters", &FitConfig::max_iters)
        .def_readwrite("step_size", &FitConfig::step_size)
        .def_readwrite("decay_every", &FitConfig::decay_every)
        .def_readwrite("decay_factor", &FitConfig::decay_factor)
        .def_readwrite("weights", &FitConfig::weights)
        .def_readwrite("convergence_tol", &FitConfig::convergence_tol)
        .def_readwrite("convergence_window", &FitConfig::convergence_window)
        .def_readwrite("metric_refresh", &FitConfig::metric_refresh)
        .def_readwrite("seed", &FitConfig::seed)
        .def_readwrite("init_rotation_perturbation", &FitConfig::init_rotation_perturbation)
        .def_readwrite("init_coeff_sigma", &FitConfig::init_coeff_sigma);

    m.def("synthesize_targets", &synthesize_targets, py::arg("assets"), py::arg("truth"),
          py::arg("with_rotation") = true, py::arg("with_canonical") = true);
    m.def("perturb_params", &perturb_params, py::arg("truth"), py::arg("config"));
    m.def("initial_guess", &initial_guess, py::arg("assets"), py::arg("targets"));
    m.def(
        "fit",
        [](const ModelAssets& assets, const FitTargets& targets, const HeadParams& init, const FitConfig& config) {
            FitTrace t;
            {
                py::gil_scoped_release release;
                t = fit(assets, targets, init, config);
            }
            py::list history;
            for (const auto& b : t.history) {
                history.append(breakdown_dict(b));
            }
            py::dict out;
            out["params"] = t.params;
            out["iterations"] = t.iterations;
            out["converged"] = t.converged;
            out["history"] = history;
            return out;
        },
        py::arg("assets"), py::arg("targets"), py::arg("init"), py::arg("config") = FitConfig{},
        "Returns {'params', 'iterations', 'converged', 'history'}.");

    // ---- detection and metrics ---------------------------------------------

    py::class_<Detection>(m, "Detection")
        .def(py::init([](const BBox& b, double c) { return Detection{b, c, std::nullopt}; }), py::arg("bbox"),
             py::arg("confidence"))
        .def_readwrite("bbox", &Detection::bbox)
        .def_readwrite("confidence", &Detection::confidence)
        .def_readwrite("params", &Detection::params);

    m.def("iou", &iou, py::arg("a"), py::arg("b"));
    m.def("nms", &nms, py::arg("dets"), py::arg("iou_threshold"));
    m.def(
        "decode",
        [](const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 5, Eigen::RowMajor>>& raw, int image_side,
           const std::vector<int>& strides, double conf_threshold, int threads) {
            std::vector<RawPrediction> preds(static_cast<std::size_t>(raw.rows()));
            for (Eigen::Index i = 0; i < raw.rows(); ++i) {
                preds[static_cast<std::size_t>(i)] = {raw(i, 0), raw(i, 1), raw(i, 2), raw(i, 3), raw(i, 4), {}};
            }
            return decode(preds, make_anchor_grid(image_side, strides), conf_threshold, threads);
        },
        py::arg("raw"), py::arg("image_side"), py::arg("strides") = kDefaultStrides, py::arg("conf_threshold") = 0.5,
        py::arg("threads") = 1, "raw: (n_anchors, 5) array of [dx, dy, dw, dh, logit].");
    m.def(
        "anchor_centers", [](int side, const std::vector<int>& strides) { return make_anchor_grid(side, strides).centers; },
        py::arg("image_side"), py::arg("strides") = kDefaultStrides);
    m.def("average_precision", &average_precision, py::arg("dets"), py::arg("gts"), py::arg("iou_threshold") = 0.5);
    m.def(
        "pose_mae",
        [](const std::vector<Mat3>& preds, const std::vector<Mat3>& gts) {
            const PoseErrorReport r = pose_mae(preds, gts);
            py::dict d;
            d["yaw"] = r.mae_yaw;
            d["pitch"] = r.mae_pitch;
            d["roll"] = r.mae_roll;
            d["mean"] = r.mae_mean;
            return d;
        },
        py::arg("preds"), py::arg("gts"), "Mean absolute Euler errors in radians.");
    m.def("nme", &nme, py::arg("pred"), py::arg("gt"), py::arg("gt_box"));

    // ---- data QA -----------------------------------------------------------

    m.def(
        "filter_records",
        [](const std::vector<std::string>& lines, bool strict, int threads) {
            QaOptions o;
            o.strict = strict;
            o.threads = threads;
            QaResult r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(lines, o);
            }
            return py::make_tuple(r.kept_lines, json::dump(r.report.to_json(), 1));
        },
        py::arg("lines"), py::arg("strict") = false, py::arg("threads") = 1,
        "Runs the QA rules over JSONL lines. Returns (kept_lines, report_json).");

    // ---- rendering ---------------------------------------------------------

    m.def("ncc_encode", &ncc_encode, py::arg("vertices"));
    m.def(
        "render_pncc",
        [](const ModelAssets& assets, const HeadParams& params, int width, int height) {
            return image_array(render_pncc(assets, params, width, height));
        },
        py::arg("assets"), py::arg("params"), py::arg("width"), py::arg("height"),
        "Returns an (height, width, 3) uint8 array.");
    m.def(
        "encode_ppm",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& img) {
            if (img.ndim() != 3 || img.shape(2) != 3) {
                throw InvalidArgument("encode_ppm: expected an (height, width, 3) array");
            }
            RasterImage r(static_cast<int>(img.shape(1)), static_cast<int>(img.shape(0)));
            std::copy(img.data(), img.data() + img.size(), r.rgb.begin());
            return py::bytes(encode_ppm(r));
        },
        py::arg("image"));

    // ---- gradient check ----------------------------------------------------

    m.def(
        "gradcheck",
        [](std::uint64_t seed, int points) {
            py::dict out;
            for (const auto& r : run_gradcheck(seed, points)) {
                out[py::str(r.name)] = r.max_rel_error;
            }
            return out;
        },
        py::arg("seed") = 7, py::arg("points") = 100, "Worst relative finite-difference error per loss.");
    m.attr("GRADCHECK_TOLERANCE") = kGradcheckTolerance;
}
