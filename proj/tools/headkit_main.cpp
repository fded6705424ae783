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
// headkit command-line tool. Exit codes: 0 success, 1 usage error,
// 2 invalid input, 3 runtime or numeric failure.

#include "headkit/camera.hpp"
#include "headkit/dataqa.hpp"
#include "headkit/detection.hpp"
#include "headkit/errors.hpp"
#include "headkit/fitting.hpp"
#include "headkit/gradcheck.hpp"
#include "headkit/json_io.hpp"
#include "headkit/metrics.hpp"
#include "headkit/morphable_model.hpp"
#include "headkit/pncc.hpp"
#include "headkit/rotation.hpp"
#include "parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace hk = headkit;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

std::ofstream open_output(const std::string& path, bool binary = false)
{
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) {
        throw hk::IoError("cannot open '" + path + "' for writing");
    }
    return f;
}

std::vector<std::string> read_lines(const std::string& path)
{
    std::ifstream f(path);
    if (!f) {
        throw hk::IoError("cannot open '" + path + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

json parse_line(const std::string& line, std::size_t number)
{
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw hk::ParseError("line " + std::to_string(number), e.what());
    }
}

void add_weight_flags(CLI::App* cmd, hk::LossWeights& w)
{
    cmd->add_option("--w-3d", w.w_3d, "Weight of the 3D vertices loss")->capture_default_str();
    cmd->add_option("--w-rot", w.w_rot, "Weight of the rotation loss")->capture_default_str();
    cmd->add_option("--w-reproj", w.w_reproj, "Weight of the reprojection loss")->capture_default_str();
    cmd->add_option("--w-cls", w.w_cls, "Weight of the classification loss")->capture_default_str();
    cmd->add_option("--w-reg", w.w_reg, "Weight of the box regression loss")->capture_default_str();
}

// ---- gen-assets ------------------------------------------------------------

struct GenAssetsArgs
{
    std::string out;
    std::uint64_t seed = 7;
    std::size_t vertices = 162;
    std::size_t shape = 4;
    std::size_t expr = 2;
    std::size_t landmarks = 16;
};

void run_gen_assets(const GenAssetsArgs& a)
{
    hk::save_assets(hk::generate_toy_assets(a.seed, a.vertices, a.shape, a.expr, a.landmarks), a.out);
}

// ---- forward ---------------------------------------------------------------

struct ForwardArgs
{
    std::string assets, params, out;
    bool posed = false;
};

void run_forward(const ForwardArgs& a)
{
    const hk::ModelAssets assets = hk::load_assets(a.assets);
    const hk::HeadParams params = hk::json::params_from_json(hk::json::read_file(a.params));
    hk::Points3 mesh;
    if (a.posed) {
        params.validate();
        const hk::ProjectedHead proj = hk::project_head(assets, params);
        mesh.resize(proj.points2d.rows(), 3);
        mesh.leftCols<2>() = proj.points2d;
        mesh.col(2) = proj.depth;
    } else {
        mesh = hk::forward_canonical(assets, params);
    }
    auto f = open_output(a.out);
    hk::write_obj(mesh, assets.triangles, f);
}

// ---- fit -------------------------------------------------------------------

struct FitArgs
{
    std::string assets, targets, init, out;
    hk::FitConfig config;
    bool with_trace = true;
};

hk::FitTargets targets_from_json(const json& j)
{
    if (!j.is_object()) {
        throw hk::ParseError("targets", "expected an object");
    }
    if (!j.contains("landmarks2d")) {
        throw hk::ParseError("landmarks2d", "missing");
    }
    hk::FitTargets t;
    t.landmarks2d = hk::json::points2_from_json(j["landmarks2d"], "landmarks2d");
    if (j.contains("gt_rotation") && !j["gt_rotation"].is_null()) {
        t.gt_rotation = hk::json::matrix_from_json(j["gt_rotation"], "gt_rotation");
    }
    if (j.contains("gt_canonical") && !j["gt_canonical"].is_null()) {
        t.gt_canonical = hk::json::points3_from_json(j["gt_canonical"], "gt_canonical");
    }
    return t;
}

json breakdown_to_json(const hk::LossBreakdown& b)
{
    return json{{"total", b.total}, {"l_3d", b.l_3d}, {"l_rot", b.l_rot}, {"l_reproj", b.l_reproj}};
}

void run_fit(const FitArgs& a)
{
    const hk::ModelAssets assets = hk::load_assets(a.assets);
    const hk::FitTargets targets = targets_from_json(hk::json::read_file(a.targets));
    targets.validate(assets);
    const hk::HeadParams init =
        a.init.empty() ? hk::initial_guess(assets, targets) : hk::json::params_from_json(hk::json::read_file(a.init));
    const hk::FitTrace trace = hk::fit(assets, targets, init, a.config);

    json out{
        {"params", hk::json::params_to_json(trace.params)},
        {"iterations", trace.iterations},
        {"converged", trace.converged},
        {"final", breakdown_to_json(trace.history.back())}};
    if (a.with_trace) {
        json hist = json::array();
        for (const auto& b : trace.history) {
            hist.push_back(breakdown_to_json(b));
        }
        out["trace"] = std::move(hist);
    }
    hk::json::write_file(a.out, out);
}

// ---- align -----------------------------------------------------------------

struct AlignArgs
{
    std::string assets, params, out;
    double margin = hk::kDefaultCropMargin;
};

void run_align(const AlignArgs& a)
{
    if (!(a.margin > 0.0)) {
        throw hk::InvalidArgument("--margin must be positive");
    }
    const hk::ModelAssets assets = hk::load_assets(a.assets);
    const hk::HeadParams params = hk::json::params_from_json(hk::json::read_file(a.params));
    params.validate();
    const hk::ProjectedHead proj = hk::project_head(assets, params);
    const hk::BBox crop = hk::alignment_crop(proj, assets, a.margin);
    const auto face = hk::face_bbox(proj, assets);
    const hk::EulerPose pose = hk::matrix_to_euler(proj.rotation);
    hk::json::write_file(
        a.out, json{
                   {"crop", hk::json::bbox_to_json(crop)},
                   {"center", {crop.center_x(), crop.center_y()}},
                   {"side", crop.width()},
                   {"head_bbox", hk::json::bbox_to_json(hk::head_bbox(proj))},
                   {"face_bbox", face ? hk::json::bbox_to_json(*face) : json(nullptr)},
                   {"pose", {{"yaw", pose.yaw}, {"pitch", pose.pitch}, {"roll", pose.roll}}},
               });
}

// ---- decode ----------------------------------------------------------------

struct DecodeArgs
{
    std::string input, output;
    double conf = 0.5;
    double iou = 0.5;
    std::vector<int> strides = hk::kDefaultStrides;
};

std::string decode_record(const json& rec, const DecodeArgs& a)
{
    if (!rec.is_object() || !rec.contains("image_id") || !rec["image_id"].is_string()) {
        throw hk::ParseError("image_id", "expected a string");
    }
    if (!rec.contains("image_side") || !rec["image_side"].is_number_integer()) {
        throw hk::ParseError("image_side", "expected an integer");
    }
    const int side = rec["image_side"].get<int>();
    const hk::AnchorGrid grid = hk::make_anchor_grid(side, a.strides);
    const json& preds = rec.value("predictions", json());
    if (!preds.is_array()) {
        throw hk::ParseError("predictions", "expected an array");
    }
    const json params = rec.value("params", json());
    if (!params.is_null() && (!params.is_array() || params.size() != preds.size())) {
        throw hk::ParseError("params", "expected one entry per prediction");
    }
    std::vector<hk::RawPrediction> raw;
    raw.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const json& p = preds[i];
        if (!p.is_array() || p.size() != 5) {
            throw hk::ParseError("predictions", "each prediction is [dx, dy, dw, dh, logit]");
        }
        hk::RawPrediction r;
        for (std::size_t k = 0; k < 5; ++k) {
            if (!p[k].is_number()) {
                throw hk::ParseError("predictions", "entries must be numbers");
            }
        }
        r.dx = p[0].get<double>();
        r.dy = p[1].get<double>();
        r.dw = p[2].get<double>();
        r.dh = p[3].get<double>();
        r.logit = p[4].get<double>();
        if (!params.is_null() && !params[i].is_null()) {
            r.params = hk::json::params_from_json(params[i]);
        }
        raw.push_back(std::move(r));
    }
    const auto dets = hk::nms(hk::decode(raw, grid, a.conf), a.iou);

    json heads = json::array(), scores = json::array(), out_params = json::array(), rotations = json::array();
    bool all_params = true;
    for (const auto& d : dets) {
        heads.push_back(hk::json::bbox_to_json(d.bbox));
        scores.push_back(d.confidence);
        out_params.push_back(d.params ? hk::json::params_to_json(*d.params) : json(nullptr));
        if (d.params) {
            rotations.push_back(hk::json::matrix_to_json(hk::rot6d_to_matrix(d.params->rot6d)));
        } else {
            all_params = false;
        }
    }
    json out{
        {"image_id", rec["image_id"]},
        {"width", side},
        {"height", side},
        {"heads", heads},
        {"scores", scores},
        {"params", out_params}};
    if (all_params && !dets.empty()) {
        out["rotations"] = rotations;
    }
    return hk::json::dump(out);
}

void run_decode(const DecodeArgs& a, int threads)
{
    if (!(a.conf >= 0.0 && a.conf <= 1.0)) {
        throw hk::InvalidArgument("--conf must lie in [0, 1]");
    }
    const std::vector<std::string> lines = read_lines(a.input);
    std::vector<std::string> outputs(lines.size());
    hk::detail::parallel_chunks(lines.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (!blank(lines[i])) {
                outputs[i] = decode_record(parse_line(lines[i], i + 1), a);
            }
        }
    });
    auto f = open_output(a.output);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!blank(lines[i])) {
            f << outputs[i] << '\n';
        }
    }
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs
{
    std::string pred, gt, out;
    double iou = 0.5;
};

struct EvalImage
{
    std::vector<hk::BBox> heads;
    std::vector<double> scores;
    std::optional<std::vector<hk::RotationMatrix>> rotations;
    std::optional<std::vector<hk::Points2>> landmarks;
};

EvalImage eval_image_from_json(const json& j, bool with_scores)
{
    EvalImage img;
    if (!j.contains("heads")) {
        throw hk::ParseError("heads", "missing");
    }
    img.heads = hk::json::bboxes_from_json(j["heads"], "heads");
    if (with_scores) {
        const json& s = j.value("scores", json());
        if (!s.is_array() || s.size() != img.heads.size()) {
            throw hk::ParseError("scores", "expected one score per head");
        }
        for (const auto& v : s) {
            if (!v.is_number()) {
                throw hk::ParseError("scores", "expected numbers");
            }
            img.scores.push_back(v.get<double>());
        }
    }
    if (j.contains("rotations") && !j["rotations"].is_null()) {
        std::vector<hk::RotationMatrix> r;
        for (const auto& m : j["rotations"]) {
            r.push_back(hk::json::matrix_from_json(m, "rotations"));
        }
        img.rotations = std::move(r);
    }
    if (j.contains("landmarks") && !j["landmarks"].is_null()) {
        std::vector<hk::Points2> l;
        for (const auto& p : j["landmarks"]) {
            l.push_back(hk::json::points2_from_json(p, "landmarks"));
        }
        img.landmarks = std::move(l);
    }
    return img;
}

std::vector<std::pair<std::string, EvalImage>> read_eval_file(const std::string& path, bool with_scores)
{
    std::vector<std::pair<std::string, EvalImage>> out;
    std::map<std::string, bool> seen;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (blank(lines[i])) {
            continue;
        }
        const json j = parse_line(lines[i], i + 1);
        if (!j.is_object() || !j.contains("image_id") || !j["image_id"].is_string()) {
            throw hk::ParseError("line " + std::to_string(i + 1), "expected an object with a string image_id");
        }
        const std::string id = j["image_id"].get<std::string>();
        if (seen[id]) {
            throw hk::ValidationError("image_id", "duplicate image '" + id + "' in " + path);
        }
        seen[id] = true;
        try {
            out.emplace_back(id, eval_image_from_json(j, with_scores));
        } catch (const hk::ValidationError& e) {
            throw hk::ParseError("line " + std::to_string(i + 1), e.what());
        }
    }
    return out;
}

json pose_to_json(const hk::PoseErrorReport& r)
{
    return json{{"yaw", r.mae_yaw}, {"pitch", r.mae_pitch}, {"roll", r.mae_roll}, {"mean", r.mae_mean}};
}

void run_eval(const EvalArgs& a)
{
    const auto gts = read_eval_file(a.gt, false);
    const auto preds = read_eval_file(a.pred, true);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        index[gts[i].first] = i;
    }
    std::vector<std::vector<hk::Detection>> dets(gts.size());
    std::vector<std::vector<hk::BBox>> gt_boxes(gts.size());
    std::vector<const EvalImage*> pred_of(gts.size(), nullptr);
    for (std::size_t i = 0; i < gts.size(); ++i) {
        gt_boxes[i] = gts[i].second.heads;
    }
    for (const auto& [id, img] : preds) {
        const auto it = index.find(id);
        if (it == index.end()) {
            throw hk::ValidationError("image_id", "prediction for unknown image '" + id + "'");
        }
        pred_of[it->second] = &img;
        for (std::size_t k = 0; k < img.heads.size(); ++k) {
            dets[it->second].push_back(hk::Detection{img.heads[k], img.scores[k], std::nullopt});
        }
    }

    std::vector<hk::RotationMatrix> pose_pred, pose_gt;
    double nme_sum = 0.0;
    std::size_t nme_count = 0;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        const EvalImage& g = gts[i].second;
        const EvalImage* p = pred_of[i];
        if (p == nullptr) {
            continue;
        }
        if (g.rotations && p->rotations) {
            const std::size_t n = std::min(g.rotations->size(), p->rotations->size());
            for (std::size_t k = 0; k < n; ++k) {
                pose_pred.push_back((*p->rotations)[k]);
                pose_gt.push_back((*g.rotations)[k]);
            }
        }
        if (g.landmarks && p->landmarks) {
            const std::size_t n = std::min({g.landmarks->size(), p->landmarks->size(), g.heads.size()});
            for (std::size_t k = 0; k < n; ++k) {
                nme_sum += hk::nme((*p->landmarks)[k], (*g.landmarks)[k], g.heads[k]);
                ++nme_count;
            }
        }
    }

    json report{{"images", gts.size()}, {"iou_threshold", a.iou}, {"ap", hk::average_precision(dets, gt_boxes, a.iou)}};
    if (pose_pred.empty()) {
        report["pose"] = nullptr;
    } else {
        const hk::PoseErrorReport r = hk::pose_mae(pose_pred, pose_gt);
        report["pose"] = json{
            {"pairs", pose_pred.size()}, {"radians", pose_to_json(r)}, {"degrees", pose_to_json(r.in_degrees())}};
    }
    report["nme"] = nme_count == 0 ? json(nullptr)
                                   : json{{"pairs", nme_count}, {"mean", nme_sum / static_cast<double>(nme_count)}};
    hk::json::write_file(a.out, report);
}

// ---- filter ----------------------------------------------------------------

struct FilterArgs
{
    std::string input, output, report;
    bool strict = false;
};

void run_filter(const FilterArgs& a, int threads)
{
    std::ifstream in(a.input);
    if (!in) {
        throw hk::IoError("cannot open '" + a.input + "'");
    }
    hk::QaOptions options;
    options.strict = a.strict;
    options.threads = threads;
    // Write kept lines to memory first so a strict-mode failure leaves no partial output.
    std::ostringstream kept;
    const hk::QaReport report = hk::run_pipeline(in, kept, options);
    auto f = open_output(a.output, true);
    f << kept.str();
    hk::json::write_file(a.report, report.to_json());
}

// ---- pncc ------------------------------------------------------------------

struct PnccArgs
{
    std::string assets, params, out;
    int size = 256;
};

void run_pncc(const PnccArgs& a)
{
    if (a.size < 1) {
        throw hk::InvalidArgument("--size must be positive");
    }
    const hk::ModelAssets assets = hk::load_assets(a.assets);
    const hk::HeadParams params = hk::json::params_from_json(hk::json::read_file(a.params));
    params.validate();
    hk::write_ppm(hk::render_pncc(assets, params, a.size, a.size), a.out);
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs
{
    std::uint64_t seed = 7;
    int points = 100;
    std::string out;
};

bool run_gradcheck(const GradcheckArgs& a)
{
    const auto results = hk::run_gradcheck(a.seed, a.points);
    json errs = json::object();
    bool ok = true;
    for (const auto& r : results) {
        errs[r.name] = r.max_rel_error;
        ok = ok && r.max_rel_error <= hk::kGradcheckTolerance;
    }
    const json report{
        {"seed", a.seed}, {"points", a.points}, {"tolerance", hk::kGradcheckTolerance}, {"max_rel_error", errs},
        {"pass", ok}};
    if (a.out.empty()) {
        std::cout << hk::json::dump(report, 1) << '\n';
    } else {
        hk::json::write_file(a.out, report);
    }
    return ok;
}

constexpr const char* kParamsSchema =
    "Params JSON: {\"shape\": [K_s], \"expression\": [K_e], \"jaw\": [3 axis-angle rad],\n"
    "  \"rot6d\": [6], \"translation\": [2 px], \"scale\": px per model unit}";

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"headkit: 3D head model fitting, detection post-processing, evaluation, data QA and PNCC rendering"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 1;
    app.add_option("--threads", threads, "Worker threads for decode and filter (output is identical for any count)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.footer(
        "Exit codes: 0 success, 1 usage error, 2 invalid input, 3 runtime or numeric failure.\n"
        "All JSON numbers are printed with 17 significant digits.");

    GenAssetsArgs gen;
    auto* c_gen = app.add_subcommand("gen-assets", "Generate deterministic toy model assets");
    c_gen->add_option("--out", gen.out, "Output asset JSON")->required();
    c_gen->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    c_gen->add_option("--vertices", gen.vertices, "Vertex count (>= 12)")->capture_default_str();
    c_gen->add_option("--shape", gen.shape, "Shape basis size")->capture_default_str();
    c_gen->add_option("--expr", gen.expr, "Expression basis size")->capture_default_str();
    c_gen->add_option("--landmarks", gen.landmarks, "Landmark count")->capture_default_str();
    c_gen->footer(
        "Asset JSON: {\"version\": 1, \"n_vertices\": n, \"template\": [[x,y,z]] (n), \"shape_basis\": [K_s][n][3],\n"
        "  \"expr_basis\": [K_e][n][3], \"jaw_weights\": [n], \"jaw_pivot\": [3], \"triangles\": [[i,j,k]],\n"
        "  \"subsample_indices\": [...], \"face_indices\": [...], \"landmark_indices\": [L]}");

    ForwardArgs fwd;
    auto* c_fwd = app.add_subcommand("forward", "Synthesise a head mesh and export it as OBJ");
    c_fwd->add_option("--assets", fwd.assets, "Asset JSON")->required()->check(CLI::ExistingFile);
    c_fwd->add_option("--params", fwd.params, "Params JSON")->required()->check(CLI::ExistingFile);
    c_fwd->add_option("--out", fwd.out, "Output OBJ")->required();
    c_fwd->add_flag("--posed", fwd.posed, "Export image-space vertices (x px, y px, depth) instead of the canonical mesh");
    c_fwd->footer(std::string(kParamsSchema) + "\nOBJ: 'v x y z' lines with 9 significant digits, 'f a b c' with 1-based indices.");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Recover head parameters from landmark and optional 3D targets");
    c_fit->add_option("--assets", fit.assets, "Asset JSON")->required()->check(CLI::ExistingFile);
    c_fit->add_option("--targets", fit.targets, "Targets JSON")->required()->check(CLI::ExistingFile);
    c_fit->add_option("--init", fit.init, "Initial params JSON (default: estimated from the landmarks)")
        ->check(CLI::ExistingFile);
    c_fit->add_option("--out", fit.out, "Output JSON")->required();
    c_fit->add_option("--max-iters", fit.config.max_iters, "Iteration limit")->capture_default_str();
    c_fit->add_option("--step-size", fit.config.step_size, "Initial step cap")->capture_default_str();
    c_fit->add_option("--decay-every", fit.config.decay_every, "Step decay period")->capture_default_str();
    c_fit->add_option("--decay-factor", fit.config.decay_factor, "Step decay factor")->capture_default_str();
    c_fit->add_option("--tol", fit.config.convergence_tol, "Convergence tolerance on the total loss")
        ->capture_default_str();
    c_fit->add_flag("!--no-trace", fit.with_trace, "Omit the per-iteration trace");
    add_weight_flags(c_fit, fit.config.weights);
    c_fit->footer(
        "Targets JSON: {\"landmarks2d\": [[x,y]] (L), \"gt_rotation\"?: [[3x3]], \"gt_canonical\"?: [[x,y,z]] (k)}\n" +
        std::string(kParamsSchema) +
        "\nOutput: {\"params\": {...}, \"iterations\": n, \"converged\": bool, \"final\": {total, l_3d, l_rot, "
        "l_reproj},\n  \"trace\": [{total, l_3d, l_rot, l_reproj}, ...]}");

    AlignArgs align;
    auto* c_align = app.add_subcommand("align", "Compute the scale-preserving alignment crop of a head");
    c_align->add_option("--assets", align.assets, "Asset JSON")->required()->check(CLI::ExistingFile);
    c_align->add_option("--params", align.params, "Params JSON")->required()->check(CLI::ExistingFile);
    c_align->add_option("--margin", align.margin, "Crop side over the projected template diameter")
        ->capture_default_str();
    c_align->add_option("--out", align.out, "Output JSON")->required();
    c_align->footer(
        std::string(kParamsSchema) +
        "\nOutput: {\"crop\": [x1,y1,x2,y2], \"center\": [x,y], \"side\": s, \"head_bbox\": [...],\n"
        "  \"face_bbox\": [...] or null when facing away, \"pose\": {yaw, pitch, roll}}");

    DecodeArgs dec;
    auto* c_dec = app.add_subcommand("decode", "Decode raw anchor predictions into detections with NMS");
    c_dec->add_option("--input", dec.input, "Raw predictions JSONL")->required()->check(CLI::ExistingFile);
    c_dec->add_option("--output", dec.output, "Detections JSONL")->required();
    c_dec->add_option("--conf", dec.conf, "Confidence threshold")->capture_default_str();
    c_dec->add_option("--iou", dec.iou, "NMS IoU threshold")->capture_default_str();
    c_dec->add_option("--strides", dec.strides, "Anchor strides")->delimiter(',')->capture_default_str();
    c_dec->footer(
        "Input line: {\"image_id\": s, \"image_side\": S, \"predictions\": [[dx,dy,dw,dh,logit]] (one per anchor,\n"
        "  levels in stride order, row-major), \"params\"?: [params or null] (one per anchor)}\n"
        "Output line: {\"image_id\", \"width\", \"height\", \"heads\": [[x1,y1,x2,y2]], \"scores\": [...],\n"
        "  \"params\": [params or null], \"rotations\"?: [[3x3]] (when every detection has params)}");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Detection AP, pose MAE and landmark NME");
    c_eval->add_option("--pred", ev.pred, "Detections JSONL")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--gt", ev.gt, "Ground-truth JSONL")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--iou", ev.iou, "AP IoU threshold")->capture_default_str();
    c_eval->add_option("--out", ev.out, "Output report JSON")->required();
    c_eval->footer(
        "Both files use the detection line schema: {\"image_id\", \"heads\": [[x1,y1,x2,y2]], \"scores\": [...]\n"
        "  (predictions only), \"rotations\"?: [[3x3]], \"landmarks\"?: [[[x,y]]]}. Pose and NME pair heads by index\n"
        "  within an image; NME is normalised by the matching ground-truth head box.\n"
        "Report: {\"images\", \"iou_threshold\", \"ap\", \"pose\": {pairs, radians, degrees} or null,\n"
        "  \"nme\": {pairs, mean} or null}");

    FilterArgs filt;
    auto* c_filter = app.add_subcommand("filter", "Run the dataset QA rules over a JSONL corpus");
    c_filter->add_option("--input", filt.input, "Records JSONL")->required()->check(CLI::ExistingFile);
    c_filter->add_option("--output", filt.output, "Kept records JSONL (verbatim lines, input order)")->required();
    c_filter->add_option("--report", filt.report, "Report JSON")->required();
    c_filter->add_flag("--strict", filt.strict, "Fail on the first malformed or incomplete record");
    c_filter->footer(
        "Record line: {\"image_id\": s, \"width\": w, \"height\": h, \"heads\": [[x1,y1,x2,y2]], \"heads_flipped\": [...],\n"
        "  \"heads_left\": [...], \"heads_right\": [...], \"faces\": [...]}\n"
        "Rules in order: no_heads, flip_mismatch, face_head_overlap, half_split_mismatch.\n"
        "Report: {\"total\", \"kept\", \"keep_rate\", \"dropped_by_rule\": {rule: n}, \"errors\": [{line, message}]}");

    PnccArgs pn;
    auto* c_pncc = app.add_subcommand("pncc", "Render the PNCC image of a head as binary PPM");
    c_pncc->add_option("--assets", pn.assets, "Asset JSON")->required()->check(CLI::ExistingFile);
    c_pncc->add_option("--params", pn.params, "Params JSON")->required()->check(CLI::ExistingFile);
    c_pncc->add_option("--size", pn.size, "Image side in pixels")->capture_default_str();
    c_pncc->add_option("--out", pn.out, "Output PPM (P6)")->required();
    c_pncc->footer(kParamsSchema);

    GradcheckArgs gc;
    auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
    c_gc->add_option("--seed", gc.seed, "Sampling seed")->capture_default_str();
    c_gc->add_option("--points", gc.points, "Random points per loss")->check(CLI::PositiveNumber)->capture_default_str();
    c_gc->add_option("--out", gc.out, "Write the report here instead of stdout");
    c_gc->footer(
        "Report: {\"seed\", \"points\", \"tolerance\", \"max_rel_error\": {reprojection, vertices_3d, rotation, focal,\n"
        "  ciou, objective}, \"pass\"}. Exits 3 when any error exceeds the tolerance.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (c_gen->parsed()) {
            run_gen_assets(gen);
        } else if (c_fwd->parsed()) {
            run_forward(fwd);
        } else if (c_fit->parsed()) {
            run_fit(fit);
        } else if (c_align->parsed()) {
            run_align(align);
        } else if (c_dec->parsed()) {
            run_decode(dec, threads);
        } else if (c_eval->parsed()) {
            run_eval(ev);
        } else if (c_filter->parsed()) {
            run_filter(filt, threads);
        } else if (c_pncc->parsed()) {
            run_pncc(pn);
        } else if (c_gc->parsed()) {
            if (!run_gradcheck(gc)) {
                std::cerr << "gradcheck: tolerance exceeded\n";
                return kExitRuntime;
            }
        }
    } catch (const hk::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const hk::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const hk::IncompleteRecord& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
