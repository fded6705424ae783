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
#include "headkit/dataqa.hpp"

#include "headkit/errors.hpp"
#include "headkit/json_io.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

namespace headkit {

namespace {

constexpr EvidenceField kAllFields[] = {
    EvidenceField::Heads, EvidenceField::HeadsFlipped, EvidenceField::HeadsLeft, EvidenceField::HeadsRight,
    EvidenceField::Faces};

int positive_int(const nlohmann::json& obj, const char* key)
{
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer() || it->get<long long>() <= 0 ||
        it->get<long long>() > 1'000'000'000) {
        throw ParseError(key, "expected a positive integer");
    }
    return static_cast<int>(it->get<long long>());
}

bool blank(const std::string& line)
{
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

bool intersects(const BBox& a, const BBox& b)
{
    return std::min(a.x2, b.x2) > std::max(a.x1, b.x1) && std::min(a.y2, b.y2) > std::max(a.y1, b.y1);
}

} // namespace

std::string field_key(EvidenceField field)
{
    switch (field) {
    case EvidenceField::Heads:
        return "heads";
    case EvidenceField::HeadsFlipped:
        return "heads_flipped";
    case EvidenceField::HeadsLeft:
        return "heads_left";
    case EvidenceField::HeadsRight:
        return "heads_right";
    case EvidenceField::Faces:
        return "faces";
    }
    throw InvalidArgument("unknown evidence field");
}

std::optional<std::vector<BBox>>& ImageQARecord::field(EvidenceField f)
{
    switch (f) {
    case EvidenceField::Heads:
        return heads;
    case EvidenceField::HeadsFlipped:
        return heads_flipped;
    case EvidenceField::HeadsLeft:
        return heads_left;
    case EvidenceField::HeadsRight:
        return heads_right;
    case EvidenceField::Faces:
        return faces;
    }
    throw InvalidArgument("unknown evidence field");
}

const std::optional<std::vector<BBox>>& ImageQARecord::field(EvidenceField f) const
{
    return const_cast<ImageQARecord*>(this)->field(f);
}

const std::vector<BBox>& ImageQARecord::require(EvidenceField f) const
{
    const auto& v = field(f);
    if (!v) {
        throw IncompleteRecord("record '" + image_id + "' has no '" + field_key(f) + "' field");
    }
    return *v;
}

BBox clamp_box(const BBox& box, int width, int height)
{
    const double w = width, h = height;
    return BBox{
        std::clamp(box.x1, 0.0, w), std::clamp(box.y1, 0.0, h), std::clamp(box.x2, 0.0, w),
        std::clamp(box.y2, 0.0, h)};
}

ImageQARecord parse_qa_record(const std::string& line)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("record", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError("record", "expected a JSON object");
    }
    ImageQARecord rec;
    const auto id = j.find("image_id");
    if (id == j.end() || !id->is_string()) {
        throw ParseError("image_id", "expected a string");
    }
    rec.image_id = id->get<std::string>();
    rec.width = positive_int(j, "width");
    rec.height = positive_int(j, "height");
    for (const EvidenceField f : kAllFields) {
        const std::string key = field_key(f);
        const auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            continue;
        }
        std::vector<BBox> boxes = json::bboxes_from_json(*it, key);
        for (auto& b : boxes) {
            if (!(b.x2 >= b.x1 && b.y2 >= b.y1)) {
                throw ParseError(key, "box corners are out of order");
            }
            b = clamp_box(b, rec.width, rec.height);
        }
        rec.field(f) = std::move(boxes);
    }
    return rec;
}

nlohmann::json qa_record_to_json(const ImageQARecord& rec)
{
    nlohmann::json j{{"image_id", rec.image_id}, {"width", rec.width}, {"height", rec.height}};
    for (const EvidenceField f : kAllFields) {
        if (rec.field(f)) {
            j[field_key(f)] = json::bboxes_to_json(*rec.field(f));
        }
    }
    return j;
}

std::pair<std::vector<BBox>, std::vector<BBox>> split_heads_by_center(const std::vector<BBox>& heads, int width)
{
    std::pair<std::vector<BBox>, std::vector<BBox>> out;
    const double mid = 0.5 * width;
    for (const auto& b : heads) {
        (b.center_x() < mid ? out.first : out.second).push_back(b);
    }
    return out;
}

std::string rule_name(QaRule rule)
{
    switch (rule) {
    case QaRule::NoHeads:
        return "no_heads";
    case QaRule::FlipMismatch:
        return "flip_mismatch";
    case QaRule::FaceHeadOverlap:
        return "face_head_overlap";
    case QaRule::HalfSplitMismatch:
        return "half_split_mismatch";
    case QaRule::Custom:
        return "custom";
    }
    throw InvalidArgument("unknown rule");
}

QaDecision QaDecision::drop(QaRule r, std::string detail)
{
    return QaDecision{false, r, rule_name(r), std::move(detail)};
}

QaDecision rule_no_heads(const ImageQARecord& rec)
{
    if (rec.require(EvidenceField::Heads).empty()) {
        return QaDecision::drop(QaRule::NoHeads, "no heads detected");
    }
    return QaDecision::pass();
}

QaDecision rule_flip_consistency(const ImageQARecord& rec)
{
    const std::size_t a = rec.require(EvidenceField::Heads).size();
    const std::size_t b = rec.require(EvidenceField::HeadsFlipped).size();
    if (a != b) {
        return QaDecision::drop(
            QaRule::FlipMismatch, std::to_string(a) + " heads in the original, " + std::to_string(b) + " flipped");
    }
    return QaDecision::pass();
}

QaDecision rule_face_head_overlap(const ImageQARecord& rec)
{
    const auto& heads = rec.require(EvidenceField::Heads);
    const auto& faces = rec.require(EvidenceField::Faces);
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const bool hit = std::any_of(heads.begin(), heads.end(), [&](const BBox& h) { return intersects(faces[i], h); });
        if (!hit) {
            return QaDecision::drop(QaRule::FaceHeadOverlap, "face " + std::to_string(i) + " overlaps no head");
        }
    }
    return QaDecision::pass();
}

QaDecision rule_half_split(const ImageQARecord& rec)
{
    const std::size_t whole = rec.require(EvidenceField::Heads).size();
    const std::size_t left = rec.require(EvidenceField::HeadsLeft).size();
    const std::size_t right = rec.require(EvidenceField::HeadsRight).size();
    if (left + right != whole) {
        return QaDecision::drop(
            QaRule::HalfSplitMismatch, std::to_string(left) + " + " + std::to_string(right) + " heads in the halves, " +
                                           std::to_string(whole) + " in the image");
    }
    return QaDecision::pass();
}

QaRuleSpec builtin_rule(QaRule rule)
{
    using F = EvidenceField;
    switch (rule) {
    case QaRule::NoHeads:
        return {rule_name(rule), {F::Heads}, rule_no_heads};
    case QaRule::FlipMismatch:
        return {rule_name(rule), {F::Heads, F::HeadsFlipped}, rule_flip_consistency};
    case QaRule::FaceHeadOverlap:
        return {rule_name(rule), {F::Heads, F::Faces}, rule_face_head_overlap};
    case QaRule::HalfSplitMismatch:
        return {rule_name(rule), {F::Heads, F::HeadsLeft, F::HeadsRight}, rule_half_split};
    case QaRule::Custom:
        break;
    }
    throw InvalidArgument("builtin_rule: not a built-in rule");
}

std::vector<QaRuleSpec> default_rules()
{
    return {
        builtin_rule(QaRule::NoHeads), builtin_rule(QaRule::FlipMismatch), builtin_rule(QaRule::FaceHeadOverlap),
        builtin_rule(QaRule::HalfSplitMismatch)};
}

FixtureDetector::FixtureDetector() : state_(std::make_shared<State>()) {}

void FixtureDetector::set(const std::string& image_id, EvidenceField field, std::vector<BBox> boxes)
{
    state_->table[{image_id, field}] = std::move(boxes);
}

std::vector<BBox> FixtureDetector::operator()(const std::string& image_id, EvidenceField field) const
{
    state_->calls.fetch_add(1, std::memory_order_relaxed);
    const auto it = state_->table.find({image_id, field});
    return it == state_->table.end() ? std::vector<BBox>{} : it->second;
}

std::size_t FixtureDetector::calls() const { return state_->calls.load(); }

QaDecision evaluate_record(ImageQARecord& rec, const std::vector<QaRuleSpec>& rules, const DetectorInterface& detector)
{
    for (const auto& rule : rules) {
        for (const EvidenceField f : rule.needs) {
            auto& slot = rec.field(f);
            if (slot) {
                continue;
            }
            if (!detector) {
                throw IncompleteRecord(
                    "record '" + rec.image_id + "' lacks '" + field_key(f) + "' needed by rule " + rule.name);
            }
            std::vector<BBox> boxes = detector(rec.image_id, f);
            for (auto& b : boxes) {
                b = clamp_box(b, rec.width, rec.height);
            }
            slot = std::move(boxes);
        }
        QaDecision d = rule.check(rec);
        if (!d.keep) {
            d.rule = rule.name;
            return d;
        }
    }
    return QaDecision::pass();
}

double QaReport::keep_rate() const
{
    return total == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(total);
}

nlohmann::json QaReport::to_json() const
{
    nlohmann::json dropped = nlohmann::json::object();
    for (const auto& [name, count] : dropped_by_rule) {
        dropped[name] = count;
    }
    nlohmann::json errs = nlohmann::json::array();
    for (const auto& e : errors) {
        errs.push_back({{"line", e.line}, {"message", e.message}});
    }
    return nlohmann::json{
        {"total", total}, {"kept", kept}, {"keep_rate", keep_rate()}, {"dropped_by_rule", dropped}, {"errors", errs}};
}

namespace {

struct LineOutcome
{
    std::optional<QaDecision> decision;
    std::string error;
    bool incomplete = false;
};

LineOutcome process_line(const std::string& line, const QaOptions& options)
{
    LineOutcome out;
    try {
        ImageQARecord rec = parse_qa_record(line);
        out.decision = evaluate_record(rec, options.rules, options.detector);
    } catch (const ParseError& e) {
        out.error = e.what();
    } catch (const IncompleteRecord& e) {
        out.error = e.what();
        out.incomplete = true;
    }
    return out;
}

// Shared by the in-memory and streaming forms; `first_line` is the 1-based
// number of lines[0].
void process_batch(
    const std::vector<std::string>& lines, std::size_t first_line, const QaOptions& options, QaReport& report,
    const std::function<void(std::size_t, const std::optional<QaDecision>&)>& sink)
{
    std::vector<LineOutcome> outcomes(lines.size());
    std::vector<char> is_blank(lines.size());
    detail::parallel_chunks(lines.size(), options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            is_blank[i] = blank(lines[i]) ? 1 : 0;
            if (!is_blank[i]) {
                outcomes[i] = process_line(lines[i], options);
            }
        }
    });
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_blank[i]) {
            sink(i, std::nullopt);
            continue;
        }
        ++report.total;
        const LineOutcome& o = outcomes[i];
        if (!o.decision) {
            const std::string message = "line " + std::to_string(first_line + i) + ": " + o.error;
            if (options.strict) {
                if (o.incomplete) {
                    throw IncompleteRecord(message);
                }
                throw ParseError("line " + std::to_string(first_line + i), o.error);
            }
            report.errors.push_back(QaLineError{first_line + i, o.error});
        } else if (o.decision->keep) {
            ++report.kept;
        } else {
            ++report.dropped_by_rule[o.decision->rule];
        }
        sink(i, o.decision);
    }
}

QaReport empty_report(const QaOptions& options)
{
    QaReport r;
    for (const auto& rule : options.rules) {
        r.dropped_by_rule[rule.name] = 0;
    }
    return r;
}

} // namespace

QaResult run_pipeline(const std::vector<std::string>& lines, const QaOptions& options)
{
    QaResult result;
    result.report = empty_report(options);
    result.decisions.resize(lines.size());
    process_batch(lines, 1, options, result.report, [&](std::size_t i, const std::optional<QaDecision>& d) {
        result.decisions[i] = d;
        if (d && d->keep) {
            result.kept_lines.push_back(lines[i]);
        }
    });
    return result;
}

QaReport run_pipeline(std::istream& in, std::ostream& kept, const QaOptions& options)
{
    QaReport report = empty_report(options);
    const std::size_t batch = std::max<std::size_t>(options.batch_size, 1);
    std::size_t first_line = 1;
    std::vector<std::string> lines;
    std::string line;
    auto flush = [&] {
        process_batch(lines, first_line, options, report, [&](std::size_t i, const std::optional<QaDecision>& d) {
            if (d && d->keep) {
                kept << lines[i] << '\n';
            }
        });
        first_line += lines.size();
        lines.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
        if (lines.size() == batch) {
            flush();
        }
    }
    flush();
    if (!kept) {
        throw IoError("failed to write kept records");
    }
    return report;
}

} // namespace headkit
