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
#pragma once

#include "headkit/types.hpp"

#include <json.hpp>

#include <atomic>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace headkit {

// Per-image detection evidence. Fields that are absent can be filled by a
// DetectorInterface when the pipeline needs them.
enum class EvidenceField { Heads, HeadsFlipped, HeadsLeft, HeadsRight, Faces };

/// JSONL key of the field, e.g. "heads_flipped".
std::string field_key(EvidenceField field);

struct ImageQARecord
{
    std::string image_id;
    int width = 0;
    int height = 0;
    std::optional<std::vector<BBox>> heads;
    std::optional<std::vector<BBox>> heads_flipped;
    std::optional<std::vector<BBox>> heads_left;
    std::optional<std::vector<BBox>> heads_right;
    std::optional<std::vector<BBox>> faces;

    std::optional<std::vector<BBox>>& field(EvidenceField f);
    const std::optional<std::vector<BBox>>& field(EvidenceField f) const;

    /// Boxes of a field; throws IncompleteRecord when it is absent.
    const std::vector<BBox>& require(EvidenceField f) const;
};

/**
 * Parses one JSONL record. Boxes are clamped to the image; throws ParseError
 * on malformed JSON, missing id or size, or boxes with x2 < x1 or y2 < y1.
 */
ImageQARecord parse_qa_record(const std::string& line);
nlohmann::json qa_record_to_json(const ImageQARecord& rec);

BBox clamp_box(const BBox& box, int width, int height);

/// Splits boxes by the side of x = width / 2 their centre lies on; centres on the line go right.
std::pair<std::vector<BBox>, std::vector<BBox>> split_heads_by_center(const std::vector<BBox>& heads, int width);

enum class QaRule { NoHeads, FlipMismatch, FaceHeadOverlap, HalfSplitMismatch, Custom };

std::string rule_name(QaRule rule);

struct QaDecision
{
    bool keep = true;
    std::optional<QaRule> failed_rule;
    std::string rule;   // name of the failed rule spec, empty when kept
    std::string detail;

    static QaDecision pass() { return {}; }
    static QaDecision drop(QaRule r, std::string detail);
};

QaDecision rule_no_heads(const ImageQARecord& rec);
QaDecision rule_flip_consistency(const ImageQARecord& rec);
/// Overlap means strictly positive intersection area; no faces passes.
QaDecision rule_face_head_overlap(const ImageQARecord& rec);
QaDecision rule_half_split(const ImageQARecord& rec);

/**
 * A predicate in the pipeline. `needs` lists the fields it reads so the
 * pipeline can fill them on demand; plugins use QaRule::Custom and a unique
 * name.
 */
struct QaRuleSpec
{
    std::string name;
    std::vector<EvidenceField> needs;
    std::function<QaDecision(const ImageQARecord&)> check;
};

QaRuleSpec builtin_rule(QaRule rule);
/// The four built-in rules in their canonical order.
std::vector<QaRuleSpec> default_rules();

/// Returns the boxes for the requested evidence of an image. Must be pure.
using DetectorInterface = std::function<std::vector<BBox>(const std::string& image_id, EvidenceField field)>;

/**
 * Detector backed by a fixed table, counting invocations. Copies share the
 * table and the counter. Unknown (image, field) pairs yield no boxes.
 */
class FixtureDetector
{
public:
    FixtureDetector();
    void set(const std::string& image_id, EvidenceField field, std::vector<BBox> boxes);
    std::vector<BBox> operator()(const std::string& image_id, EvidenceField field) const;
    std::size_t calls() const;

private:
    struct State
    {
        std::map<std::pair<std::string, EvidenceField>, std::vector<BBox>> table;
        std::atomic<std::size_t> calls{0};
    };
    std::shared_ptr<State> state_;
};

/**
 * Applies rules in order and stops at the first failure. Missing fields a
 * rule needs are filled from `detector` (clamped) or raise IncompleteRecord.
 */
QaDecision evaluate_record(
    ImageQARecord& rec, const std::vector<QaRuleSpec>& rules, const DetectorInterface& detector = {});

struct QaLineError
{
    std::size_t line = 0; // 1-based
    std::string message;
};

struct QaReport
{
    std::size_t total = 0; // non-blank input lines
    std::size_t kept = 0;
    std::map<std::string, std::size_t> dropped_by_rule;
    std::vector<QaLineError> errors; // lines that failed to parse or were incomplete

    double keep_rate() const;
    /// {"total", "kept", "keep_rate", "dropped_by_rule", "errors": [{"line", "message"}]}
    nlohmann::json to_json() const;
};

struct QaOptions
{
    std::vector<QaRuleSpec> rules = default_rules();
    DetectorInterface detector;
    bool strict = false; // abort on the first bad line instead of recording it
    int threads = 1;
    std::size_t batch_size = 4096;
};

struct QaResult
{
    std::vector<std::string> kept_lines;
    std::vector<std::optional<QaDecision>> decisions; // per input line; empty for blank or bad lines
    QaReport report;
};

/**
 * Runs the filter over JSONL lines. Kept lines are returned verbatim in input
 * order; results do not depend on the thread count. In strict mode the first
 * bad line (by position) raises ParseError or IncompleteRecord.
 */
QaResult run_pipeline(const std::vector<std::string>& lines, const QaOptions& options = {});

/// Streaming form: reads `in` in batches and writes kept lines to `kept`.
QaReport run_pipeline(std::istream& in, std::ostream& kept, const QaOptions& options = {});

} // namespace headkit
