#include "tipgrade/parsing.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <sstream>

namespace tipgrade {
namespace {

using nlohmann::json;

constexpr std::size_t kExcerptLimit = 2000;

std::string excerpt(std::string_view raw) {
    return std::string(raw.substr(0, kExcerptLimit));
}

ParseFailure fail(ParseStage stage, std::string detail, std::string_view raw) {
    return ParseFailure{stage, std::move(detail), excerpt(raw)};
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// A loosely-typed field value pulled out of the candidate object, either by
// strict JSON or by the tolerant per-field scan.
struct FieldValue {
    enum class Kind { Boolean, Number, Text } kind;
    bool boolean = false;
    double number = 0.0;
    std::string text;
};

std::optional<bool> as_boolean(const FieldValue& v) {
    if (v.kind == FieldValue::Kind::Boolean) {
        return v.boolean;
    }
    if (v.kind == FieldValue::Kind::Text) {
        const std::string t = lower(v.text);
        if (t == "true" || t == "yes") return true;
        if (t == "false" || t == "no") return false;
    }
    return std::nullopt;
}

std::optional<int> as_integer(const FieldValue& v) {
    if (v.kind == FieldValue::Kind::Number) {
        const double rounded = std::nearbyint(v.number);
        if (rounded == v.number) {
            return static_cast<int>(rounded);
        }
        return std::nullopt;
    }
    if (v.kind == FieldValue::Kind::Text) {
        try {
            std::size_t used = 0;
            const int value = std::stoi(v.text, &used);
            if (used == v.text.size()) {
                return value;
            }
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

using FieldMap = std::map<std::string, FieldValue>;

std::optional<FieldMap> fields_from_strict_json(const std::string& span) {
    json j = json::parse(span, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        return std::nullopt;
    }
    FieldMap out;
    for (const auto& [key, value] : j.items()) {
        FieldValue v{};
        if (value.is_boolean()) {
            v.kind = FieldValue::Kind::Boolean;
            v.boolean = value.get<bool>();
        } else if (value.is_number()) {
            v.kind = FieldValue::Kind::Number;
            v.number = value.get<double>();
        } else if (value.is_string()) {
            v.kind = FieldValue::Kind::Text;
            v.text = value.get<std::string>();
        } else {
            continue;   // nested values have no meaning in any response schema
        }
        out.emplace(key, std::move(v));
    }
    return out;
}

// Model output frequently drifts from strict JSON (missing commas, #-style
// comments, bare Yes/No). This path scans the span key by key instead.
FieldMap fields_from_tolerant_scan(const std::string& span) {
    FieldMap out;
    static const std::regex field_re(
        R"re("([A-Za-z_][A-Za-z0-9_]*)"\s*:\s*("(?:[^"\\]|\\.)*"|-?\d+(?:\.\d+)?|[A-Za-z]+))re");
    for (auto it = std::sregex_iterator(span.begin(), span.end(), field_re);
         it != std::sregex_iterator(); ++it) {
        const std::string key = (*it)[1].str();
        std::string token = (*it)[2].str();
        if (out.count(key) > 0) {
            continue;   // first occurrence wins
        }
        FieldValue v{};
        if (!token.empty() && token.front() == '"') {
            // Decode the JSON string literal, including escapes.
            json decoded = json::parse(token, nullptr, false);
            v.kind = FieldValue::Kind::Text;
            v.text = decoded.is_string() ? decoded.get<std::string>() : token;
        } else if (!token.empty() && (token.front() == '-' || std::isdigit(
                       static_cast<unsigned char>(token.front())))) {
            v.kind = FieldValue::Kind::Number;
            v.number = std::stod(token);
        } else {
            const std::string word = lower(token);
            if (word == "true" || word == "yes") {
                v.kind = FieldValue::Kind::Boolean;
                v.boolean = true;
            } else if (word == "false" || word == "no") {
                v.kind = FieldValue::Kind::Boolean;
                v.boolean = false;
            } else {
                v.kind = FieldValue::Kind::Text;
                v.text = token;
            }
        }
        out.emplace(key, std::move(v));
    }
    return out;
}

FieldMap extract_fields(const std::string& span) {
    if (auto strict = fields_from_strict_json(span)) {
        return *strict;
    }
    return fields_from_tolerant_scan(span);
}

} // namespace

std::string strip_reasoning(std::string_view raw, const ReasoningMarkers& markers) {
    std::string out;
    out.reserve(raw.size());
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t open = raw.find(markers.open, pos);
        if (open == std::string_view::npos) {
            out.append(raw.substr(pos));
            break;
        }
        out.append(raw.substr(pos, open - pos));
        const std::size_t close = raw.find(markers.close, open + markers.open.size());
        if (close == std::string_view::npos) {
            break;   // unmatched open removes through end of text
        }
        pos = close + markers.close.size();
    }
    return out;
}

ParseResult<std::string> extract_structure(std::string_view text) {
    std::size_t start = text.find('{');
    while (start != std::string_view::npos) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    return std::string(text.substr(start, i - start + 1));
                }
            }
        }
        start = text.find('{', start + 1);   // first brace never balanced; try the next
    }
    return fail(ParseStage::NoStructureFound, "no balanced braced object in completion", text);
}

ParseResult<ScoredEvaluation> parse_scored(std::string_view raw, const ReasoningMarkers& markers) {
    const std::string stripped = strip_reasoning(raw, markers);
    if (is_blank(stripped)) {
        return fail(ParseStage::EmptyCompletion, "completion empty after reasoning strip", raw);
    }
    auto span = extract_structure(stripped);
    if (!span.ok()) {
        return span.failure();
    }
    const FieldMap fields = extract_fields(span.value());

    auto score_it = fields.find("score");
    if (score_it == fields.end()) {
        return fail(ParseStage::BadField, "missing field \"score\"", raw);
    }
    const std::optional<int> score = as_integer(score_it->second);
    if (!score) {
        return fail(ParseStage::BadField, "field \"score\" is not an integer", raw);
    }
    if (*score < 0 || *score > 4) {
        return fail(ParseStage::OutOfRange, "score " + std::to_string(*score) + " outside [0,4]",
                    raw);
    }

    ScoredEvaluation result;
    result.score = *score;
    auto eval_it = fields.find("evaluation");
    if (eval_it != fields.end() && eval_it->second.kind == FieldValue::Kind::Text) {
        result.evaluation = eval_it->second.text;
    } else {
        result.missing_rationale = true;
    }
    return result;
}

ParseResult<AdditiveEvaluation> parse_additive(std::string_view raw,
                                               const ReasoningMarkers& markers) {
    const std::string stripped = strip_reasoning(raw, markers);
    if (is_blank(stripped)) {
        return fail(ParseStage::EmptyCompletion, "completion empty after reasoning strip", raw);
    }
    auto span = extract_structure(stripped);
    if (!span.ok()) {
        return span.failure();
    }
    const FieldMap fields = extract_fields(span.value());

    AdditiveEvaluation result;
    bool* const flags[3] = {&result.c1, &result.c2, &result.c3};
    const char* const names[3] = {"c1", "c2", "c3"};
    for (int i = 0; i < 3; ++i) {
        auto it = fields.find(names[i]);
        if (it == fields.end()) {
            return fail(ParseStage::BadField, std::string("missing criterion \"") + names[i] + "\"",
                        raw);
        }
        const std::optional<bool> value = as_boolean(it->second);
        if (!value) {
            return fail(ParseStage::BadField,
                        std::string("criterion \"") + names[i] + "\" is not a boolean", raw);
        }
        *flags[i] = *value;
    }
    if (auto it = fields.find("score"); it != fields.end()) {
        result.reported_score = as_integer(it->second);
    }
    if (auto it = fields.find("evaluation");
        it != fields.end() && it->second.kind == FieldValue::Kind::Text) {
        result.evaluation = it->second.text;
    }
    return result;
}

ParseResult<JudgeLMVerdict> parse_judgelm(std::string_view completion) {
    static const std::regex int_re(R"(-?\d+)");
    const std::string text(completion);
    std::smatch m;
    if (!std::regex_search(text, m, int_re)) {
        return fail(ParseStage::NoStructureFound, "no integer score in completion", completion);
    }
    const int score = std::stoi(m.str());
    if (score < 0 || score > 4) {
        return fail(ParseStage::OutOfRange, "score " + m.str() + " outside [0,4]", completion);
    }

    JudgeLMVerdict verdict;
    verdict.student_score = score;
    // Explanation starts after the line carrying the score.
    const std::size_t score_end = static_cast<std::size_t>(m.position()) + m.str().size();
    const std::size_t line_end = text.find('\n', score_end);
    if (line_end != std::string::npos) {
        std::string rest = text.substr(line_end + 1);
        while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) {
            rest.pop_back();
        }
        std::size_t lead = 0;
        while (lead < rest.size() && std::isspace(static_cast<unsigned char>(rest[lead]))) {
            ++lead;
        }
        verdict.explanation = rest.substr(lead);
    }
    return verdict;
}

ParseResult<RubricText> parse_rubric(std::string_view raw, const ReasoningMarkers& markers) {
    const std::string stripped = strip_reasoning(raw, markers);
    if (is_blank(stripped)) {
        return fail(ParseStage::EmptyCompletion, "completion empty after reasoning strip", raw);
    }

    RubricText rubric;
    rubric.origin = RubricOrigin::Generated;
    bool seen[5] = {false, false, false, false, false};

    std::istringstream lines(stripped);
    std::string line;
    while (std::getline(lines, line)) {
        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i + 1 >= line.size() || line[i] < '0' || line[i] > '4' || line[i + 1] != '.') {
            continue;   // prose, blank line, or a number outside the tier range
        }
        const int tier = line[i] - '0';
        if (seen[tier]) {
            return fail(ParseStage::BadField, "tier " + std::to_string(tier) + " appears twice",
                        raw);
        }
        std::size_t text_start = i + 2;
        while (text_start < line.size() &&
               std::isspace(static_cast<unsigned char>(line[text_start]))) {
            ++text_start;
        }
        std::string text = line.substr(text_start);
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
            text.pop_back();
        }
        if (text.empty()) {
            return fail(ParseStage::BadField, "tier " + std::to_string(tier) + " has no text", raw);
        }
        seen[tier] = true;
        rubric.tiers[static_cast<std::size_t>(tier)] = std::move(text);
    }

    for (int tier = 0; tier < 5; ++tier) {
        if (!seen[tier]) {
            return fail(ParseStage::BadField, "missing tier " + std::to_string(tier), raw);
        }
    }
    return rubric;
}

const char* parse_stage_name(ParseStage stage) {
    switch (stage) {
        case ParseStage::NoStructureFound: return "no_structure_found";
        case ParseStage::BadField: return "bad_field";
        case ParseStage::OutOfRange: return "out_of_range";
        case ParseStage::EmptyCompletion: return "empty_completion";
    }
    return "unknown";
}

} // namespace tipgrade
