#include "tipgrade/parsing.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <vector>

using namespace tipgrade;
using nlohmann::json;

namespace {

struct CorpusCase {
    std::string name;
    std::string raw;
    json expected;
};

std::vector<CorpusCase> load_corpus() {
    const std::filesystem::path dir =
        std::filesystem::path(TIPGRADE_FIXTURE_DIR) / "parser_corpus";
    std::vector<CorpusCase> cases;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string filename = entry.path().filename().string();
        const std::string raw_suffix = ".raw.txt";
        if (filename.size() <= raw_suffix.size() ||
            filename.substr(filename.size() - raw_suffix.size()) != raw_suffix) {
            continue;
        }
        CorpusCase c;
        c.name = filename.substr(0, filename.size() - raw_suffix.size());
        {
            std::ifstream in(entry.path(), std::ios::binary);
            c.raw.assign((std::istreambuf_iterator<char>(in)), {});
        }
        std::ifstream expect(dir / (c.name + ".expected.json"), std::ios::binary);
        REQUIRE_MESSAGE(expect.good(), c.name, ": missing expected file");
        c.expected = json::parse(expect);
        cases.push_back(std::move(c));
    }
    std::sort(cases.begin(), cases.end(),
              [](const CorpusCase& a, const CorpusCase& b) { return a.name < b.name; });
    return cases;
}

ParseStage stage_from_name(const std::string& name) {
    if (name == "no_structure_found") return ParseStage::NoStructureFound;
    if (name == "bad_field") return ParseStage::BadField;
    if (name == "out_of_range") return ParseStage::OutOfRange;
    if (name == "empty_completion") return ParseStage::EmptyCompletion;
    FAIL("unknown stage name ", name);
    return ParseStage::BadField;
}

template <class T>
void check_outcome(const CorpusCase& c, const ParseResult<T>& result,
                   void (*check_value)(const CorpusCase&, const T&)) {
    INFO("fixture: ", c.name);
    if (c.expected.at("outcome") == "ok") {
        REQUIRE_MESSAGE(result.ok(), c.name, ": expected success, got ",
                        result.ok() ? "" : result.failure().detail);
        check_value(c, result.value());
    } else {
        REQUIRE_MESSAGE(!result.ok(), c.name, ": expected failure");
        CHECK(result.failure().stage ==
              stage_from_name(c.expected.at("stage").get<std::string>()));
        CHECK(result.failure().raw_excerpt.size() <= 2000);
    }
}

} // namespace

TEST_CASE("the parser corpus covers at least twenty fixtures") {
    CHECK(load_corpus().size() >= 20);
}

TEST_CASE("every corpus fixture yields its expected verdict or failure") {
    for (const CorpusCase& c : load_corpus()) {
        const std::string parser = c.expected.at("parser").get<std::string>();
        if (parser == "scored") {
            check_outcome<ScoredEvaluation>(
                c, parse_scored(c.raw), [](const CorpusCase& cc, const ScoredEvaluation& v) {
                    CHECK(v.score == cc.expected.at("score").get<int>());
                    CHECK(v.evaluation == cc.expected.at("evaluation").get<std::string>());
                    if (cc.expected.contains("missing_rationale")) {
                        CHECK(v.missing_rationale == cc.expected["missing_rationale"].get<bool>());
                    }
                });
        } else if (parser == "additive") {
            check_outcome<AdditiveEvaluation>(
                c, parse_additive(c.raw), [](const CorpusCase& cc, const AdditiveEvaluation& v) {
                    CHECK(v.c1 == cc.expected.at("c1").get<bool>());
                    CHECK(v.c2 == cc.expected.at("c2").get<bool>());
                    CHECK(v.c3 == cc.expected.at("c3").get<bool>());
                    REQUIRE(v.reported_score.has_value());
                    CHECK(*v.reported_score == cc.expected.at("reported_score").get<int>());
                    CHECK(v.evaluation == cc.expected.at("evaluation").get<std::string>());
                });
        } else if (parser == "judgelm") {
            check_outcome<JudgeLMVerdict>(
                c, parse_judgelm(c.raw), [](const CorpusCase& cc, const JudgeLMVerdict& v) {
                    CHECK(v.student_score == cc.expected.at("student_score").get<int>());
                    CHECK(v.explanation == cc.expected.at("explanation").get<std::string>());
                    CHECK(v.reference_score == 4);
                });
        } else if (parser == "rubric") {
            check_outcome<RubricText>(
                c, parse_rubric(c.raw), [](const CorpusCase& cc, const RubricText& v) {
                    CHECK(v.origin == RubricOrigin::Generated);
                    const auto tiers = cc.expected.at("tiers").get<std::vector<std::string>>();
                    REQUIRE(tiers.size() == 5);
                    for (std::size_t i = 0; i < 5; ++i) {
                        CHECK(v.tiers[i] == tiers[i]);
                    }
                });
        } else {
            FAIL("unknown parser kind ", parser);
        }
    }
}

TEST_CASE("strip_reasoning is idempotent over the whole corpus") {
    for (const CorpusCase& c : load_corpus()) {
        const std::string once = strip_reasoning(c.raw);
        CHECK(strip_reasoning(once) == once);
    }
}

TEST_CASE("strip_reasoning removes well-formed blocks and keeps the rest") {
    CHECK(strip_reasoning("<think>abc</think>{\"score\":3}") == "{\"score\":3}");
    CHECK(strip_reasoning("no markers at all") == "no markers at all");
    CHECK(strip_reasoning("<think>abc") == "");
    CHECK(strip_reasoning("a<think>x</think>b<think>y</think>c") == "abc");
    // a stray close marker is ordinary text
    CHECK(strip_reasoning("left</think>right") == "left</think>right");
}

TEST_CASE("strip_reasoning honors configured markers") {
    ReasoningMarkers markers{"[THOUGHT]", "[/THOUGHT]"};
    CHECK(strip_reasoning("[THOUGHT]xyz[/THOUGHT]answer", markers) == "answer");
    CHECK(strip_reasoning("<think>not these</think>", markers) == "<think>not these</think>");
}

TEST_CASE("extract_structure finds the first balanced object") {
    auto fenced = extract_structure("Here:\n```\n{\"score\": 2, \"evaluation\": \"ok\"}\n```");
    REQUIRE(fenced.ok());
    CHECK(fenced.value() == "{\"score\": 2, \"evaluation\": \"ok\"}");

    auto empty_obj = extract_structure("{}");
    REQUIRE(empty_obj.ok());
    CHECK(empty_obj.value() == "{}");

    auto none = extract_structure("score: 4 (no braces)");
    REQUIRE_FALSE(none.ok());
    CHECK(none.failure().stage == ParseStage::NoStructureFound);
}

TEST_CASE("extract_structure returns a substring of its input") {
    const std::vector<std::string> inputs = {
        "{}", "prose {\"a\": 1} prose", "{\"s\": \"}{\"}", "x{y{z}}tail",
        "unbalanced { then {\"ok\": true}",
    };
    for (const std::string& input : inputs) {
        auto result = extract_structure(input);
        if (result.ok()) {
            CHECK(input.find(result.value()) != std::string::npos);
        }
    }
}

TEST_CASE("extract_structure skips an unbalanced leading brace") {
    auto result = extract_structure("{ never closes... but {\"score\": 1} does");
    REQUIRE(result.ok());
    CHECK(result.value() == "{\"score\": 1}");
}

TEST_CASE("parse_scored never returns an out-of-range value") {
    for (int score : {-3, -1, 5, 7, 100}) {
        const std::string raw =
            "{\"score\": " + std::to_string(score) + ", \"evaluation\": \"x\"}";
        auto result = parse_scored(raw);
        REQUIRE_FALSE(result.ok());
        CHECK(result.failure().stage == ParseStage::OutOfRange);
    }
    for (int score = 0; score <= 4; ++score) {
        auto result = parse_scored("{\"score\": " + std::to_string(score) + "}");
        REQUIRE(result.ok());
        CHECK(result.value().score == score);
    }
}

TEST_CASE("parse failure excerpts are capped at 2000 chars") {
    std::string huge = "prefix with no braces ";
    huge.append(5000, 'z');
    auto result = parse_scored(huge);
    REQUIRE_FALSE(result.ok());
    CHECK(result.failure().raw_excerpt.size() == 2000);
}

TEST_CASE("parse_judgelm separates score line from explanation") {
    auto v = parse_judgelm(" 3\nBoth students provided correct answers to the question.");
    REQUIRE(v.ok());
    CHECK(v.value().student_score == 3);
    CHECK(v.value().explanation == "Both students provided correct answers to the question.");

    auto multiline = parse_judgelm("Score: 2\nline one\nline two");
    REQUIRE(multiline.ok());
    // the first integer is the student score even with prose around it
    CHECK(multiline.value().student_score == 2);
    CHECK(multiline.value().explanation == "line one\nline two");
}
