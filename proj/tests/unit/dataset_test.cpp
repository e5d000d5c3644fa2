#include "tipgrade/dataset.hpp"
#include "tipgrade/errors.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <fstream>

using namespace tipgrade;
using namespace tipgrade::testing;

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& line : lines) {
        out << line << '\n';
    }
}

} // namespace

TEST_CASE("load_dataset reads a minimal well-formed file") {
    TempDir dir("dataset");
    write_lines(dir.file("ds.jsonl"),
                {R"({"kind":"question","question_id":"q1","question_text":"Q?","context":"ctx","reference_answer":"R"})",
                 R"({"kind":"answer","question_id":"q1","student_id":"s1","answer_text":"A"})"});
    const Dataset d = load_dataset(dir.file("ds.jsonl"));
    CHECK(d.questions().size() == 1);
    CHECK(d.answers().size() == 1);
    CHECK(d.find_question("q1") != nullptr);
    CHECK(d.find_answer("q1", "s1")->answer_text == "A");
}

TEST_CASE("load_dataset accepts a paper-shaped corpus of 110 answers") {
    TempDir dir("dataset110");
    const Dataset fixture = make_fixture_dataset();
    save_dataset(fixture, dir.file("ds.jsonl"));
    const Dataset d = load_dataset(dir.file("ds.jsonl"));
    CHECK(d.questions().size() == 10);
    CHECK(d.answers().size() == 110);
    CHECK(d.human_scores().size() == 110);
}

TEST_CASE("load_dataset rejects a dangling question reference by name") {
    TempDir dir("dangling");
    write_lines(dir.file("ds.jsonl"),
                {R"({"kind":"question","question_id":"q1","question_text":"Q?","context":"ctx","reference_answer":"R"})",
                 R"({"kind":"answer","question_id":"q99","student_id":"s1","answer_text":"A"})"});
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("ds.jsonl")),
                         doctest::Contains("q99"), DatasetError);
}

TEST_CASE("load_dataset reports the line number of a malformed record") {
    TempDir dir("malformed");
    write_lines(dir.file("ds.jsonl"),
                {R"({"kind":"question","question_id":"q1","question_text":"Q?","context":"ctx","reference_answer":"R"})",
                 R"(this is not json)"});
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("ds.jsonl")),
                         doctest::Contains("line 2"), DatasetError);
}

TEST_CASE("load_dataset fails on an unreadable path") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/nowhere.jsonl"), DatasetError);
}

TEST_CASE("empty answer text is accepted at ingestion") {
    TempDir dir("empty_answer");
    write_lines(dir.file("ds.jsonl"),
                {R"({"kind":"question","question_id":"q1","question_text":"Q?","context":"ctx","reference_answer":"R"})",
                 R"({"kind":"answer","question_id":"q1","student_id":"s1","answer_text":""})"});
    const Dataset d = load_dataset(dir.file("ds.jsonl"));
    CHECK(d.find_answer("q1", "s1")->answer_text.empty());
}

TEST_CASE("validate_dataset passes a valid minimal dataset") {
    Dataset d({make_question("q1")}, {make_answer("q1", "s1", "A")}, {});
    CHECK(validate_dataset(d).empty());
}

TEST_CASE("validate_dataset flags a score outside the scale") {
    Dataset d({make_question("q1")}, {make_answer("q1", "s1", "A")},
              {{"q1", "s1", 5, "too generous"}});
    const ValidationReport report = validate_dataset(d);
    REQUIRE(report.size() == 1);
    CHECK(report[0].rule == "score_out_of_range");
    CHECK(report[0].message == "score out of [0,4]: 5");
}

TEST_CASE("validate_dataset flags duplicate answer keys once") {
    Dataset d({make_question("q1")},
              {make_answer("q1", "s1", "first"), make_answer("q1", "s1", "second")}, {});
    const ValidationReport report = validate_dataset(d);
    REQUIRE(report.size() == 1);
    CHECK(report[0].rule == "duplicate_answer_key");
}

TEST_CASE("validate_dataset flags empty question fields") {
    Dataset d({QuestionItem{"q1", "", "", ""}}, {}, {});
    const ValidationReport report = validate_dataset(d);
    CHECK(report.size() == 3);   // question_text, context, reference_answer
}

TEST_CASE("dataset round-trip preserves every field byte-for-byte") {
    TempDir dir("roundtrip");
    Dataset original({make_question("q1", "What?", "ctx with \"quotes\" and\nnewline",
                                    "ref with unicode \xc3\xa9")},
                     {make_answer("q1", "s1", "  spaced  answer, unruly\ttext ")},
                     {{"q1", "s1", 3, "explanation"}});
    save_dataset(original, dir.file("a.jsonl"));
    const Dataset reloaded = load_dataset(dir.file("a.jsonl"));
    save_dataset(reloaded, dir.file("b.jsonl"));

    std::ifstream a(dir.file("a.jsonl"), std::ios::binary);
    std::ifstream b(dir.file("b.jsonl"), std::ios::binary);
    const std::string a_bytes((std::istreambuf_iterator<char>(a)), {});
    const std::string b_bytes((std::istreambuf_iterator<char>(b)), {});
    CHECK(a_bytes == b_bytes);
    CHECK(reloaded.answers()[0].answer_text == "  spaced  answer, unruly\ttext ");
    CHECK(reloaded.questions()[0].context == "ctx with \"quotes\" and\nnewline");
}

TEST_CASE("validate after load is empty for every file load accepts") {
    TempDir dir("load_validates");
    const Dataset fixture = make_fixture_dataset(FixtureShape{3, 4, {}, true});
    save_dataset(fixture, dir.file("ds.jsonl"));
    const Dataset d = load_dataset(dir.file("ds.jsonl"));
    CHECK(validate_dataset(d).empty());
}

TEST_CASE("attach_human_scores merges and reports replacements") {
    TempDir dir("attach");
    Dataset d({make_question("q1")},
              {make_answer("q1", "s1", "A"), make_answer("q1", "s2", "B")},
              {{"q1", "s1", 1, "old"}});

    SUBCASE("empty score file leaves the dataset unchanged") {
        write_lines(dir.file("scores.jsonl"), {});
        const AttachResult result = attach_human_scores(d, dir.file("scores.jsonl"));
        CHECK(result.attached == 0);
        CHECK(result.replaced == 0);
        CHECK(result.dataset.human_scores().size() == 1);
    }

    SUBCASE("new and replacing scores are counted separately") {
        write_lines(dir.file("scores.jsonl"),
                    {R"({"kind":"human_score","question_id":"q1","student_id":"s1","score":4,"explanation":"new"})",
                     R"({"kind":"human_score","question_id":"q1","student_id":"s2","score":2,"explanation":"fresh"})"});
        const AttachResult result = attach_human_scores(d, dir.file("scores.jsonl"));
        CHECK(result.attached == 1);
        CHECK(result.replaced == 1);
        CHECK(result.dataset.find_human_score("q1", "s1")->score == 4);
        CHECK(result.dataset.find_human_score("q1", "s2")->score == 2);
    }

    SUBCASE("a score for an unknown answer is a key-resolution error") {
        write_lines(dir.file("scores.jsonl"),
                    {R"({"kind":"human_score","question_id":"q9","student_id":"s9","score":2,"explanation":"?"})"});
        CHECK_THROWS_AS(attach_human_scores(d, dir.file("scores.jsonl")), DatasetError);
    }
}

TEST_CASE("attach covers the full 110-answer corpus") {
    TempDir dir("attach_full");
    const Dataset with_scores = make_fixture_dataset();
    Dataset bare(with_scores.questions(), with_scores.answers(), {});
    std::vector<HumanScore> scores = with_scores.human_scores();
    Dataset score_only({}, {}, scores);
    // write a score-only file by hand
    {
        std::ofstream out(dir.file("scores.jsonl"), std::ios::binary);
        for (const HumanScore& h : scores) {
            out << R"({"kind":"human_score","question_id":")" << h.question_id
                << R"(","student_id":")" << h.student_id << R"(","score":)" << h.score
                << R"(,"explanation":"h"})" << '\n';
        }
    }
    const AttachResult result = attach_human_scores(bare, dir.file("scores.jsonl"));
    CHECK(result.attached == 110);
    CHECK(result.dataset.human_scores().size() == 110);
}
