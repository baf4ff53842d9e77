#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "vitmm/errors.hpp"
#include "vitmm/eval.hpp"

using namespace vitmm;

namespace {

// full-matrix edit distance, independent of the two-row implementation
std::size_t levenshtein_oracle(const std::string &a, const std::string &b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                            std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

std::string random_word(std::mt19937 &rng, int max_len) {
    std::uniform_int_distribution<int> len(0, max_len);
    std::uniform_int_distribution<int> ch(0, 3);
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s.push_back(char('a' + ch(rng)));
    return s;
}

} // namespace

TEST_CASE("prompt templates") {
    std::vector<std::string> opts = {"red", "blue"};
    std::string mc = render_prompt(Task::MMMU_MATHVISTA, "What color?", &opts);
    CHECK(mc.find("Question: What color?") == 0);
    CHECK(mc.find("A. red\nB. blue\n") != std::string::npos);
    CHECK(mc.find("Final Answer: <answer>") != std::string::npos);
    CHECK(mc.find("You cannot answer that the question is unanswerable.") != std::string::npos);

    std::string open = render_prompt(Task::MMMU_MATHVISTA, "How many?");
    CHECK(open.find("A. ") == std::string::npos);

    std::string chart = render_prompt(Task::CHARTQA, "Share of X?");
    CHECK(chart.find("a decimal value like 0.25 instead of 1:4") != std::string::npos);
    CHECK(chart.find("it should include a %") != std::string::npos);

    std::string vqa = render_prompt(Task::VQAV2, "Is it sunny?");
    CHECK(vqa.find("single word, number, or short phrase") != std::string::npos);
    CHECK(vqa.rfind("Is it sunny?") == vqa.size() - 12);

    std::string doc = render_prompt(Task::DOCVQA, "Invoice date?");
    CHECK(doc.find("Answer the question using a single word or phrase.") == 0);

    CHECK_THROWS_AS(render_prompt(Task::CHARTQA, "q", &opts), ConfigError);
}

TEST_CASE("level and metric names") {
    CHECK(parse_level_name("baseline") == ParsingLevel::BASELINE);
    CHECK(parse_level_name("L3") == ParsingLevel::L3);
    CHECK(level_name(ParsingLevel::L2) == "l2");
    CHECK_THROWS_AS(parse_level_name("l9"), ConfigError);
    CHECK(parse_metric_name("ANLS") == Metric::ANLS);
    CHECK_THROWS_AS(parse_metric_name("bleu"), ConfigError);
}

TEST_CASE("answer extraction goldens") {
    const std::vector<std::string> ref_b = {"B"};
    struct Case {
        const char *response;
        ParsingLevel level;
        AnswerType type;
        std::vector<std::string> refs;
        const char *want; // nullptr means no extraction
        ParsingLevel want_level;
    };
    const std::vector<Case> cases = {
        // strict terminal marker
        {"Reasoning...\nFinal Answer: B", ParsingLevel::BASELINE, AnswerType::LETTER, {},
         "B", ParsingLevel::BASELINE},
        {"final answer: 42.", ParsingLevel::BASELINE, AnswerType::NUMBER, {}, "42",
         ParsingLevel::BASELINE},
        // prose after the marker invalidates it
        {"Final Answer: B\nWait, no.", ParsingLevel::BASELINE, AnswerType::LETTER, {},
         nullptr, ParsingLevel::BASELINE},
        // shorter marker only at L1 and beyond
        {"The Answer: C", ParsingLevel::BASELINE, AnswerType::LETTER, {}, nullptr,
         ParsingLevel::BASELINE},
        {"The Answer: C", ParsingLevel::L1, AnswerType::LETTER, {}, "C", ParsingLevel::L1},
        // markdown variants at L2
        {"**Final Answer**: D", ParsingLevel::L2, AnswerType::LETTER, {}, "D",
         ParsingLevel::L2},
        {"**Answer:** E", ParsingLevel::L2, AnswerType::LETTER, {}, "E", ParsingLevel::L2},
        {"*Answer: F*", ParsingLevel::L2, AnswerType::LETTER, {}, "F", ParsingLevel::L2},
        // starred decoration must not leak through the L1 marker rule
        {"**Answer:** E", ParsingLevel::L1, AnswerType::LETTER, {}, nullptr,
         ParsingLevel::L1},
        // reference-directed search at L3
        {"I believe the answer is (B) here.", ParsingLevel::L3, AnswerType::LETTER,
         {"B"}, "B", ParsingLevel::L3},
        {"The total is 6000 units.", ParsingLevel::L3, AnswerType::NUMBER, {"6"}, "6",
         ParsingLevel::L3},
        {"Population was 1,234,567 then.", ParsingLevel::L3, AnswerType::NUMBER,
         {"1234567"}, "1234567", ParsingLevel::L3},
        {"It's clearly a golden retriever.", ParsingLevel::L3, AnswerType::TEXT,
         {"Golden Retriever"}, "Golden Retriever", ParsingLevel::L3},
        {"No idea, sorry.", ParsingLevel::L3, AnswerType::TEXT, {"cat"}, nullptr,
         ParsingLevel::L3},
    };
    for (const auto &c : cases) {
        CAPTURE(c.response);
        ParsedAnswer got = extract_answer(c.response, c.level, c.type, c.refs);
        if (c.want == nullptr) {
            CHECK_FALSE(got.text.has_value());
        } else {
            REQUIRE(got.text.has_value());
            CHECK(*got.text == c.want);
            CHECK(got.matched_level == c.want_level);
        }
    }
}

TEST_CASE("stricter rules win even at looser levels") {
    // the response carries both an explicit marker and the reference elsewhere
    ParsedAnswer got = extract_answer("B is tempting.\nFinal Answer: C", ParsingLevel::L3,
                                      AnswerType::LETTER, {"B"});
    REQUIRE(got.text.has_value());
    CHECK(*got.text == "C");
    CHECK(got.matched_level == ParsingLevel::BASELINE);
}

TEST_CASE("letter search respects word boundaries and case") {
    // "B" must not fire inside "Bob"
    CHECK_FALSE(extract_answer("Bob went home.", ParsingLevel::L3, AnswerType::LETTER, {"B"})
                    .text.has_value());
    CHECK_FALSE(extract_answer("b is lowercase.", ParsingLevel::L3, AnswerType::LETTER, {"B"})
                    .text.has_value());
    // text search is whole-word: "cat" must not fire inside "catalog"
    CHECK_FALSE(extract_answer("see the catalog", ParsingLevel::L3, AnswerType::TEXT, {"cat"})
                    .text.has_value());
}

TEST_CASE("exact match") {
    CHECK(exact_match("B.", "b") == 1);
    CHECK(exact_match("  Yes ", "yes") == 1);
    CHECK(exact_match("6.0", "6") == 0); // no numeric coercion
    CHECK(exact_match("Paris", "paris.") == 1);
    CHECK(exact_match("Paris", "London") == 0);
}

TEST_CASE("levenshtein examples and oracle (property)") {
    CHECK(levenshtein("kitten", "sitting") == 3);
    CHECK(levenshtein("", "abc") == 3);
    CHECK(levenshtein("abc", "abc") == 0);

    std::mt19937 rng(51);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::string a = random_word(rng, 12), b = random_word(rng, 12);
        CHECK(levenshtein(a, b) == levenshtein_oracle(a, b));
    }
}

TEST_CASE("anls") {
    CHECK(anls("hello", "Hello") == doctest::Approx(1.0));
    CHECK(anls("hello", "hella") == doctest::Approx(0.8));
    CHECK(anls("abc", "xyz") == 0.0); // NL >= 0.5 scores zero
    CHECK(anls("", "") == doctest::Approx(1.0));
    CHECK(anls_multi("hella", {"xyz", "hello"}) == doctest::Approx(0.8));
    CHECK(anls_multi("x", {}) == 0.0);
}

TEST_CASE("vqa normalization and match") {
    CHECK(vqa_normalize("Two Dogs!") == "2 dogs");
    CHECK(vqa_normalize("it's ten.") == "its 10");
    CHECK(vqa_normalize("  A  B ") == "a b");

    std::vector<std::string> refs10(10, "no");
    refs10[0] = refs10[1] = refs10[2] = "yes";
    CHECK(vqa_match("Yes", refs10) == doctest::Approx(1.0)); // 3 matches cap at 1
    std::vector<std::string> one_of_ten(10, "no");
    one_of_ten[0] = "yes";
    CHECK(vqa_match("yes", one_of_ten) == doctest::Approx(1.0 / 3.0));
    CHECK(vqa_match("two", {"2"}) == doctest::Approx(1.0)); // single ref, exact after norm
    CHECK(vqa_match("maybe", {"2"}) == 0.0);
    CHECK_THROWS_AS(vqa_match("x", {}), DataError);
}

TEST_CASE("record parsing") {
    auto rec = record_from_json_line(
        R"({"id":"q1","response":"Final Answer: B","reference":"B","answer_type":"letter","category":"math"})");
    CHECK(rec.id == "q1");
    CHECK(rec.references == std::vector<std::string>{"B"});
    CHECK(rec.answer_type == AnswerType::LETTER);
    CHECK(rec.category == "math");

    auto multi = record_from_json_line(
        R"({"id":"q2","response":"x","reference":["a","b"],"answer_type":"text"})");
    CHECK(multi.references.size() == 2);
    CHECK(multi.category.empty());

    CHECK_THROWS_AS(record_from_json_line("not json"), DataError);
    CHECK_THROWS_AS(record_from_json_line(R"({"id":"x"})"), DataError);
    CHECK_THROWS_AS(
        record_from_json_line(R"({"id":"x","response":"r","reference":5,"answer_type":"text"})"),
        DataError);
    CHECK_THROWS_AS(
        record_from_json_line(
            R"({"id":"x","response":"r","reference":"a","answer_type":"float"})"),
        DataError);
}

TEST_CASE("evaluate_records reporting") {
    const std::string jsonl =
        R"({"id":"1","response":"Final Answer: B","reference":"B","answer_type":"letter","category":"mc"})"
        "\n"
        R"({"id":"2","response":"The Answer: C","reference":"C","answer_type":"letter","category":"mc"})"
        "\n"
        R"({"id":"3","response":"I would pick D overall.","reference":"D","answer_type":"letter","category":"mc"})"
        "\n"
        "this line is broken\n"
        R"({"id":"4","response":"no marker at all","reference":"Z","answer_type":"letter","category":"mc"})"
        "\n";
    const std::vector<ParsingLevel> all = {ParsingLevel::BASELINE, ParsingLevel::L1,
                                           ParsingLevel::L2, ParsingLevel::L3};
    EvalReport rep = evaluate_records(jsonl, Metric::EXACT, all);
    CHECK(rep.records == 4);
    CHECK(rep.errors == 1);
    REQUIRE(rep.levels.size() == 4);
    CHECK(rep.levels[0].score == doctest::Approx(0.25)); // only the strict marker
    CHECK(rep.levels[1].score == doctest::Approx(0.50)); // plus "Answer:"
    CHECK(rep.levels[3].score == doctest::Approx(0.75)); // plus the reference search
    CHECK(rep.levels[3].by_category.at("mc") == doctest::Approx(0.75));

    // looser parsing can only help
    for (std::size_t i = 1; i < rep.levels.size(); ++i)
        CHECK(rep.levels[i].score >= rep.levels[i - 1].score);

    const std::string js = report_to_json(rep);
    CHECK(js.find("\"baseline\"") != std::string::npos);
    const std::string table = report_to_table(rep);
    CHECK(table.find("records 4, errors 1") != std::string::npos);

    CHECK_THROWS_AS(evaluate_records("", Metric::EXACT, all), DataError);
    CHECK_THROWS_AS(evaluate_records("\n \n", Metric::EXACT, all), DataError);
}

TEST_CASE("per-record score is monotone in parsing level (property)") {
    std::mt19937 rng(52);
    const std::vector<std::string> pool = {
        "Final Answer: B", "The Answer: B", "**Answer:** B", "it must be B",
        "Final Answer: Q\nactually B", "nothing here", "B Final Answer: C",
    };
    const std::vector<ParsingLevel> all = {ParsingLevel::BASELINE, ParsingLevel::L1,
                                           ParsingLevel::L2, ParsingLevel::L3};
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int trial = 0; trial < 200; ++trial) {
        PredictionRecord rec;
        rec.id = "t";
        rec.response = pool[pick(rng)];
        rec.references = {"B"};
        rec.answer_type = AnswerType::LETTER;
        double prev = -1;
        for (ParsingLevel lvl : all) {
            const double s = score_record(rec, Metric::EXACT, lvl);
            CHECK(s >= prev);
            prev = s;
        }
    }
}
