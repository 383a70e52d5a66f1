#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "helpers.hpp"
#include "nlistack/error.hpp"
#include "nlistack/eval.hpp"
#include "nlistack/numeric.hpp"

using namespace nlistack;

namespace {

PredictionSet predictions_of(
    const std::vector<std::tuple<std::string, std::string, std::string>>& rows) {
    PredictionSet set;
    for (const auto& [id, truth, predicted] : rows) {
        set.entries.push_back(PredictionEntry{id, truth, predicted});
    }
    return set;
}

// Builds aligned prediction sets realizing a requested concordance table.
void concordance_pair(long long n11, long long n10, long long n01, long long n00,
                      PredictionSet& a, PredictionSet& b) {
    a.entries.clear();
    b.entries.clear();
    long long next = 0;
    const auto add = [&](bool a_correct, bool b_correct) {
        const std::string id = "doc" + std::to_string(next++);
        a.entries.push_back(PredictionEntry{id, "t", a_correct ? "t" : "x"});
        b.entries.push_back(PredictionEntry{id, "t", b_correct ? "t" : "x"});
    };
    for (long long i = 0; i < n11; ++i) add(true, true);
    for (long long i = 0; i < n10; ++i) add(true, false);
    for (long long i = 0; i < n01; ++i) add(false, true);
    for (long long i = 0; i < n00; ++i) add(false, false);
}

} // namespace

TEST_CASE("per-class F1 is the harmonic mean of precision and recall") {
    // 25 instances of class a: 24 predicted a (recall 0.96) plus 1 miss;
    // 2 extra false a predictions give precision 24/26 != 0.92... build
    // the arithmetic-friendly case instead: precision 23/25 = 0.92,
    // recall 23/24 is not 0.96 -- so pick counts that hit both exactly:
    // tp=46, fp=4 (precision 0.92), fn=2 (recall ~0.9583)?  Exact 0.92 and
    // 0.96 need tp/(tp+fp)=23/25 and tp/(tp+fn)=24/25: tp must be a
    // multiple of lcm(23,24)=552.  Synthesizing 576 rows is cheap.
    PredictionSet set;
    const long long tp = 552, fp = 48, fn = 23; // 552/600=0.92, 552/575=0.96
    long long next = 0;
    for (long long i = 0; i < tp; ++i)
        set.entries.push_back({"d" + std::to_string(next++), "a", "a"});
    for (long long i = 0; i < fp; ++i)
        set.entries.push_back({"d" + std::to_string(next++), "b", "a"});
    for (long long i = 0; i < fn; ++i)
        set.entries.push_back({"d" + std::to_string(next++), "a", "b"});
    const EvaluationReport report = confusion_and_metrics(set, {"a", "b"});
    const PerClassMetrics& a = report.per_class.at("a");
    CHECK(a.precision == doctest::Approx(0.92));
    CHECK(a.recall == doctest::Approx(0.96));
    CHECK(a.f1 == doctest::Approx(2.0 * 0.92 * 0.96 / (0.92 + 0.96)));
    CHECK(a.f1 == doctest::Approx(0.9395744680851064));
}

TEST_CASE("confusion matrix counts truth rows against predicted columns") {
    const PredictionSet set = predictions_of({
        {"1", "a", "a"},
        {"2", "a", "b"},
        {"3", "b", "b"},
        {"4", "b", "b"},
        {"5", "c", "a"},
        {"6", "c", "c"},
    });
    const EvaluationReport report = confusion_and_metrics(set, {"a", "b", "c"});
    CHECK(report.n == 6);
    CHECK(report.accuracy == doctest::Approx(4.0 / 6.0));
    const std::vector<std::vector<long long>> expected = {
        {1, 1, 0},
        {0, 2, 0},
        {1, 0, 1},
    };
    CHECK(report.confusion == expected);
    CHECK(report.labels == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("macro metrics average per-class values; exclusion recomputes") {
    const PredictionSet set = predictions_of({
        {"1", "a", "a"},
        {"2", "b", "b"},
        {"3", "c", "a"},
    });
    const EvaluationReport report = confusion_and_metrics(set, {"a", "b", "c"});
    const double f1_a = report.per_class.at("a").f1;
    const double f1_b = report.per_class.at("b").f1;
    const double f1_c = report.per_class.at("c").f1;
    CHECK(report.macro_f1 == doctest::Approx((f1_a + f1_b + f1_c) / 3.0));
    CHECK(macro_f1_excluding(report, {"c"}) == doctest::Approx((f1_a + f1_b) / 2.0));
    CHECK_THROWS_AS(macro_f1_excluding(report, {"a", "b", "c"}), ConfigError);
}

TEST_CASE("zero denominators set degenerate flags instead of dividing") {
    // Class c never occurs and is never predicted: precision, recall and F1
    // all have empty denominators.
    const PredictionSet set = predictions_of({{"1", "a", "a"}, {"2", "b", "a"}});
    const EvaluationReport report = confusion_and_metrics(set, {"a", "b", "c"});
    const PerClassMetrics& c = report.per_class.at("c");
    CHECK(c.degenerate_precision);
    CHECK(c.degenerate_recall);
    CHECK(c.degenerate_f1);
    CHECK(c.precision == 0.0);
    CHECK(c.recall == 0.0);
    CHECK(c.f1 == 0.0);
    // Class b occurs but is never predicted: recall is well-defined (0),
    // precision is degenerate.
    const PerClassMetrics& b = report.per_class.at("b");
    CHECK(b.degenerate_precision);
    CHECK_FALSE(b.degenerate_recall);
    CHECK(b.recall == 0.0);
}

TEST_CASE("unknown labels in the prediction set are rejected") {
    const PredictionSet set = predictions_of({{"1", "a", "z"}});
    CHECK(testing::throws_with_substring<DataError>(
        [&] { confusion_and_metrics(set, {"a", "b"}); }, "'z'"));
    const PredictionSet bad_truth = predictions_of({{"1", "q", "a"}});
    CHECK(testing::throws_with_substring<DataError>(
        [&] { confusion_and_metrics(bad_truth, {"a", "b"}); }, "'q'"));
}

TEST_CASE("McNemar with balanced discordance: chi = 1/(n01+n10) scale check") {
    PredictionSet a, b;
    concordance_pair(30, 5, 5, 10, a, b);
    const McNemarResult r = mcnemar(a, b);
    CHECK(r.table.n11 == 30);
    CHECK(r.table.n10 == 5);
    CHECK(r.table.n01 == 5);
    CHECK(r.table.n00 == 10);
    // (|5-5| - 1)^2 / 10 = 0.1
    CHECK(r.chi == doctest::Approx(0.1));
    CHECK(r.p == doctest::Approx(chi_square1_upper_tail(0.1)));
    CHECK_FALSE(r.no_discordance);
}

TEST_CASE("McNemar continuity-corrected statistic and borderline p-value") {
    PredictionSet a, b;
    concordance_pair(40, 10, 2, 8, a, b);
    const McNemarResult r = mcnemar(a, b);
    // (|2-10| - 1)^2 / 12 = 49/12
    CHECK(r.chi == doctest::Approx(49.0 / 12.0));
    CHECK(r.p > 0.0430);
    CHECK(r.p < 0.0436);
}

TEST_CASE("McNemar with no discordant pairs flags the degenerate statistic") {
    PredictionSet a, b;
    concordance_pair(12, 0, 0, 3, a, b);
    const McNemarResult r = mcnemar(a, b);
    CHECK(r.no_discordance);
    CHECK(r.chi == 0.0);
    CHECK(r.p == doctest::Approx(1.0));
}

TEST_CASE("McNemar insists on aligned prediction sets") {
    PredictionSet a = predictions_of({{"1", "t", "t"}, {"2", "t", "x"}});
    PredictionSet mismatched = predictions_of({{"1", "t", "t"}, {"9", "t", "t"}});
    CHECK(testing::throws_with_substring<DataError>([&] { mcnemar(a, mismatched); }, "'9'"));

    PredictionSet shorter = predictions_of({{"1", "t", "t"}});
    CHECK_THROWS_AS(mcnemar(a, shorter), DataError);

    PredictionSet conflicting = predictions_of({{"1", "u", "t"}, {"2", "t", "x"}});
    CHECK(testing::throws_with_substring<DataError>(
        [&] { mcnemar(a, conflicting); }, "conflicting"));

    PredictionSet duplicated;
    duplicated.entries = {{"1", "t", "t"}, {"1", "t", "t"}};
    CHECK(testing::throws_with_substring<DataError>(
        [&] { mcnemar(duplicated, a); }, "duplicate"));
}

TEST_CASE("prediction CSV round-trips and validates on import") {
    namespace fs = std::filesystem;
    const fs::path dir =
        fs::temp_directory_path() / ("nlistack_eval_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const PredictionSet set = predictions_of({
        {"doc_a", "lang_x", "lang_y"},
        {"doc_b", "lang_y", "lang_y"},
    });
    const std::string path = (dir / "predictions.csv").string();
    export_predictions(set, path);
    {
        std::ifstream in(path);
        std::stringstream content;
        content << in.rdbuf();
        CHECK(content.str() ==
              "doc_id,true_label,predicted_label\n"
              "doc_a,lang_x,lang_y\n"
              "doc_b,lang_y,lang_y\n");
    }
    const PredictionSet loaded = import_predictions(path);
    REQUIRE(loaded.entries.size() == 2);
    CHECK(loaded.entries[0].doc_id == "doc_a");
    CHECK(loaded.entries[0].truth == "lang_x");
    CHECK(loaded.entries[0].predicted == "lang_y");
    CHECK(loaded.entries[1].doc_id == "doc_b");

    SUBCASE("header mismatch is rejected") {
        const std::string bad = (dir / "bad_header.csv").string();
        std::ofstream(bad) << "id,gold,guess\nd,a,b\n";
        CHECK(testing::throws_with_substring<DataError>(
            [&] { import_predictions(bad); }, "header"));
    }
    SUBCASE("field-count errors carry file and line") {
        const std::string bad = (dir / "bad_row.csv").string();
        std::ofstream(bad) << "doc_id,true_label,predicted_label\nd,a,b\nd2,a\n";
        CHECK(testing::throws_with_substring<DataError>(
            [&] { import_predictions(bad); }, "bad_row.csv:3"));
    }
    SUBCASE("duplicate ids are rejected") {
        const std::string bad = (dir / "dup.csv").string();
        std::ofstream(bad) << "doc_id,true_label,predicted_label\nd,a,b\nd,a,b\n";
        CHECK(testing::throws_with_substring<DataError>(
            [&] { import_predictions(bad); }, "duplicate"));
    }
    SUBCASE("missing files are named") {
        CHECK(testing::throws_with_substring<DataError>(
            [&] { import_predictions((dir / "absent.csv").string()); }, "absent.csv"));
    }
    fs::remove_all(dir);
}

TEST_CASE("report text lists accuracy, the confusion matrix and per-class rows") {
    const PredictionSet set = predictions_of({
        {"1", "a", "a"},
        {"2", "b", "a"},
        {"3", "b", "b"},
    });
    const EvaluationReport report = confusion_and_metrics(set, {"a", "b"});
    std::ostringstream out;
    write_report_text(report, out);
    const std::string text = out.str();
    CHECK(text.find("accuracy") != std::string::npos);
    CHECK(text.find("macro") != std::string::npos);
    CHECK(text.find("a") != std::string::npos);
    CHECK(text.find("b") != std::string::npos);
}
