#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace nlistack {

struct PredictionEntry {
    std::string doc_id;
    std::string truth;
    std::string predicted;
};

struct PredictionSet {
    std::vector<PredictionEntry> entries; // doc_ids unique
};

// Per-class precision/recall/F1.  A zero denominator yields 0 with the
// matching degenerate flag set (e.g. a class that was never predicted has
// no meaningful precision).
struct PerClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate_precision = false;
    bool degenerate_recall = false;
    bool degenerate_f1 = false;
};

struct EvaluationReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    std::vector<std::string> labels;
    std::vector<std::vector<long long>> confusion; // rows = truth, columns = predicted
    std::map<std::string, PerClassMetrics> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// Confusion matrix and per-class metrics over an explicit label order.
// Every truth/predicted label must be in labels.
EvaluationReport confusion_and_metrics(const PredictionSet& predictions,
                                       const std::vector<std::string>& labels);

// Macro-F1 recomputed from the per-class entries with some classes left
// out (reports often quote the filtered version alongside the full one).
double macro_f1_excluding(const EvaluationReport& report,
                          const std::vector<std::string>& excluded);

// 2x2 concordance table for two systems over the same instances:
// n11 both correct, n10 only A correct, n01 only B correct, n00 both wrong.
struct ContingencyTable {
    long long n11 = 0;
    long long n10 = 0;
    long long n01 = 0;
    long long n00 = 0;
};

struct McNemarResult {
    ContingencyTable table;
    double chi = 0.0;
    double p = 1.0;
    bool no_discordance = false; // n01 + n10 == 0: the statistic is undefined
};

// McNemar's test with continuity correction:
//   chi = (|n01 - n10| - 1)^2 / (n01 + n10),
// p = upper tail of chi-square with 1 degree of freedom.  Requires the two
// prediction sets to cover identical doc_ids with identical truths.
McNemarResult mcnemar(const PredictionSet& a, const PredictionSet& b);

// CSV with header "doc_id,true_label,predicted_label", LF line endings.
void export_predictions(const PredictionSet& predictions, const std::string& path);
PredictionSet import_predictions(const std::string& path);

// Human-readable report (accuracy, confusion matrix, per-class table).
void write_report_text(const EvaluationReport& report, std::ostream& out);

} // namespace nlistack
