#include "nlistack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <unordered_map>

#include "nlistack/error.hpp"
#include "nlistack/numeric.hpp"

namespace nlistack {

EvaluationReport confusion_and_metrics(const PredictionSet& predictions,
                                       const std::vector<std::string>& labels) {
    const int K = static_cast<int>(labels.size());
    std::unordered_map<std::string, int> index;
    for (int k = 0; k < K; ++k) index.emplace(labels[k], k);

    EvaluationReport report;
    report.labels = labels;
    report.n = predictions.entries.size();
    report.confusion.assign(K, std::vector<long long>(K, 0));

    long long correct = 0;
    for (const auto& entry : predictions.entries) {
        const auto t = index.find(entry.truth);
        if (t == index.end()) throw DataError("unknown true label '" + entry.truth + "'");
        const auto p = index.find(entry.predicted);
        if (p == index.end()) throw DataError("unknown predicted label '" + entry.predicted + "'");
        ++report.confusion[t->second][p->second];
        if (t->second == p->second) ++correct;
    }
    report.accuracy = report.n == 0 ? 0.0 : static_cast<double>(correct) / report.n;

    for (int k = 0; k < K; ++k) {
        long long col_sum = 0, row_sum = 0;
        for (int j = 0; j < K; ++j) {
            col_sum += report.confusion[j][k];
            row_sum += report.confusion[k][j];
        }
        const long long diag = report.confusion[k][k];
        PerClassMetrics m;
        if (col_sum == 0) m.degenerate_precision = true;
        else m.precision = static_cast<double>(diag) / col_sum;
        if (row_sum == 0) m.degenerate_recall = true;
        else m.recall = static_cast<double>(diag) / row_sum;
        if (m.precision + m.recall <= 0.0) m.degenerate_f1 = true;
        else m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        report.per_class.emplace(labels[k], m);

        report.macro_precision += m.precision;
        report.macro_recall += m.recall;
        report.macro_f1 += m.f1;
    }
    if (K > 0) {
        report.macro_precision /= K;
        report.macro_recall /= K;
        report.macro_f1 /= K;
    }
    return report;
}

double macro_f1_excluding(const EvaluationReport& report,
                          const std::vector<std::string>& excluded) {
    double sum = 0.0;
    int kept = 0;
    for (const auto& [label, metrics] : report.per_class) {
        if (std::find(excluded.begin(), excluded.end(), label) != excluded.end()) continue;
        sum += metrics.f1;
        ++kept;
    }
    if (kept == 0) throw ConfigError("macro-F1 exclusion removed every class");
    return sum / kept;
}

McNemarResult mcnemar(const PredictionSet& a, const PredictionSet& b) {
    if (a.entries.size() != b.entries.size())
        throw DataError("McNemar: prediction sets cover different numbers of instances");

    struct Outcome {
        bool correct;
        const std::string* truth;
    };
    std::unordered_map<std::string, Outcome> from_a;
    from_a.reserve(a.entries.size());
    for (const auto& entry : a.entries) {
        const auto [it, inserted] = from_a.emplace(
            entry.doc_id, Outcome{entry.predicted == entry.truth, &entry.truth});
        if (!inserted) throw DataError("McNemar: duplicate doc_id '" + entry.doc_id + "'");
    }

    McNemarResult result;
    for (const auto& entry : b.entries) {
        const auto it = from_a.find(entry.doc_id);
        if (it == from_a.end())
            throw DataError("McNemar: doc_id '" + entry.doc_id + "' is missing from the other set");
        if (*it->second.truth != entry.truth)
            throw DataError("McNemar: doc_id '" + entry.doc_id + "' has conflicting true labels ('" +
                            *it->second.truth + "' vs '" + entry.truth + "')");
        const bool a_ok = it->second.correct;
        const bool b_ok = entry.predicted == entry.truth;
        if (a_ok && b_ok) ++result.table.n11;
        else if (a_ok) ++result.table.n10;
        else if (b_ok) ++result.table.n01;
        else ++result.table.n00;
    }

    const long long discordant = result.table.n01 + result.table.n10;
    if (discordant == 0) {
        result.chi = 0.0;
        result.p = 1.0;
        result.no_discordance = true;
        return result;
    }
    const double diff = std::abs(static_cast<double>(result.table.n01 - result.table.n10)) - 1.0;
    result.chi = diff * diff / static_cast<double>(discordant);
    result.p = chi_square1_upper_tail(result.chi);
    return result;
}

void export_predictions(const PredictionSet& predictions, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary: LF endings on every platform
    if (!out) throw DataError("cannot write prediction file: " + path);
    out << "doc_id,true_label,predicted_label\n";
    for (const auto& entry : predictions.entries)
        out << entry.doc_id << ',' << entry.truth << ',' << entry.predicted << '\n';
    if (!out) throw DataError("write failed for prediction file: " + path);
}

PredictionSet import_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open prediction file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("prediction file is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "doc_id,true_label,predicted_label")
        throw DataError("prediction file has an unexpected header: " + path);

    PredictionSet predictions;
    std::unordered_map<std::string, bool> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos)
            throw DataError("malformed prediction row at " + path + ":" + std::to_string(lineno));
        PredictionEntry entry;
        entry.doc_id = line.substr(0, c1);
        entry.truth = line.substr(c1 + 1, c2 - c1 - 1);
        entry.predicted = line.substr(c2 + 1);
        if (!seen.emplace(entry.doc_id, true).second)
            throw DataError("duplicate doc_id '" + entry.doc_id + "' in " + path);
        predictions.entries.push_back(std::move(entry));
    }
    return predictions;
}

void write_report_text(const EvaluationReport& report, std::ostream& out) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", report.accuracy);
    out << "instances: " << report.n << '\n';
    out << "accuracy: " << buf << '\n';
    out << '\n' << "confusion matrix (rows = truth, columns = predicted):\n";
    out << "      ";
    for (const auto& label : report.labels) {
        std::snprintf(buf, sizeof buf, "%8s", label.c_str());
        out << buf;
    }
    out << '\n';
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%6s", report.labels[i].c_str());
        out << buf;
        for (std::size_t j = 0; j < report.labels.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%8lld", report.confusion[i][j]);
            out << buf;
        }
        out << '\n';
    }
    out << '\n' << "per-class metrics:\n";
    out << "class       precision     recall         f1\n";
    for (const auto& label : report.labels) {
        const auto& m = report.per_class.at(label);
        std::snprintf(buf, sizeof buf, "%-10s", label.c_str());
        out << buf;
        std::snprintf(buf, sizeof buf, "  %9.4f%s", m.precision,
                      m.degenerate_precision ? "*" : " ");
        out << buf;
        std::snprintf(buf, sizeof buf, " %9.4f%s", m.recall, m.degenerate_recall ? "*" : " ");
        out << buf;
        std::snprintf(buf, sizeof buf, " %9.4f%s", m.f1, m.degenerate_f1 ? "*" : " ");
        out << buf << '\n';
    }
    std::snprintf(buf, sizeof buf, "%-10s  %9.4f  %9.4f  %9.4f\n", "macro", report.macro_precision,
                  report.macro_recall, report.macro_f1);
    out << buf;
    out << "(* = degenerate: zero denominator reported as 0)\n";
}

} // namespace nlistack
