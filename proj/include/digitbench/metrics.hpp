#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/prediction.hpp"

namespace digitbench {

/// counts(t, p): samples of true class t predicted as p.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_classes = 0) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

    std::size_t n_classes() const noexcept { return n_; }
    std::uint64_t operator()(std::size_t t, std::size_t p) const noexcept { return counts_[t * n_ + p]; }
    std::uint64_t& operator()(std::size_t t, std::size_t p) noexcept { return counts_[t * n_ + p]; }

    std::uint64_t total() const noexcept {
        std::uint64_t s = 0;
        for (auto c : counts_) s += c;
        return s;
    }
    std::uint64_t trace() const noexcept {
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
        return s;
    }

    static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
        ConfusionMatrix cm(rows.size());
        for (std::size_t t = 0; t < rows.size(); ++t) {
            if (rows[t].size() != rows.size()) throw InputError("confusion matrix must be square");
            for (std::size_t p = 0; p < rows.size(); ++p) cm(t, p) = rows[t][p];
        }
        return cm;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t n_;
    std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred, std::size_t n_classes) {
    if (y_true.size() != y_pred.size()) throw InputError("confusion: label lists differ in length");
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const Label t = y_true[i], p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes || static_cast<std::size_t>(p) >= n_classes)
            throw InputError("confusion: label out of range at position " + std::to_string(i));
        ++cm(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

/// Where a report came from; carried through to every rendered table.
struct ReportMetadata {
    std::string dataset;
    std::string feature;
    std::string classifier;
    std::uint64_t split_seed = 0;
};

struct EvaluationReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    std::vector<double> precision, recall, f1;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    ReportMetadata metadata;
};

/// Zero denominators yield 0 for precision, recall and F1.
inline EvaluationReport report(const ConfusionMatrix& cm, ReportMetadata meta = {}) {
    const std::uint64_t total = cm.total();
    if (cm.n_classes() == 0 || total == 0) throw InputError("report: empty confusion matrix");
    const std::size_t n = cm.n_classes();
    EvaluationReport r;
    r.confusion = cm;
    r.metadata = std::move(meta);
    r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    r.precision.assign(n, 0.0);
    r.recall.assign(n, 0.0);
    r.f1.assign(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        std::uint64_t predicted = 0, actual = 0;
        for (std::size_t k = 0; k < n; ++k) {
            predicted += cm(k, c);
            actual += cm(c, k);
        }
        const auto tp = static_cast<double>(cm(c, c));
        if (predicted > 0) r.precision[c] = tp / static_cast<double>(predicted);
        if (actual > 0) r.recall[c] = tp / static_cast<double>(actual);
        const double s = r.precision[c] + r.recall[c];
        if (s > 0) r.f1[c] = 2.0 * r.precision[c] * r.recall[c] / s;
    }
    auto mean = [n](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(n);
    };
    r.macro_precision = mean(r.precision);
    r.macro_recall = mean(r.recall);
    r.macro_f1 = mean(r.f1);
    return r;
}

}  // namespace digitbench
