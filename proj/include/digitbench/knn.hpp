#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/matrix.hpp"
#include "digitbench/parallel.hpp"
#include "digitbench/prediction.hpp"

namespace digitbench {

struct KnnParams {
    std::size_t k = 5;
    double minkowski_p = 2.0;

    friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

/// A fitted KNN model is just the stored training set.
struct KnnModel {
    KnnParams params;
    std::size_t n_classes = 0;
    Matrix train;
    std::vector<Label> labels;
};

/// Minkowski distance raised to the p-th power; monotone in the true
/// distance, so neighbor order is unchanged.
inline double minkowski_pow(std::span<const double> a, std::span<const double> b, double p) {
    double s = 0.0;
    if (p == 2.0) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
    } else if (p == 1.0) {
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(std::abs(a[i] - b[i]), p);
    }
    return s;
}

inline KnnModel knn_fit(const Matrix& x, std::span<const Label> y, const KnnParams& p, std::size_t n_classes = 0) {
    if (x.empty()) throw StateError("knn: empty training set");
    if (x.rows() != y.size()) throw ShapeError("knn: feature rows and labels differ in length");
    if (p.k < 1) throw ParameterError("knn: k must be >= 1");
    if (!(p.minkowski_p >= 1.0)) throw ParameterError("knn: minkowski_p must be >= 1");
    if (p.k > x.rows()) throw ParameterError("knn: k exceeds the training set size");
    if (n_classes == 0) n_classes = infer_n_classes(y);
    check_labels(y, n_classes);
    return {p, n_classes, x, std::vector<Label>(y.begin(), y.end())};
}

/// Indices of the k nearest training rows, ordered by (distance, index).
inline std::vector<std::size_t> knn_neighbors(const KnnModel& m, std::span<const double> q) {
    if (q.size() != m.train.cols()) throw ShapeError("knn: query dimension mismatch");
    std::vector<std::pair<double, std::size_t>> d(m.train.rows());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = {minkowski_pow(m.train.row(i), q, m.params.minkowski_p), i};
    const auto k = static_cast<std::ptrdiff_t>(m.params.k);
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    std::vector<std::size_t> out(m.params.k);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i].second;
    return out;
}

/// Majority vote. Scores are vote counts plus a proximity bonus below one,
/// (k - rank of the class's nearest neighbor) / (k + 1), so a vote tie goes
/// to the class whose nearest member is closest and argmax agrees with it.
inline Prediction knn_predict_one(const KnnModel& m, std::span<const double> q) {
    const auto nn = knn_neighbors(m, q);
    std::vector<double> scores(m.n_classes, 0.0);
    std::vector<bool> seen(m.n_classes, false);
    const auto k = static_cast<double>(nn.size());
    for (std::size_t rank = 0; rank < nn.size(); ++rank) {
        const auto c = static_cast<std::size_t>(m.labels[nn[rank]]);
        scores[c] += 1.0;
        if (!seen[c]) {
            seen[c] = true;
            scores[c] += (k - static_cast<double>(rank)) / (k + 1.0);
        }
    }
    return make_prediction(std::move(scores));
}

inline std::vector<Prediction> knn_predict(const KnnModel& m, const Matrix& queries, std::size_t jobs = 1) {
    if (queries.cols() != m.train.cols() && !queries.empty()) throw ShapeError("knn: query dimension mismatch");
    std::vector<Prediction> out(queries.rows());
    parallel_for(queries.rows(), jobs, [&](std::size_t i) { out[i] = knn_predict_one(m, queries.row(i)); });
    return out;
}

}  // namespace digitbench
