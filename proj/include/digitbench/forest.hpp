#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/matrix.hpp"
#include "digitbench/parallel.hpp"
#include "digitbench/prediction.hpp"
#include "digitbench/trees.hpp"

namespace digitbench {

struct ForestParams {
    std::size_t n_trees = 200;
    std::size_t max_depth = 10;
    std::size_t features_per_split = 0;  // 0: ceil(sqrt(d))
    bool bootstrap = true;
    std::uint64_t seed = 0;

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct ForestModel {
    ForestParams params;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::vector<ClassificationTree> trees;
};

inline std::size_t resolve_features_per_split(const ForestParams& p, std::size_t d) {
    if (p.features_per_split == 0) return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    return std::min(p.features_per_split, d);
}

/// Bagged Gini trees. Tree t draws from its own RNG stream derived from
/// (seed, t), so the model does not depend on `jobs`.
inline ForestModel forest_fit(const Matrix& x, std::span<const Label> y, const ForestParams& p,
                              std::size_t n_classes = 0, std::size_t jobs = 1) {
    if (x.empty()) throw StateError("forest: empty training set");
    if (x.rows() != y.size()) throw ShapeError("forest: feature rows and labels differ in length");
    if (p.n_trees == 0) throw ParameterError("forest: n_trees must be >= 1");
    if (p.max_depth == 0) throw ParameterError("forest: max_depth must be >= 1");
    if (n_classes == 0) n_classes = infer_n_classes(y);
    check_labels(y, n_classes);

    ForestModel m;
    m.params = p;
    m.n_classes = n_classes;
    m.n_features = x.cols();
    m.trees.resize(p.n_trees);
    const ClassTreeParams tp{p.max_depth, resolve_features_per_split(p, x.cols()), 2};
    const std::size_t n = x.rows();

    parallel_for(p.n_trees, jobs, [&](std::size_t t) {
        auto rng = derive_rng(p.seed, t);
        std::vector<std::size_t> rows(n);
        if (p.bootstrap) {
            std::uniform_int_distribution<std::size_t> draw(0, n - 1);
            for (auto& r : rows) r = draw(rng);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        m.trees[t] = grow_classification_tree(x, y, n_classes, std::move(rows), tp, rng);
    });
    return m;
}

/// Scores are the fraction of trees voting for each class.
inline Prediction forest_predict_one(const ForestModel& m, std::span<const double> q) {
    if (q.size() != m.n_features) throw ShapeError("forest: query dimension mismatch");
    std::vector<double> votes(m.n_classes, 0.0);
    for (const auto& t : m.trees) votes[static_cast<std::size_t>(t.predict(q))] += 1.0;
    for (double& v : votes) v /= static_cast<double>(m.trees.size());
    return make_prediction(std::move(votes));
}

inline std::vector<Prediction> forest_predict(const ForestModel& m, const Matrix& queries, std::size_t jobs = 1) {
    std::vector<Prediction> out(queries.rows());
    parallel_for(queries.rows(), jobs, [&](std::size_t i) { out[i] = forest_predict_one(m, queries.row(i)); });
    return out;
}

}  // namespace digitbench
