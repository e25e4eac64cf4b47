#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/matrix.hpp"
#include "digitbench/parallel.hpp"
#include "digitbench/prediction.hpp"
#include "digitbench/trees.hpp"

namespace digitbench {

struct GbdtParams {
    std::size_t n_rounds = 200;
    std::size_t max_depth = 5;
    double learning_rate = 0.3;
    double row_subsample = 0.8;
    double col_subsample = 0.8;
    double lambda = 1.0;
    std::uint64_t seed = 0;

    friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

struct GbdtModel {
    GbdtParams params;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::vector<double> initial_scores;          // log class priors
    std::vector<std::vector<RegressionTree>> rounds;  // rounds[r][class]
    std::vector<double> train_loss;              // mean log-loss after each round
};

inline void softmax_inplace(std::span<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        s += v;
    }
    for (double& v : z) v /= s;
}

inline std::size_t subsample_count(double fraction, std::size_t n) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))), 1, n);
}

/// Softmax gradient boosting. Each round takes g = p - 1{y=c} and
/// h = p (1 - p) from the current probabilities, then grows one tree per
/// class on a row sample (without replacement, shared by the round's
/// trees) and a per-tree column sample.
inline GbdtModel gbdt_fit(const Matrix& x, std::span<const Label> y, const GbdtParams& p,
                          std::size_t n_classes = 0, std::size_t jobs = 1) {
    if (x.empty()) throw StateError("gbdt: empty training set");
    if (x.rows() != y.size()) throw ShapeError("gbdt: feature rows and labels differ in length");
    if (p.n_rounds == 0) throw ParameterError("gbdt: n_rounds must be >= 1");
    if (p.max_depth == 0) throw ParameterError("gbdt: max_depth must be >= 1");
    if (!(p.row_subsample > 0 && p.row_subsample <= 1) || !(p.col_subsample > 0 && p.col_subsample <= 1))
        throw ParameterError("gbdt: subsample fractions must lie in (0, 1]");
    if (!(p.learning_rate > 0)) throw ParameterError("gbdt: learning_rate must be > 0");
    if (!(p.lambda >= 0)) throw ParameterError("gbdt: lambda must be >= 0");
    if (n_classes == 0) n_classes = infer_n_classes(y);
    check_labels(y, n_classes);

    const std::size_t n = x.rows(), d = x.cols(), k = n_classes;
    GbdtModel m;
    m.params = p;
    m.n_classes = k;
    m.n_features = d;
    m.initial_scores.assign(k, 0.0);
    {
        std::vector<double> freq(k, 0.0);
        for (Label l : y) freq[static_cast<std::size_t>(l)] += 1.0;
        for (std::size_t c = 0; c < k; ++c)
            m.initial_scores[c] = std::log(std::max(freq[c] / static_cast<double>(n), 1e-6));
    }

    const auto sorted = presort_columns(x);
    const GradTreeParams tp{p.max_depth, p.lambda, p.learning_rate, 1e-12};
    Matrix score(n, k);
    for (std::size_t i = 0; i < n; ++i) std::copy(m.initial_scores.begin(), m.initial_scores.end(), score.row(i).begin());
    Matrix prob(n, k);
    const std::uint64_t row_stream = ~std::uint64_t{0};

    for (std::size_t round = 0; round < p.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            auto pr = prob.row(i);
            std::copy(score.row(i).begin(), score.row(i).end(), pr.begin());
            softmax_inplace(pr);
        }
        std::vector<std::size_t> rows;
        if (p.row_subsample < 1.0) {
            auto rng = derive_rng(p.seed, round, row_stream);
            rows = sample_without_replacement(n, subsample_count(p.row_subsample, n), rng);
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }

        std::vector<RegressionTree> trees(k);
        parallel_for(k, jobs, [&](std::size_t c) {
            std::vector<double> g(n), h(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double pc = prob(i, c);
                g[i] = pc - (y[i] == static_cast<Label>(c) ? 1.0 : 0.0);
                h[i] = std::max(pc * (1.0 - pc), 1e-16);
            }
            std::vector<std::size_t> cols;
            if (p.col_subsample < 1.0) {
                auto rng = derive_rng(p.seed, round, c);
                cols = sample_without_replacement(d, subsample_count(p.col_subsample, d), rng);
            } else {
                cols.resize(d);
                std::iota(cols.begin(), cols.end(), std::size_t{0});
            }
            trees[c] = grow_gradient_tree(x, sorted, g, h, rows, cols, tp);
        });

        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto s = score.row(i);
            for (std::size_t c = 0; c < k; ++c) s[c] += trees[c].predict(x.row(i));
            std::vector<double> z(s.begin(), s.end());
            softmax_inplace(z);
            loss -= std::log(std::max(z[static_cast<std::size_t>(y[i])], 1e-300));
        }
        m.train_loss.push_back(loss / static_cast<double>(n));
        m.rounds.push_back(std::move(trees));
    }
    return m;
}

/// Scores are raw additive margins (initial log prior plus tree outputs).
inline Prediction gbdt_predict_one(const GbdtModel& m, std::span<const double> q) {
    if (q.size() != m.n_features) throw ShapeError("gbdt: query dimension mismatch");
    std::vector<double> s = m.initial_scores;
    for (const auto& round : m.rounds)
        for (std::size_t c = 0; c < m.n_classes; ++c) s[c] += round[c].predict(q);
    return make_prediction(std::move(s));
}

inline std::vector<Prediction> gbdt_predict(const GbdtModel& m, const Matrix& queries, std::size_t jobs = 1) {
    std::vector<Prediction> out(queries.rows());
    parallel_for(queries.rows(), jobs, [&](std::size_t i) { out[i] = gbdt_predict_one(m, queries.row(i)); });
    return out;
}

}  // namespace digitbench
