#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/matrix.hpp"
#include "digitbench/prediction.hpp"

namespace digitbench {

/// Split point between two consecutive distinct sorted values. Falls back to
/// the lower value when the midpoint rounds up to the upper one, so that
/// `x <= threshold` always separates them.
inline double split_midpoint(double lo, double hi) {
    const double mid = (lo + hi) * 0.5;
    return mid < hi ? mid : lo;
}

/// Deterministic RNG stream for a (seed, a, b) triple.
inline std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

/// First m entries of a seeded Fisher-Yates shuffle of 0..n-1, sorted.
template <typename Rng>
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    m = std::min(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// ---------------------------------------------------------------------------
// Classification tree (Gini)

struct ClassNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> counts;  // training class counts reaching the node
};

struct ClassificationTree {
    std::vector<ClassNode> nodes;  // nodes[0] is the root

    const ClassNode& leaf_for(std::span<const double> x) const {
        const ClassNode* n = &nodes.front();
        while (n->feature >= 0)
            n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
        return *n;
    }

    Label predict(std::span<const double> x) const { return argmax_lowest(leaf_for(x).counts); }

    std::size_t depth() const { return depth_from(0); }

private:
    std::size_t depth_from(std::size_t i) const {
        const auto& n = nodes[i];
        if (n.feature < 0) return 0;
        return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
    }
};

struct ClassTreeParams {
    std::size_t max_depth = 10;
    std::size_t features_per_split = 0;  // 0: every feature
    std::size_t min_samples_split = 2;
};

/// n * weighted Gini of one side: n - sum(c^2) / n.
inline double gini_mass(std::span<const double> counts, double n) {
    if (n <= 0) return 0.0;
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    return n - sq / n;
}

namespace detail {

template <typename Rng>
class ClassTreeGrower {
public:
    ClassTreeGrower(const Matrix& x, std::span<const Label> y, std::size_t n_classes, const ClassTreeParams& p, Rng& rng)
        : x_(x), y_(y), k_(n_classes), p_(p), rng_(rng) {}

    ClassificationTree grow(std::vector<std::size_t> rows) {
        ClassificationTree t;
        build(t, std::move(rows), 0);
        return t;
    }

private:
    int build(ClassificationTree& t, std::vector<std::size_t> rows, std::size_t depth) {
        const auto id = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        std::vector<double> counts(k_, 0.0);
        for (std::size_t r : rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
        const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
        t.nodes[static_cast<std::size_t>(id)].counts = counts;
        if (pure || depth >= p_.max_depth || rows.size() < p_.min_samples_split) return id;

        const std::size_t d = x_.cols();
        std::vector<std::size_t> features;
        if (p_.features_per_split == 0 || p_.features_per_split >= d) {
            features.resize(d);
            std::iota(features.begin(), features.end(), std::size_t{0});
        } else {
            features = sample_without_replacement(d, p_.features_per_split, rng_);
        }

        // Minimizing weighted Gini is maximizing (n_r S_l + n_l S_r) / (n_l n_r)
        // with S = sum of squared class counts. Counts are integers, so the
        // comparison is done exactly and equal scores really tie.
        using Wide = unsigned __int128;
        int best_feature = -1;
        double best_threshold = 0.0;
        Wide best_num = 0, best_den = 1;
        std::vector<std::pair<double, Label>> vals(rows.size());
        std::vector<std::uint64_t> left(k_), right(k_);
        std::uint64_t total_sq = 0;
        for (double c : counts) total_sq += static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(c);
        const std::uint64_t n = rows.size();

        for (std::size_t f : features) {
            for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = {x_(rows[i], f), y_[rows[i]]};
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) continue;
            std::fill(left.begin(), left.end(), 0);
            for (std::size_t c = 0; c < k_; ++c) right[c] = static_cast<std::uint64_t>(counts[c]);
            std::uint64_t sl = 0, sr = total_sq;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                const auto c = static_cast<std::size_t>(vals[i].second);
                sl += 2 * left[c] + 1;
                sr -= 2 * right[c] - 1;
                ++left[c];
                --right[c];
                if (!(vals[i].first < vals[i + 1].first)) continue;
                const std::uint64_t nl = i + 1, nr = n - nl;
                const Wide num = Wide{nr} * sl + Wide{nl} * sr, den = Wide{nl} * nr;
                if (best_feature < 0 || num * best_den > best_num * den) {
                    best_num = num;
                    best_den = den;
                    best_feature = static_cast<int>(f);
                    best_threshold = split_midpoint(vals[i].first, vals[i + 1].first);
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> lrows, rrows;
        for (std::size_t r : rows)
            (x_(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? lrows : rrows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(t, std::move(lrows), depth + 1);
        const int r = build(t, std::move(rrows), depth + 1);
        auto& node = t.nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    const Matrix& x_;
    std::span<const Label> y_;
    std::size_t k_;
    ClassTreeParams p_;
    Rng& rng_;
};

}  // namespace detail

/// Grows a CART tree over `rows` (duplicates allowed, e.g. a bootstrap).
/// Each split minimizes weighted Gini over midpoints of consecutive distinct
/// values; ties keep the lowest feature index, then the lowest threshold.
/// Growth stops at max_depth, on pure nodes, below min_samples_split, or when
/// no candidate feature varies.
template <typename Rng>
ClassificationTree grow_classification_tree(const Matrix& x, std::span<const Label> y, std::size_t n_classes,
                                            std::vector<std::size_t> rows, const ClassTreeParams& p, Rng& rng) {
    if (rows.empty()) throw StateError("tree: no training rows");
    detail::ClassTreeGrower<Rng> g(x, y, n_classes, p, rng);
    return g.grow(std::move(rows));
}

// ---------------------------------------------------------------------------
// Gradient (second-order) regression tree

struct RegNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output, already scaled by the learning rate
};

struct RegressionTree {
    std::vector<RegNode> nodes;

    double predict(std::span<const double> x) const {
        const RegNode* n = &nodes.front();
        while (n->feature >= 0)
            n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
        return n->value;
    }

    std::size_t depth() const { return depth_from(0); }

private:
    std::size_t depth_from(std::size_t i) const {
        const auto& n = nodes[i];
        if (n.feature < 0) return 0;
        return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
    }
};

/// Column-wise argsort of a matrix (ties by row index), reused by every
/// gradient tree of one fit.
/// Column-wise presort: for each feature, row indices in ascending value
/// order (stable) with the values stored alongside for sequential scans.
struct SortedColumns {
    std::vector<std::vector<std::uint32_t>> index;
    std::vector<std::vector<double>> value;
};

inline SortedColumns presort_columns(const Matrix& x) {
    SortedColumns out;
    out.index.resize(x.cols());
    out.value.resize(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        auto& o = out.index[f];
        o.resize(x.rows());
        std::iota(o.begin(), o.end(), 0u);
        std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
        auto& v = out.value[f];
        v.resize(x.rows());
        for (std::size_t i = 0; i < o.size(); ++i) v[i] = x(o[i], f);
    }
    return out;
}

struct GradTreeParams {
    std::size_t max_depth = 5;
    double lambda = 1.0;
    double learning_rate = 0.3;
    double min_gain = 1e-12;
};

/// G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l).
inline double split_gain(double gl, double hl, double gr, double hr, double lambda) {
    return gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - (gl + gr) * (gl + gr) / (hl + hr + lambda);
}

/// Exact greedy, level-wise growth over the sampled rows and columns. A node
/// splits only when its best gain exceeds min_gain; ties keep the lowest
/// column, then the lowest threshold. Leaves output -lr * G / (H + lambda).
inline RegressionTree grow_gradient_tree(const Matrix& x, const SortedColumns& sorted,
                                         std::span<const double> grad, std::span<const double> hess,
                                         std::span<const std::size_t> rows, std::span<const std::size_t> cols,
                                         const GradTreeParams& p) {
    if (rows.empty()) throw StateError("gradient tree: no rows");
    struct Stat {
        double g = 0, h = 0;
    };
    RegressionTree tree;
    std::vector<int> node_of(x.rows(), -1);
    std::vector<Stat> stats(1);
    for (std::size_t r : rows) {
        node_of[r] = 0;
        stats[0].g += grad[r];
        stats[0].h += hess[r];
    }
    tree.nodes.emplace_back();

    std::vector<int> frontier{0};
    for (std::size_t depth = 0; depth < p.max_depth && !frontier.empty(); ++depth) {
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < frontier.size(); ++s) slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
        std::vector<int> row_slot(x.rows(), -1);
        for (std::size_t r : rows) row_slot[r] = slot[static_cast<std::size_t>(node_of[r])];

        const std::size_t nf = frontier.size();
        std::vector<double> best_gain(nf, p.min_gain), best_thr(nf, 0.0);
        std::vector<int> best_feat(nf, -1);
        std::vector<Stat> acc(nf), tot(nf);
        for (std::size_t s = 0; s < nf; ++s) tot[s] = stats[static_cast<std::size_t>(frontier[s])];
        std::vector<double> last(nf);
        std::vector<char> has_last(nf);

        for (std::size_t f : cols) {
            std::fill(acc.begin(), acc.end(), Stat{});
            std::fill(has_last.begin(), has_last.end(), 0);
            const auto& idx = sorted.index[f];
            const auto& val = sorted.value[f];
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const std::uint32_t r = idx[i];
                const int s = row_slot[r];
                if (s < 0) continue;
                const auto si = static_cast<std::size_t>(s);
                const double v = val[i];
                if (has_last[si] && v > last[si]) {
                    const double gain =
                        split_gain(acc[si].g, acc[si].h, tot[si].g - acc[si].g, tot[si].h - acc[si].h, p.lambda);
                    if (gain > best_gain[si]) {
                        best_gain[si] = gain;
                        best_feat[si] = static_cast<int>(f);
                        best_thr[si] = split_midpoint(last[si], v);
                    }
                }
                acc[si].g += grad[r];
                acc[si].h += hess[r];
                last[si] = v;
                has_last[si] = 1;
            }
        }

        std::vector<int> next;
        std::vector<int> left_of(tree.nodes.size(), -1), right_of(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < nf; ++s) {
            if (best_feat[s] < 0) continue;
            const auto q = static_cast<std::size_t>(frontier[s]);
            const int l = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stats.resize(tree.nodes.size());
            tree.nodes[q].feature = best_feat[s];
            tree.nodes[q].threshold = best_thr[s];
            tree.nodes[q].left = l;
            tree.nodes[q].right = l + 1;
            left_of[q] = l;
            right_of[q] = l + 1;
            next.push_back(l);
            next.push_back(l + 1);
        }
        for (std::size_t r : rows) {
            const auto q = static_cast<std::size_t>(node_of[r]);
            if (q >= left_of.size() || left_of[q] < 0) continue;
            const auto& nd = tree.nodes[q];
            const int child = x(r, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
            node_of[r] = child;
            stats[static_cast<std::size_t>(child)].g += grad[r];
            stats[static_cast<std::size_t>(child)].h += hess[r];
        }
        frontier = std::move(next);
    }

    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].feature < 0) tree.nodes[i].value = -p.learning_rate * stats[i].g / (stats[i].h + p.lambda);
    return tree;
}

}  // namespace digitbench
