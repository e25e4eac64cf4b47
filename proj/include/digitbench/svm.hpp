#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <list>
#include <optional>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/matrix.hpp"
#include "digitbench/parallel.hpp"
#include "digitbench/prediction.hpp"

namespace digitbench {

struct SvmParams {
    double C = 10.0;
    std::optional<double> gamma;  // empty: auto scale, 1 / (d * Var(X))
    double tol = 1e-3;
    std::size_t max_passes = 1000;  // iteration cap = max_passes * n
    std::size_t cache_mb = 512;

    friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

/// 1 / (d * Var(X)) with the variance taken over every matrix entry.
inline double auto_scale_gamma(const Matrix& x) {
    const auto all = x.data();
    if (all.empty()) throw StateError("svm: empty training matrix");
    double mean = 0.0;
    for (double v : all) mean += v;
    mean /= static_cast<double>(all.size());
    double var = 0.0;
    for (double v : all) var += (v - mean) * (v - mean);
    var /= static_cast<double>(all.size());
    if (var <= 0.0) return 1.0;
    return 1.0 / (static_cast<double>(x.cols()) * var);
}

inline double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

/// Lazily computed RBF Gram rows with an LRU bound on memory. Holds a
/// reference to the training matrix; the matrix must outlive the cache.
/// A returned row stays valid until two further distinct rows are fetched.
class RbfKernelRows {
public:
    RbfKernelRows(const Matrix& x, double gamma, std::size_t budget_bytes)
        : x_(x), gamma_(gamma), rows_(x.rows()), where_(x.rows(), lru_.end()) {
        const std::size_t row_bytes = std::max<std::size_t>(1, x.rows() * sizeof(double));
        capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
    }

    std::size_t size() const noexcept { return x_.rows(); }
    double diag(std::size_t) const noexcept { return 1.0; }

    std::span<const double> row(std::size_t i) {
        if (!rows_[i].empty()) {
            lru_.splice(lru_.begin(), lru_, where_[i]);
            return rows_[i];
        }
        if (lru_.size() >= capacity_) {
            const std::size_t victim = lru_.back();
            lru_.pop_back();
            rows_[victim].clear();
            rows_[victim].shrink_to_fit();
            where_[victim] = lru_.end();
        }
        auto& r = rows_[i];
        r.resize(x_.rows());
        const auto xi = x_.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] = rbf(xi, x_.row(j), gamma_);
        lru_.push_front(i);
        where_[i] = lru_.begin();
        return r;
    }

private:
    const Matrix& x_;
    double gamma_;
    std::size_t capacity_ = 2;
    std::vector<std::vector<double>> rows_;
    std::list<std::size_t> lru_;
    std::vector<std::list<std::size_t>::iterator> where_;
};

/// Precomputed Gram matrix exposing the same row interface as RbfKernelRows.
class GramRows {
public:
    explicit GramRows(Matrix gram) : gram_(std::move(gram)) {
        if (gram_.rows() != gram_.cols()) throw ShapeError("GramRows: matrix must be square");
    }
    std::size_t size() const noexcept { return gram_.rows(); }
    double diag(std::size_t i) const noexcept { return gram_(i, i); }
    std::span<const double> row(std::size_t i) const noexcept { return gram_.row(i); }

private:
    Matrix gram_;
};

struct BinarySolution {
    std::vector<double> alpha;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// SMO on the soft-margin dual
///   max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij,  0 <= a <= C,  sum a_i y_i = 0.
/// Each step updates the maximal KKT-violating pair; the loop stops once
/// max_{I_up} -y G - min_{I_low} -y G < tol, which bounds every KKT residual
/// of the returned (alpha, bias) by tol.
template <typename Kernel>
BinarySolution smo_solve(Kernel& kernel, std::span<const double> y, double C, double tol, std::size_t max_iter) {
    const std::size_t n = kernel.size();
    if (y.size() != n) throw ShapeError("smo: label length does not match kernel size");
    if (!(C > 0.0)) throw ParameterError("svm: C must be > 0");
    if (!(tol > 0.0)) throw ParameterError("svm: tol must be > 0");
    constexpr double tau = 1e-12;

    BinarySolution sol;
    auto& a = sol.alpha;
    a.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of the minimization form

    auto in_up = [&](std::size_t t) { return (y[t] > 0 && a[t] < C) || (y[t] < 0 && a[t] > 0); };
    auto in_low = [&](std::size_t t) { return (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < C); };

    for (; sol.iterations < max_iter; ++sol.iterations) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > gmax) { gmax = v; i = t; }
            if (in_low(t) && v < gmin) { gmin = v; j = t; }
        }
        if (i == n || j == n || gmax - gmin < tol) {
            sol.converged = true;
            break;
        }

        const std::span<const double> ki = kernel.row(i);
        const std::span<const double> kj = kernel.row(j);
        const double old_ai = a[i], old_aj = a[j];
        const double kii = kernel.diag(i), kjj = kernel.diag(j), kij = ki[j];

        if (y[i] != y[j]) {
            double quad = kii + kjj - 2.0 * kij;
            if (quad <= 0) quad = tau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0) {
                if (a[j] < 0) { a[j] = 0; a[i] = diff; }
            } else {
                if (a[i] < 0) { a[i] = 0; a[j] = -diff; }
            }
            if (diff > 0) {
                if (a[i] > C) { a[i] = C; a[j] = C - diff; }
            } else {
                if (a[j] > C) { a[j] = C; a[i] = C + diff; }
            }
        } else {
            double quad = kii + kjj - 2.0 * kij;
            if (quad <= 0) quad = tau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > C) {
                if (a[i] > C) { a[i] = C; a[j] = sum - C; }
            } else {
                if (a[j] < 0) { a[j] = 0; a[i] = sum; }
            }
            if (sum > C) {
                if (a[j] > C) { a[j] = C; a[i] = sum - C; }
            } else {
                if (a[i] < 0) { a[i] = 0; a[j] = sum; }
            }
        }

        const double dai = (a[i] - old_ai) * y[i];
        const double daj = (a[j] - old_aj) * y[j];
        for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (ki[t] * dai + kj[t] * daj);
    }

    // Bias: mean over free vectors, else midpoint of the feasible interval.
    double sum_free = 0.0;
    std::size_t n_free = 0;
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        const bool at_upper = a[t] >= C, at_lower = a[t] <= 0;
        if (!at_upper && !at_lower) {
            sum_free += yg;
            ++n_free;
        } else if ((at_upper && y[t] < 0) || (at_lower && y[t] > 0)) {
            ub = std::min(ub, yg);
        } else {
            lb = std::max(lb, yg);
        }
    }
    double rho = 0.0;
    if (n_free > 0) rho = sum_free / static_cast<double>(n_free);
    else if (std::isfinite(ub) && std::isfinite(lb)) rho = (ub + lb) / 2.0;
    else if (std::isfinite(ub)) rho = ub;
    else if (std::isfinite(lb)) rho = lb;
    sol.bias = -rho;
    return sol;
}

/// One binary machine of the one-vs-all ensemble. `support` indexes the
/// model's shared support-vector pool.
struct BinarySvm {
    std::vector<std::size_t> support;
    std::vector<double> alpha;
    std::vector<double> y;
    double bias = 0.0;
    bool converged = true;
};

struct SvmModel {
    SvmParams params;
    double gamma = 0.0;
    std::size_t n_classes = 0;
    Matrix support_vectors;
    std::vector<BinarySvm> machines;  // one per class, class c = +1
};

inline constexpr double kSupportThreshold = 1e-8;

inline SvmModel svm_fit(const Matrix& x, std::span<const Label> labels, const SvmParams& p, std::size_t n_classes = 0) {
    if (x.empty()) throw StateError("svm: empty training set");
    if (x.rows() != labels.size()) throw ShapeError("svm: feature rows and labels differ in length");
    if (!(p.C > 0.0)) throw ParameterError("svm: C must be > 0");
    if (p.gamma && !(*p.gamma > 0.0)) throw ParameterError("svm: gamma must be > 0");
    if (n_classes == 0) n_classes = infer_n_classes(labels);
    check_labels(labels, n_classes);
    std::vector<bool> present(n_classes, false);
    for (Label l : labels) present[static_cast<std::size_t>(l)] = true;
    if (std::count(present.begin(), present.end(), true) < 2)
        throw StateError("svm: training data must contain at least two classes");

    SvmModel m;
    m.params = p;
    m.n_classes = n_classes;
    m.gamma = p.gamma ? *p.gamma : auto_scale_gamma(x);

    const std::size_t n = x.rows();
    RbfKernelRows kernel(x, m.gamma, p.cache_mb * 1024 * 1024);
    const std::size_t max_iter = std::max<std::size_t>(1, p.max_passes) * std::max<std::size_t>(n, 100);

    std::vector<BinarySolution> sols(n_classes);
    std::vector<double> y(n);
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t t = 0; t < n; ++t) y[t] = labels[t] == static_cast<Label>(c) ? 1.0 : -1.0;
        sols[c] = smo_solve(kernel, y, p.C, p.tol, max_iter);
    }

    std::vector<std::size_t> pool_index(n, n);
    std::vector<std::size_t> pool;
    for (std::size_t t = 0; t < n; ++t)
        for (const auto& s : sols)
            if (s.alpha[t] > kSupportThreshold) {
                pool_index[t] = pool.size();
                pool.push_back(t);
                break;
            }
    m.support_vectors = x.select_rows(pool);

    m.machines.resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto& mc = m.machines[c];
        mc.bias = sols[c].bias;
        mc.converged = sols[c].converged;
        for (std::size_t t = 0; t < n; ++t)
            if (sols[c].alpha[t] > kSupportThreshold) {
                mc.support.push_back(pool_index[t]);
                mc.alpha.push_back(sols[c].alpha[t]);
                mc.y.push_back(labels[t] == static_cast<Label>(c) ? 1.0 : -1.0);
            }
    }
    return m;
}

/// f_c(x) = sum_i alpha_i y_i K(s_i, x) + b_c for every class c.
inline std::vector<double> svm_decision_values(const SvmModel& m, std::span<const double> q) {
    if (q.size() != m.support_vectors.cols() && !m.support_vectors.empty())
        throw ShapeError("svm: query dimension mismatch");
    std::vector<double> k(m.support_vectors.rows());
    for (std::size_t s = 0; s < k.size(); ++s) k[s] = rbf(m.support_vectors.row(s), q, m.gamma);
    std::vector<double> f(m.n_classes);
    for (std::size_t c = 0; c < m.n_classes; ++c) {
        const auto& mc = m.machines[c];
        double acc = mc.bias;
        for (std::size_t i = 0; i < mc.support.size(); ++i) acc += mc.alpha[i] * mc.y[i] * k[mc.support[i]];
        f[c] = acc;
    }
    return f;
}

inline std::vector<Prediction> svm_predict(const SvmModel& m, const Matrix& queries, std::size_t jobs = 1) {
    std::vector<Prediction> out(queries.rows());
    parallel_for(queries.rows(), jobs,
                 [&](std::size_t i) { out[i] = make_prediction(svm_decision_values(m, queries.row(i))); });
    return out;
}

}  // namespace digitbench
