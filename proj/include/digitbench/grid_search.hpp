#pragma once

#include <vector>

#include "digitbench/classifier.hpp"
#include "digitbench/error.hpp"
#include "digitbench/matrix.hpp"

namespace digitbench {

struct GridSearchResult {
    std::size_t best_index = 0;
    TrainConfig best;
    std::vector<std::pair<TrainConfig, double>> table;  // (config, validation accuracy), grid order
};

/// Exhaustive search by validation accuracy; the first config in grid order
/// wins ties. Train and validation rows must be disjoint.
inline GridSearchResult grid_search(const Matrix& train_x, std::span<const Label> train_y, const Matrix& valid_x,
                                    std::span<const Label> valid_y, const std::vector<TrainConfig>& grid,
                                    std::size_t n_classes = 0, std::size_t jobs = 1) {
    if (grid.empty()) throw ParameterError("grid_search: empty grid");
    if (valid_x.rows() != valid_y.size() || valid_y.empty())
        throw ShapeError("grid_search: validation features and labels differ in length or are empty");
    if (n_classes == 0) n_classes = std::max(infer_n_classes(train_y), infer_n_classes(valid_y));

    GridSearchResult res;
    double best_acc = -1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const TrainedModel m = fit(grid[g], train_x, train_y, n_classes, jobs);
        const auto preds = predict(m, valid_x, jobs);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i].label == valid_y[i];
        const double acc = static_cast<double>(correct) / static_cast<double>(preds.size());
        res.table.emplace_back(grid[g], acc);
        if (acc > best_acc) {
            best_acc = acc;
            res.best_index = g;
        }
    }
    res.best = grid[res.best_index];
    return res;
}

/// C in {1, 10, 100} x gamma in {auto_scale, 0.01, 0.001}.
inline std::vector<TrainConfig> default_svm_grid(const SvmParams& base = {}) {
    std::vector<TrainConfig> grid;
    for (double c : {1.0, 10.0, 100.0})
        for (std::optional<double> g : {std::optional<double>{}, std::optional<double>{0.01}, std::optional<double>{0.001}}) {
            TrainConfig cfg = TrainConfig::defaults(ClassifierKind::Svm);
            cfg.svm = base;
            cfg.svm.C = c;
            cfg.svm.gamma = g;
            grid.push_back(cfg);
        }
    return grid;
}

}  // namespace digitbench
