#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/forest.hpp"
#include "digitbench/gbdt.hpp"
#include "digitbench/knn.hpp"
#include "digitbench/matrix.hpp"
#include "digitbench/prediction.hpp"
#include "digitbench/svm.hpp"

namespace digitbench {

enum class ClassifierKind { Knn, Svm, Rf, Gbdt };

inline std::string_view to_string(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::Knn: return "knn";
        case ClassifierKind::Svm: return "svm";
        case ClassifierKind::Rf: return "rf";
        case ClassifierKind::Gbdt: return "gbdt";
    }
    return "unknown";
}

inline ClassifierKind classifier_kind_from_string(std::string_view s) {
    if (s == "knn") return ClassifierKind::Knn;
    if (s == "svm") return ClassifierKind::Svm;
    if (s == "rf") return ClassifierKind::Rf;
    if (s == "gbdt") return ClassifierKind::Gbdt;
    throw ParameterError("unknown classifier '" + std::string(s) + "'");
}

/// Which classifier to train, with a parameter block for every kind. Only
/// the block matching `kind` is read.
struct TrainConfig {
    ClassifierKind kind = ClassifierKind::Svm;
    KnnParams knn;
    SvmParams svm;
    ForestParams rf;
    GbdtParams gbdt;

    static TrainConfig defaults(ClassifierKind k) {
        TrainConfig c;
        c.kind = k;
        return c;
    }

    void validate() const {
        switch (kind) {
            case ClassifierKind::Knn:
                if (knn.k < 1) throw ParameterError("knn.k must be >= 1");
                if (!(knn.minkowski_p >= 1)) throw ParameterError("knn.p must be >= 1");
                break;
            case ClassifierKind::Svm:
                if (!(svm.C > 0)) throw ParameterError("svm.c must be > 0");
                if (svm.gamma && !(*svm.gamma > 0)) throw ParameterError("svm.gamma must be > 0");
                if (!(svm.tol > 0)) throw ParameterError("svm.tol must be > 0");
                break;
            case ClassifierKind::Rf:
                if (rf.n_trees < 1 || rf.max_depth < 1) throw ParameterError("rf: n_trees and max_depth must be >= 1");
                break;
            case ClassifierKind::Gbdt:
                if (gbdt.n_rounds < 1 || gbdt.max_depth < 1)
                    throw ParameterError("gbdt: n_rounds and max_depth must be >= 1");
                if (!(gbdt.row_subsample > 0 && gbdt.row_subsample <= 1) ||
                    !(gbdt.col_subsample > 0 && gbdt.col_subsample <= 1))
                    throw ParameterError("gbdt: subsample fractions must lie in (0, 1]");
                break;
        }
    }

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Short human-readable parameter summary of the active block.
inline std::string describe(const TrainConfig& c) {
    std::ostringstream os;
    os << to_string(c.kind) << '(';
    switch (c.kind) {
        case ClassifierKind::Knn: os << "k=" << c.knn.k << ", p=" << c.knn.minkowski_p; break;
        case ClassifierKind::Svm:
            os << "C=" << c.svm.C << ", gamma=";
            if (c.svm.gamma) os << *c.svm.gamma;
            else os << "auto_scale";
            break;
        case ClassifierKind::Rf: os << "trees=" << c.rf.n_trees << ", depth=" << c.rf.max_depth; break;
        case ClassifierKind::Gbdt:
            os << "rounds=" << c.gbdt.n_rounds << ", depth=" << c.gbdt.max_depth << ", lr=" << c.gbdt.learning_rate;
            break;
    }
    os << ')';
    return os.str();
}

using ModelState = std::variant<KnnModel, SvmModel, ForestModel, GbdtModel>;

/// Immutable fitted classifier of any kind.
struct TrainedModel {
    ModelState state;

    ClassifierKind kind() const {
        return static_cast<ClassifierKind>(state.index());
    }

    std::size_t n_classes() const {
        return std::visit([](const auto& m) { return m.n_classes; }, state);
    }
};

/// n_classes = 0 infers max label + 1 from the training labels.
inline TrainedModel fit(const TrainConfig& cfg, const Matrix& x, std::span<const Label> y, std::size_t n_classes = 0,
                        std::size_t jobs = 1) {
    cfg.validate();
    switch (cfg.kind) {
        case ClassifierKind::Knn: return {knn_fit(x, y, cfg.knn, n_classes)};
        case ClassifierKind::Svm: return {svm_fit(x, y, cfg.svm, n_classes)};
        case ClassifierKind::Rf: return {forest_fit(x, y, cfg.rf, n_classes, jobs)};
        case ClassifierKind::Gbdt: return {gbdt_fit(x, y, cfg.gbdt, n_classes, jobs)};
    }
    throw ParameterError("fit: unknown classifier kind");
}

inline std::vector<Prediction> predict(const TrainedModel& model, const Matrix& queries, std::size_t jobs = 1) {
    return std::visit(
        [&](const auto& m) -> std::vector<Prediction> {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, KnnModel>) return knn_predict(m, queries, jobs);
            else if constexpr (std::is_same_v<M, SvmModel>) return svm_predict(m, queries, jobs);
            else if constexpr (std::is_same_v<M, ForestModel>) return forest_predict(m, queries, jobs);
            else return gbdt_predict(m, queries, jobs);
        },
        model.state);
}

inline std::vector<Label> labels_of(const std::vector<Prediction>& preds) {
    std::vector<Label> out(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) out[i] = preds[i].label;
    return out;
}

}  // namespace digitbench
