#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "digitbench/error.hpp"

namespace digitbench {

using Label = int;

/// Class decision plus the per-class scores it was derived from.
/// Invariant: label == argmax(scores), ties to the lowest class index.
struct Prediction {
    Label label = 0;
    std::vector<double> scores;
};

inline Label argmax_lowest(std::span<const double> scores) {
    if (scores.empty()) throw StateError("argmax over an empty score vector");
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = c;
    return static_cast<Label>(best);
}

inline Prediction make_prediction(std::vector<double> scores) {
    const Label l = argmax_lowest(scores);
    return {l, std::move(scores)};
}

/// Number of classes implied by a label vector (max label + 1).
inline std::size_t infer_n_classes(std::span<const Label> labels) {
    Label mx = -1;
    for (Label l : labels) {
        if (l < 0) throw InputError("negative class label");
        mx = std::max(mx, l);
    }
    return static_cast<std::size_t>(mx + 1);
}

inline void check_labels(std::span<const Label> labels, std::size_t n_classes) {
    for (Label l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= n_classes) throw InputError("class label out of range");
}

}  // namespace digitbench
