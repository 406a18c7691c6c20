#ifndef MLLP_METRICS_HPP
#define MLLP_METRICS_HPP

#include <vector>

#include "mllp/common.hpp"

namespace mllp {

/// Unweighted mean of per-class F1 scores. A class with zero support and
/// zero predictions is excluded from the average; a class with support
/// but no correct/predicted instances contributes 0.
inline double macro_f1(const std::vector<std::size_t>& predicted,
                       const std::vector<std::size_t>& truth, std::size_t class_count) {
    require(!predicted.empty(), "macro_f1: empty input");
    require(predicted.size() == truth.size(), "macro_f1: length mismatch");
    std::vector<std::size_t> tp(class_count, 0), fp(class_count, 0), fn(class_count, 0);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        require(predicted[i] < class_count && truth[i] < class_count,
                "macro_f1: class index out of range");
        if (predicted[i] == truth[i]) ++tp[truth[i]];
        else {
            ++fp[predicted[i]];
            ++fn[truth[i]];
        }
    }
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < class_count; ++c) {
        const std::size_t support = tp[c] + fn[c];
        const std::size_t predictions = tp[c] + fp[c];
        if (support == 0 && predictions == 0) continue;
        ++counted;
        const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
        sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / denom;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

/// Argmax over a prediction row, ties broken by the lowest class index.
inline std::size_t argmax_class(const double* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < n; ++c)
        if (row[c] > row[best]) best = c;
    return best;
}

} // namespace mllp

#endif
