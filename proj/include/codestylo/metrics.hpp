#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "codestylo/common.hpp"

namespace stylo {

// Binary classification metrics; positive class is "ai" (label 1).
struct MetricsRow {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> auc_roc;  // absent when only one class is present

    int tp = 0, tn = 0, fp = 0, fn = 0;
};

// Rank-statistic AUC with midrank tie handling. Returns nothing when either
// class is empty.
inline std::optional<double> auc_roc(const std::vector<double>& scores,
                                     const std::vector<int>& labels) {
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double pos = 0.0, rank_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == 1) {
            pos += 1.0;
            rank_sum += rank[k];
        }
    }
    double neg = static_cast<double>(n) - pos;
    if (pos == 0.0 || neg == 0.0) return std::nullopt;
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

inline MetricsRow compute_metrics(const std::vector<double>& probabilities,
                                  const std::vector<int>& labels,
                                  double threshold = 0.5) {
    if (probabilities.size() != labels.size() || probabilities.empty())
        throw Error("compute_metrics: probability/label length mismatch or empty");
    MetricsRow m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        bool pred = probabilities[i] >= threshold;
        bool actual = labels[i] == 1;
        if (pred && actual) ++m.tp;
        else if (pred && !actual) ++m.fp;
        else if (!pred && actual) ++m.fn;
        else ++m.tn;
    }
    double n = static_cast<double>(labels.size());
    m.accuracy = (m.tp + m.tn) / n;
    m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.auc_roc = auc_roc(probabilities, labels);
    return m;
}

}  // namespace stylo
