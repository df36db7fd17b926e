#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/corpus.hpp"
#include "cogspeech/pause.hpp"

namespace cogspeech {

// Class-indexed confusion counts; rows are true labels, columns predictions.
struct ConfusionMatrix {
    std::vector<Diagnosis> classes;
    std::vector<std::size_t> counts;  // row-major classes.size() x classes.size()

    static ConfusionMatrix build(std::span<const Diagnosis> y_true, std::span<const Diagnosis> y_pred,
                                 std::span<const Diagnosis> classes) {
        if (y_true.size() != y_pred.size())
            throw DataError("confusion matrix: length mismatch (" + std::to_string(y_true.size()) + " vs " +
                            std::to_string(y_pred.size()) + ")");
        ConfusionMatrix cm;
        cm.classes.assign(classes.begin(), classes.end());
        cm.counts.assign(classes.size() * classes.size(), 0);
        for (std::size_t i = 0; i < y_true.size(); ++i)
            ++cm.counts[cm.index_of(y_true[i]) * cm.classes.size() + cm.index_of(y_pred[i])];
        return cm;
    }

    std::size_t index_of(Diagnosis d) const {
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] == d) return i;
        throw DataError("label '" + std::string(to_string(d)) + "' not in class list");
    }

    std::size_t at(std::size_t true_row, std::size_t pred_col) const {
        return counts[true_row * classes.size() + pred_col];
    }

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto c : counts) n += c;
        return n;
    }
};

// Unweighted mean of per-class F1. A class with no true and no predicted
// samples contributes F1 = 0, which penalizes classifiers that never
// predict a minority class.
inline double macro_f1(std::span<const Diagnosis> y_true, std::span<const Diagnosis> y_pred,
                       std::span<const Diagnosis> classes) {
    const ConfusionMatrix cm = ConfusionMatrix::build(y_true, y_pred, classes);
    const std::size_t k = cm.classes.size();
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double tp = static_cast<double>(cm.at(c, c));
        double fp = 0.0, fn = 0.0;
        for (std::size_t o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += static_cast<double>(cm.at(o, c));
            fn += static_cast<double>(cm.at(c, o));
        }
        const double denom = 2.0 * tp + fp + fn;
        sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
    }
    return sum / static_cast<double>(k);
}

inline double macro_f1_three_class(std::span<const Diagnosis> y_true, std::span<const Diagnosis> y_pred) {
    return macro_f1(y_true, y_pred, kThreeClasses);
}

inline double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size())
        throw DataError("rmse: length mismatch (" + std::to_string(y_true.size()) + " vs " +
                        std::to_string(y_pred.size()) + ")");
    if (y_true.empty()) throw DataError("rmse: empty input");
    double ss = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double d = y_true[i] - y_pred[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(y_true.size()));
}

// ---------------------------------------------------------------------------
// Word error rate: minimum edit distance with unit substitution,
// insertion, and deletion costs, over the reference length. Kept as
// integer counts so the rate is exact as a rational.
// ---------------------------------------------------------------------------

struct EditCounts {
    std::size_t edits = 0;
    std::size_t ref_len = 0;

    double rate() const { return static_cast<double>(edits) / static_cast<double>(ref_len); }
};

inline EditCounts wer_counts(std::span<const std::string> ref, std::span<const std::string> hyp) {
    if (ref.empty()) throw DataError("wer: empty reference");
    const std::size_t n = ref.size(), m = hyp.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return EditCounts{prev[m], n};
}

inline double wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
    return wer_counts(ref, hyp).rate();
}

// Lowercases and drops pause symbols; pause marks are not spoken words.
inline std::vector<std::string> wer_normalize(std::span<const std::string> tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (is_pause_symbol(t)) continue;
        std::string lower = t;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.push_back(std::move(lower));
    }
    return out;
}

}  // namespace cogspeech
