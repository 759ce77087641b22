#pragma once

// Generalized CZSL evaluation: a scalar bias is added to every unseen
// composition's logit and swept from -inf to +inf. Each bias gives one
// (seen accuracy, unseen accuracy) pair; the curve through these pairs is
// summarized by its area, the best harmonic mean and the two extremes.

#include <string>
#include <vector>

#include "czta/data_model.hpp"
#include "czta/numerics.hpp"

namespace czta {

/// Offset placed on either side of every decision margin.
inline constexpr double kBiasOffset = 1e-6;

struct ScoreTable {
    Mat logits;                      // samples x compositions; -inf marks filtered compositions
    std::vector<std::size_t> truth;  // ground-truth composition per sample
    std::vector<bool> seen;          // per composition

    [[nodiscard]] std::size_t samples() const noexcept { return truth.size(); }
    void validate() const;
};

struct SweepPoint {
    double bias = 0.0;
    double seen_acc = 0.0;
    double unseen_acc = 0.0;
};

using SweepCurve = std::vector<SweepPoint>;

struct BiasedAccuracy {
    double seen_acc = 0.0;
    double unseen_acc = 0.0;
    bool seen_empty = false;    // no sample has a seen ground truth
    bool unseen_empty = false;  // no sample has an unseen ground truth
};

struct CurveSummary {
    double auc = 0.0;
    double best_hm = 0.0;
    double best_seen = 0.0;
    double best_unseen = 0.0;
};

struct Top1 {
    double comp = 0.0;
    double attr = 0.0;
    double obj = 0.0;
};

/// Sorted candidates: -inf, each distinct seen/unseen margin minus and plus
/// a small offset, +inf. The offset is kBiasOffset, shrunk to half the gap
/// when two margins are closer than that.
[[nodiscard]] std::vector<double> bias_candidates(const ScoreTable& table);

/// Predicted composition for sample `i` with `bias` added to unseen logits.
[[nodiscard]] std::size_t biased_prediction(const ScoreTable& table, std::size_t i, double bias);

[[nodiscard]] BiasedAccuracy accuracy_at_bias(const ScoreTable& table, double bias);

[[nodiscard]] SweepCurve sweep(const ScoreTable& table, const std::vector<double>& biases);
[[nodiscard]] SweepCurve sweep(const ScoreTable& table);

/// Trapezoidal area of unseen over seen accuracy, the best harmonic mean and
/// the best individual accuracies. If the smallest seen accuracy is above
/// zero the curve is extended horizontally to the unseen axis.
[[nodiscard]] CurveSummary auc_hm(const SweepCurve& curve);

[[nodiscard]] double harmonic_mean(double s, double u) noexcept;

/// Unbiased top-1 accuracy of the composition and of its two components.
[[nodiscard]] Top1 top1_report(const ScoreTable& table, const LabelSpace& labels);

struct PrefixPoint {
    std::size_t count = 0;
    double accuracy = 0.0;
    double seen_acc = 0.0;
    double unseen_acc = 0.0;
};

/// Unbiased top-1 accuracy over the first ceil(k/points * N) samples for
/// k = 1..points.
[[nodiscard]] std::vector<PrefixPoint> prefix_accuracy(const ScoreTable& table, std::size_t points);

[[nodiscard]] std::string curve_csv(const SweepCurve& curve);

}  // namespace czta
