#pragma once

#include <optional>
#include <vector>

#include "czta/config.hpp"
#include "czta/data_model.hpp"
#include "czta/numerics.hpp"
#include "czta/priority_queue.hpp"

namespace czta {

/// Knowledge-accumulation deltas: one trainable row per test composition for
/// each modality. Zero at construction.
struct KamState {
    Mat delta_t;
    Mat delta_v;

    KamState() = default;
    KamState(std::size_t compositions, std::size_t dim)
        : delta_t(compositions, dim), delta_v(compositions, dim) {}

    friend bool operator==(const KamState&, const KamState&) = default;
};

/// Prototypes after the delta update for one input feature, together with
/// everything the backward pass needs.
struct RefinedPrototypes {
    Mat t_tilde;
    std::vector<bool> t_degenerate;
    Vec t_norm;  // ||t_c + w_c dt_c||
    Vec w_t;

    std::vector<std::optional<Vec>> v_tilde;  // absent when the queue is empty or the row is degenerate
    Vec v_norm;
    Vec w_v;
};

/// w_c = logistic(-theta * cos(f, base_c)) for one base row.
[[nodiscard]] double adaptive_weight(std::span<const double> f, std::span<const double> base_row, double theta);

[[nodiscard]] Vec adaptive_weights(std::span<const double> f, const Mat& base, double theta);

/// normalize(base + w * delta), flagged degenerate below kNormEpsilon. A unit
/// base with a zero contribution from delta is returned unchanged.
[[nodiscard]] Normalized refine(std::span<const double> base_row, std::span<const double> delta_row, double w);

/// Refines every textual row and every visual row that has a queue mean.
[[nodiscard]] RefinedPrototypes refine_all(const PrototypeBank& bank,
                                           const std::vector<std::optional<Vec>>& visual_means,
                                           const KamState& kam, std::span<const double> f,
                                           const EngineConfig& cfg);

[[nodiscard]] RefinedPrototypes refine_all(const PrototypeBank& bank, const QueueBank& queues,
                                           const KamState& kam, std::span<const double> f,
                                           const EngineConfig& cfg);

}  // namespace czta
