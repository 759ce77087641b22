#pragma once

#include <cstdint>
#include <vector>

#include "czta/config.hpp"
#include "czta/data_model.hpp"
#include "czta/kam.hpp"
#include "czta/objective.hpp"
#include "czta/priority_queue.hpp"

namespace czta {

/// A small random adaptation state: bank, queues with a mix of empty,
/// partial and full entries, non-zero deltas and a feature.
struct GradcheckInstance {
    PrototypeBank bank;
    QueueBank queues;
    KamState kam;
    EngineConfig cfg;
    Vec feature;
    LogitMask mask;
};

struct GradcheckLimits {
    std::size_t max_compositions = 6;
    std::size_t max_dim = 8;
    std::size_t max_k = 3;
};

[[nodiscard]] GradcheckInstance random_instance(std::uint64_t seed, const GradcheckLimits& limits = {});

struct GradcheckResult {
    double max_rel_error = 0.0;
    std::size_t components = 0;
};

/// Relative error |a - b| / max(|b|, floor) per component, maximized.
[[nodiscard]] double max_relative_error(const Mat& analytic, const Mat& reference, double floor = 1e-8);

/// Central differences of the loss evaluated in extended precision by a
/// separate straight-line implementation.
[[nodiscard]] FdGradient reference_gradient(const GradcheckInstance& inst, double step = 1e-5);

[[nodiscard]] GradcheckResult check_instance(const GradcheckInstance& inst, double step = 1e-5);

}  // namespace czta
