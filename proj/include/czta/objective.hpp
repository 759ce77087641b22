#pragma once

#include <optional>
#include <vector>

#include "czta/config.hpp"
#include "czta/data_model.hpp"
#include "czta/kam.hpp"
#include "czta/numerics.hpp"
#include "czta/priority_queue.hpp"

namespace czta {

/// Per-composition hard mask; `true` removes the composition (logit -inf).
/// An empty mask filters nothing.
using LogitMask = std::vector<bool>;

struct Prediction {
    Vec logits;
    Vec probs;
    std::size_t pseudo_label = 0;
    double entropy_fused = 0.0;
};

struct LossReport {
    double l_pe = 0.0;
    double l_mcrl = 0.0;
    double total = 0.0;
    Mat grad_t;
    Mat grad_v;
};

/// softmax(cos(f, t_c) / tau) over the rows of `prototypes`.
[[nodiscard]] Vec text_only_probs(std::span<const double> f, const Mat& prototypes, double tau,
                                  const LogitMask& mask = {});

/// exp(-beta (1 - f.v)); 0 for an absent visual prototype.
[[nodiscard]] double visual_affinity(std::span<const double> f, const std::optional<Vec>& v_row, double beta);

/// logit_c = f.t~_c + alpha A(f, v~_c), optionally divided by tau when
/// cfg.fused_temperature is set; masked compositions get -inf.
[[nodiscard]] Prediction fused_prediction(std::span<const double> f, const RefinedPrototypes& refined,
                                          const EngineConfig& cfg, double tau, const LogitMask& mask = {});

[[nodiscard]] double loss_pe(const Prediction& pred);

/// Symmetric InfoNCE between textual and visual rows, restricted to the
/// compositions with a visual row. Zero when fewer than two are present.
[[nodiscard]] double loss_mcrl(const Mat& t_tilde, const std::vector<std::optional<Vec>>& v_tilde, double tau);

/// Losses and closed-form gradients w.r.t. the deltas for an already refined
/// and scored sample.
[[nodiscard]] LossReport backward(std::span<const double> f, const RefinedPrototypes& refined,
                                  const Prediction& pred, const EngineConfig& cfg, double tau);

/// Refine, score and differentiate in one call.
[[nodiscard]] LossReport gradients(std::span<const double> f, const PrototypeBank& bank, const QueueBank& queues,
                                   const KamState& kam, const EngineConfig& cfg, const LogitMask& mask = {});

/// L_PE + lambda L_MCRL evaluated from scratch.
[[nodiscard]] double total_loss(std::span<const double> f, const PrototypeBank& bank,
                                const std::vector<std::optional<Vec>>& visual_means, const KamState& kam,
                                const EngineConfig& cfg, const LogitMask& mask = {});

struct FdGradient {
    Mat grad_t;
    Mat grad_v;
};

/// Central differences of total_loss w.r.t. every delta entry.
[[nodiscard]] FdGradient fd_gradient(std::span<const double> f, const PrototypeBank& bank, const QueueBank& queues,
                                     const KamState& kam, const EngineConfig& cfg, double step,
                                     const LogitMask& mask = {});

}  // namespace czta
