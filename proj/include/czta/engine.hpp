#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "czta/config.hpp"
#include "czta/data_model.hpp"
#include "czta/kam.hpp"
#include "czta/objective.hpp"
#include "czta/optimizer.hpp"
#include "czta/priority_queue.hpp"

namespace czta {

struct LossSummary {
    double l_pe = 0.0;
    double l_mcrl = 0.0;
    double total = 0.0;
};

struct SampleOutcome {
    Prediction prediction;            // emitted before the optimizer step
    bool admitted = false;            // queue admission of this sample
    std::size_t pseudo_label = 0;     // text-only argmax used for admission
    double admission_entropy = 0.0;   // entropy of the text-only distribution
    LossSummary losses;
    bool update_applied = false;
    std::chrono::nanoseconds inference_latency{0};  // steps 1-5
    std::chrono::nanoseconds update_latency{0};     // backward + optimizer
};

struct Incident {
    std::uint64_t sample = 0;
    std::string message;
};

/// Scores below `threshold` become -inf; seen compositions (score +inf) are
/// never filtered.
[[nodiscard]] Vec apply_feasibility(std::span<const double> logits, std::span<const double> scores,
                                    double threshold);

[[nodiscard]] LogitMask feasibility_mask(std::span<const double> scores, double threshold);

/// Online adaptation over a stream of unit-norm features. Each call to
/// process_sample refines the prototypes, admits the sample into the queue
/// of its pseudo-label, emits the fused prediction and only then takes one
/// optimizer step on the deltas. The base prototypes are never modified.
class Engine {
public:
    /// Throws ConfigError when open-world mode lacks feasibility scores.
    Engine(PrototypeBank bank, LabelSpace labels, EngineConfig cfg,
           std::optional<FeasibilityScores> feasibility = std::nullopt);

    SampleOutcome process_sample(std::span<const double> feature);

    std::vector<SampleOutcome> run_stream(std::span<const Vec> features);

    [[nodiscard]] const PrototypeBank& bank() const noexcept { return bank_; }
    [[nodiscard]] const LabelSpace& labels() const noexcept { return labels_; }
    [[nodiscard]] const EngineConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const KamState& kam() const noexcept { return kam_; }
    [[nodiscard]] const QueueBank& queues() const noexcept { return queues_; }
    [[nodiscard]] const AdamW& optimizer() const noexcept { return optimizer_; }
    [[nodiscard]] const LogitMask& mask() const noexcept { return mask_; }
    [[nodiscard]] std::uint64_t sample_counter() const noexcept { return sample_counter_; }
    [[nodiscard]] const std::vector<Incident>& incidents() const noexcept { return incidents_; }

    void save_checkpoint(const std::filesystem::path& path) const;
    void load_checkpoint(const std::filesystem::path& path);

private:
    PrototypeBank bank_;
    LabelSpace labels_;
    EngineConfig cfg_;
    LogitMask mask_;
    KamState kam_;
    QueueBank queues_;
    AdamW optimizer_;
    std::uint64_t sample_counter_ = 0;
    std::vector<Incident> incidents_;
};

}  // namespace czta
